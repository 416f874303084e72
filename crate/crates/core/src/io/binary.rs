use std::io::{Read, Write};

use crate::epipolar::{BitSet, EpipolarMaskTensor, MaskParams};
use crate::error::{Error, Result};
use crate::geometry::{GridSpec, PluckerField};

use super::FORMAT_VERSION;

pub const PLKF_MAGIC: &[u8; 4] = b"PLKF";
pub const SEPM_MAGIC: &[u8; 4] = b"SEPM";

fn put_u32(w: &mut impl Write, x: usize) -> Result<()> {
    let x = u32::try_from(x).map_err(|_| Error::Format(format!("{x} does not fit in u32")))?;
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn check_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    if &b != magic {
        return Err(Error::Format(format!("bad magic {b:?}, expected {magic:?}")));
    }
    let version = get_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut b = [0u8; 1];
    if r.read(&mut b)? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    Ok(())
}

/// Writes fields of equal grid size as `f32` in `(frame, row, col, [m, d])`
/// order.
pub fn write_plucker(mut w: impl Write, fields: &[PluckerField]) -> Result<()> {
    let grid = fields.first().map_or(GridSpec::new(2, 1).expect("valid"), |f| f.grid);
    if fields.iter().any(|f| f.grid != grid) {
        return Err(Error::ShapeMismatch("Plücker fields differ in size".into()));
    }
    w.write_all(PLKF_MAGIC)?;
    put_u32(&mut w, FORMAT_VERSION as usize)?;
    put_u32(&mut w, fields.len())?;
    put_u32(&mut w, grid.height() as usize)?;
    put_u32(&mut w, grid.width() as usize)?;
    let mut buf = Vec::with_capacity(grid.width() as usize * 24);
    for field in fields {
        for chunk in field.rays.chunks(grid.width() as usize) {
            buf.clear();
            for ray in chunk {
                for x in ray.to_array() {
                    buf.extend_from_slice(&(x as f32).to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
    }
    Ok(())
}

/// Contents of a PLKF file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlkfFile {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl PlkfFile {
    pub fn ray(&self, frame: usize, row: usize, col: usize) -> [f32; 6] {
        let i = ((frame * self.height + row) * self.width + col) * 6;
        self.data[i..i + 6].try_into().expect("six floats")
    }
}

pub fn read_plucker(mut r: impl Read) -> Result<PlkfFile> {
    check_magic(&mut r, PLKF_MAGIC)?;
    let frames = get_u32(&mut r)? as usize;
    let height = get_u32(&mut r)? as usize;
    let width = get_u32(&mut r)? as usize;
    let n = frames * height * width * 6;
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    expect_eof(&mut r)?;
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("four bytes")))
        .collect();
    Ok(PlkfFile {
        frames,
        height,
        width,
        data,
    })
}

/// Writes masks of one pose set, one per query frame, in ascending
/// query-frame order.
pub fn write_sepm(mut w: impl Write, masks: &[EpipolarMaskTensor]) -> Result<()> {
    let first = masks
        .first()
        .ok_or_else(|| Error::Format("no query frames to write".into()))?;
    let (frames, params) = (first.frames(), *first.params());
    for m in masks {
        if m.frames() != frames || m.params() != &params {
            return Err(Error::ShapeMismatch("masks differ in frames or parameters".into()));
        }
    }
    if masks.windows(2).any(|p| p[0].query_frame() >= p[1].query_frame()) {
        return Err(Error::Format("query frames must be strictly ascending".into()));
    }
    w.write_all(SEPM_MAGIC)?;
    put_u32(&mut w, FORMAT_VERSION as usize)?;
    put_u32(&mut w, frames)?;
    put_u32(&mut w, params.grid.height() as usize)?;
    put_u32(&mut w, params.grid.width() as usize)?;
    put_u32(&mut w, params.k)?;
    w.write_all(&(params.tau as f32).to_le_bytes())?;
    put_u32(&mut w, masks.len())?;
    for m in masks {
        put_u32(&mut w, m.query_frame())?;
    }
    for m in masks {
        w.write_all(m.bits().as_bytes())?;
    }
    Ok(())
}

/// Contents of a SEPM file. `tau` keeps the stored single precision; the
/// masks carry it widened to `f64` and default `wrap_u`/`baseline_eps`,
/// which the format does not record.
#[derive(Debug, Clone, PartialEq)]
pub struct SepmFile {
    pub frames: usize,
    pub grid: GridSpec,
    pub k: usize,
    pub tau: f32,
    pub masks: Vec<EpipolarMaskTensor>,
}

impl SepmFile {
    pub fn query_frames(&self) -> Vec<usize> {
        self.masks.iter().map(|m| m.query_frame()).collect()
    }
}

pub fn read_sepm(mut r: impl Read) -> Result<SepmFile> {
    check_magic(&mut r, SEPM_MAGIC)?;
    let frames = get_u32(&mut r)? as usize;
    let h = get_u32(&mut r)?;
    let w = get_u32(&mut r)?;
    let k = get_u32(&mut r)? as usize;
    let mut tb = [0u8; 4];
    r.read_exact(&mut tb)?;
    let tau = f32::from_le_bytes(tb);
    let count = get_u32(&mut r)? as usize;
    let grid = GridSpec::new(w, h)?;
    let params = MaskParams::new(grid).with_k(k).with_tau(tau as f64);
    params.validate()?;
    let query_frames = (0..count)
        .map(|_| get_u32(&mut r).map(|q| q as usize))
        .collect::<Result<Vec<_>>>()?;
    if query_frames.windows(2).any(|p| p[0] >= p[1]) || query_frames.last().is_some_and(|&q| q >= frames) {
        return Err(Error::Format(format!("bad query frame list {query_frames:?}")));
    }
    let hw = grid.pixel_count();
    let len = hw * frames * hw;
    let masks = query_frames
        .into_iter()
        .map(|q| {
            let mut bytes = vec![0u8; len.div_ceil(8)];
            r.read_exact(&mut bytes)?;
            let bits = BitSet::from_bytes(len, bytes).ok_or_else(|| Error::Format("nonzero padding bits".into()))?;
            EpipolarMaskTensor::from_parts(q, frames, params, bits)
        })
        .collect::<Result<Vec<_>>>()?;
    expect_eof(&mut r)?;
    Ok(SepmFile {
        frames,
        grid,
        k,
        tau,
        masks,
    })
}
