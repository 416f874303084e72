use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scene::Image;

/// Binary P6, maxval 255.
pub fn write_ppm(mut w: impl Write, img: &Image) -> Result<()> {
    write!(w, "P6\n{} {}\n255\n", img.width, img.height)?;
    let bytes: Vec<u8> = img.pixels.iter().flatten().copied().collect();
    w.write_all(&bytes)?;
    Ok(())
}

fn token(r: &mut impl BufRead) -> Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        match byte[0] {
            b'#' if tok.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            c if c.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    break;
                }
            }
            c => tok.push(c),
        }
    }
    String::from_utf8(tok).map_err(|e| Error::Format(e.to_string()))
}

fn number(r: &mut impl BufRead, what: &str) -> Result<u32> {
    let t = token(r)?;
    t.parse()
        .map_err(|_| Error::Format(format!("PPM {what}: {t:?} is not a number")))
}

pub fn read_ppm(mut r: impl BufRead) -> Result<Image> {
    if token(&mut r)? != "P6" {
        return Err(Error::Format("not a binary PPM (P6)".into()));
    }
    let width = number(&mut r, "width")?;
    let height = number(&mut r, "height")?;
    if number(&mut r, "maxval")? != 255 {
        return Err(Error::Format("only maxval 255 is supported".into()));
    }
    let mut bytes = vec![0u8; width as usize * height as usize * 3];
    r.read_exact(&mut bytes)?;
    Ok(Image {
        width,
        height,
        pixels: bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut img = Image::filled(3, 2, [1, 2, 3]);
        img.set(2, 1, [255, 0, 7]);
        let mut buf = Vec::new();
        write_ppm(&mut buf, &img).unwrap();
        assert!(buf.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(buf.len(), 11 + 18);
        assert_eq!(read_ppm(buf.as_slice()).unwrap(), img);
    }

    #[test]
    fn header_comments() {
        let mut data = b"P6 # made by hand\n2 1\n# maxval next\n255\n".to_vec();
        data.extend([9, 8, 7, 6, 5, 4]);
        let img = read_ppm(data.as_slice()).unwrap();
        assert_eq!(img.pixels, vec![[9, 8, 7], [6, 5, 4]]);
        assert!(read_ppm(&b"P3\n1 1\n255\n"[..]).is_err());
    }
}
