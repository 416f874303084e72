use crate::epipolar::{self, SampleConfig};
use crate::error::{Error, Result};
use crate::geometry::{ConventionMode, GridSpec, PixelCoord, RelativePose};
use crate::scene::{Image, Rgb};

pub const CURVE_COLOR: Rgb = [255, 32, 32];
pub const QUERY_COLOR: Rgb = [32, 255, 32];

fn mark(img: &mut Image, p: PixelCoord, color: Rgb) {
    let col = (p.u.round() as i64).rem_euclid(img.width as i64) as u32;
    let row = (p.v.round() as i64).clamp(0, img.height as i64 - 1) as u32;
    img.set(col, row, color);
}

/// Draws the `k` curve samples of `query` (a frame-`i` pixel of `img`'s
/// grid) and a cross at the query position onto a copy of the frame-`j`
/// panorama. Points are plotted as sampled, not joined.
pub fn draw_epicurve(
    img: &Image,
    rel: &RelativePose,
    query: PixelCoord,
    k: usize,
    mode: ConventionMode,
) -> Result<Image> {
    let grid = GridSpec::new(img.width, img.height)?;
    if !(query.u >= 0.0 && query.u < img.width as f64 && query.v >= 0.0 && query.v < img.height as f64) {
        return Err(Error::OutOfRange(format!(
            "query ({}, {}) outside the image",
            query.u, query.v
        )));
    }
    let plane = epipolar::epipolar_plane(rel, query, grid);
    let cfg = SampleConfig {
        mode,
        ..SampleConfig::new(k, grid)
    };
    let samples = epipolar::sample_epipolar(&plane, rel, &cfg);
    let mut out = img.clone();
    for (du, dv) in [
        (-2.0, 0.0),
        (-1.0, 0.0),
        (1.0, 0.0),
        (2.0, 0.0),
        (0.0, -2.0),
        (0.0, -1.0),
        (0.0, 1.0),
        (0.0, 2.0),
    ] {
        mark(
            &mut out,
            PixelCoord {
                u: query.u + du,
                v: query.v + dv,
            },
            QUERY_COLOR,
        );
    }
    for p in samples.points {
        mark(&mut out, p, CURVE_COLOR);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Rotation3, Vec3};

    fn marked(img: &Image) -> Vec<(u32, u32)> {
        (0..img.height)
            .flat_map(|r| (0..img.width).map(move |c| (c, r)))
            .filter(|&(c, r)| img.get(c, r) == CURVE_COLOR)
            .collect()
    }

    #[test]
    fn equatorial_curve_is_a_row() {
        // Sideways motion, query on the equator of a 33-row image.
        let img = Image::filled(64, 33, [0, 0, 0]);
        let rel = RelativePose::new(Rotation3::identity(), Vec3::x());
        let out = draw_epicurve(
            &img,
            &rel,
            PixelCoord { u: 5.0, v: 16.0 },
            250,
            ConventionMode::DefaultLatitude,
        )
        .unwrap();
        assert_eq!((out.width, out.height), (64, 33));
        let pts = marked(&out);
        assert!(pts.len() > 50);
        assert!(pts.iter().all(|&(_, r)| r == 16));
    }

    #[test]
    fn pure_rotation_marks_one_pixel() {
        let img = Image::filled(64, 32, [0, 0, 0]);
        let rel = RelativePose::new(Rotation3::rot_y(0.5), Vec3::zeros());
        let out = draw_epicurve(
            &img,
            &rel,
            PixelCoord { u: 20.0, v: 10.0 },
            250,
            ConventionMode::DefaultLatitude,
        )
        .unwrap();
        assert_eq!(marked(&out).len(), 1);
        assert!(draw_epicurve(
            &img,
            &rel,
            PixelCoord { u: 64.0, v: 1.0 },
            9,
            ConventionMode::DefaultLatitude
        )
        .is_err());
    }
}
