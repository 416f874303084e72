use rayon::prelude::*;

use super::{Rgb, Scene};
use crate::error::{Error, Result};
use crate::geometry::{pixel_direction, CameraPose, GridSpec, PixelCoord, Vec3};

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Rgb>,
}

impl Image {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = c;
    }

    /// Mean absolute channel difference in `[0, 255]`, skipping pixels where
    /// `exclude` is set.
    pub fn mean_abs_diff(&self, other: &Image, exclude: Option<&[bool]>) -> Result<f64> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let mut sum = 0u64;
        let mut n = 0u64;
        for (i, (a, b)) in self.pixels.iter().zip(&other.pixels).enumerate() {
            if exclude.is_some_and(|e| e[i]) {
                continue;
            }
            sum += (0..3).map(|c| a[c].abs_diff(b[c]) as u64).sum::<u64>();
            n += 3;
        }
        Ok(if n == 0 { 0.0 } else { sum as f64 / n as f64 })
    }
}

const MISS: Rgb = [0, 0, 0];

fn shade(scene: &Scene, origin: &Vec3, dir: &Vec3) -> Rgb {
    scene.cast(origin, dir).map_or(MISS, |h| h.color)
}

/// Direct ray cast of every equirectangular pixel center.
pub fn render_equirect(scene: &Scene, pose: &CameraPose, grid: GridSpec) -> Image {
    let pose = pose.cam_to_world();
    let w = grid.width() as usize;
    let mut pixels = vec![MISS; grid.pixel_count()];
    pixels.par_chunks_mut(w).enumerate().for_each(|(row, out)| {
        for (col, px) in out.iter_mut().enumerate() {
            let dir = pixel_direction(grid.center(row * w + col), grid);
            *px = shade(scene, &pose.translation, &pose.rotation.apply(dir.as_vec()));
        }
    });
    Image {
        width: grid.width(),
        height: grid.height(),
        pixels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeFace {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

pub const FACES: [CubeFace; 6] = [
    CubeFace::PosX,
    CubeFace::NegX,
    CubeFace::PosY,
    CubeFace::NegY,
    CubeFace::PosZ,
    CubeFace::NegZ,
];

impl CubeFace {
    /// `(right, down, forward)` in the camera frame. Horizontal faces run
    /// with increasing longitude; the caps are viewed with `+x` to the right.
    pub fn basis(self) -> [Vec3; 3] {
        let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
        match self {
            CubeFace::PosX => [-z, -y, x],
            CubeFace::NegX => [z, -y, -x],
            CubeFace::PosY => [x, z, y],
            CubeFace::NegY => [x, -z, -y],
            CubeFace::PosZ => [x, -y, z],
            CubeFace::NegZ => [-x, -y, -z],
        }
    }

    pub fn index(self) -> usize {
        FACES.iter().position(|&f| f == self).expect("listed")
    }

    /// Face hit by `d`, by largest absolute component (ties go to x, then y).
    pub fn of_direction(d: &Vec3) -> Self {
        let (ax, ay, az) = (d.x.abs(), d.y.abs(), d.z.abs());
        if ax >= ay && ax >= az {
            if d.x >= 0.0 {
                CubeFace::PosX
            } else {
                CubeFace::NegX
            }
        } else if ay >= az {
            if d.y >= 0.0 {
                CubeFace::PosY
            } else {
                CubeFace::NegY
            }
        } else if d.z >= 0.0 {
            CubeFace::PosZ
        } else {
            CubeFace::NegZ
        }
    }
}

/// Camera-frame ray through the center of face pixel `(a, b)`.
pub fn face_ray(face: CubeFace, a: u32, b: u32, size: u32) -> Vec3 {
    let [r, d, f] = face.basis();
    let s = size as f64;
    let x = 2.0 * (a as f64 + 0.5) / s - 1.0;
    let y = 2.0 * (b as f64 + 0.5) / s - 1.0;
    (r * x + d * y + f).normalize()
}

/// Six 90° perspective faces in [`FACES`] order.
pub fn render_cubemap(scene: &Scene, pose: &CameraPose, size: u32) -> Result<[Image; 6]> {
    if size < 8 {
        return Err(Error::OutOfRange(format!("face size {size} < 8")));
    }
    let pose = pose.cam_to_world();
    let f = size as usize;
    Ok(FACES.map(|face| {
        let mut pixels = vec![MISS; f * f];
        pixels.par_chunks_mut(f).enumerate().for_each(|(b, out)| {
            for (a, px) in out.iter_mut().enumerate() {
                let ray = face_ray(face, a as u32, b as u32, size);
                *px = shade(scene, &pose.translation, &pose.rotation.apply(&ray));
            }
        });
        Image {
            width: size,
            height: size,
            pixels,
        }
    }))
}

fn bilinear(img: &Image, x: f64, y: f64) -> Rgb {
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    let (x, y) = (x.clamp(0.0, max_x), y.clamp(0.0, max_y));
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as u32, y0 as u32);
    let (x1, y1) = ((x0 + 1).min(img.width - 1), (y0 + 1).min(img.height - 1));
    let (p00, p10, p01, p11) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
    std::array::from_fn(|c| {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        (top * (1.0 - fy) + bottom * fy).round() as u8
    })
}

/// Resamples a cubemap onto the equirectangular grid.
pub fn cubemap_to_equirect(faces: &[Image; 6], grid: GridSpec) -> Result<Image> {
    let size = faces[0].width;
    if faces.iter().any(|f| f.width != size || f.height != size) {
        return Err(Error::ShapeMismatch("cubemap faces must be equal squares".into()));
    }
    let s = size as f64;
    let w = grid.width() as usize;
    let mut pixels = vec![MISS; grid.pixel_count()];
    pixels.par_chunks_mut(w).enumerate().for_each(|(row, out)| {
        for (col, px) in out.iter_mut().enumerate() {
            let d = pixel_direction(grid.center(row * w + col), grid).into_inner();
            let face = CubeFace::of_direction(&d);
            let [r, dn, f] = face.basis();
            let depth = d.dot(&f);
            let x = d.dot(&r) / depth;
            let y = d.dot(&dn) / depth;
            *px = bilinear(
                &faces[face.index()],
                (x + 1.0) * s / 2.0 - 0.5,
                (y + 1.0) * s / 2.0 - 0.5,
            );
        }
    });
    Ok(Image {
        width: grid.width(),
        height: grid.height(),
        pixels,
    })
}

/// Pixels within `band` pixels (either axis, `u` wrapping) of a cube-face
/// boundary.
pub fn seam_mask(grid: GridSpec, band: u32) -> Vec<bool> {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let b = band as i64;
    let face_at = |col: i64, row: i64| {
        let p = PixelCoord {
            u: col.rem_euclid(w) as f64,
            v: row.clamp(0, h - 1) as f64,
        };
        CubeFace::of_direction(pixel_direction(p, grid).as_vec())
    };
    let faces: Vec<CubeFace> = (0..h * w).map(|i| face_at(i % w, i / w)).collect();
    (0..h * w)
        .into_par_iter()
        .map(|i| {
            let (col, row) = (i % w, i / w);
            let own = faces[i as usize];
            (-b..=b).any(|dv| {
                (-b..=b).any(|du| {
                    let (c, r) = ((col + du).rem_euclid(w), (row + dv).clamp(0, h - 1));
                    faces[(r * w + c) as usize] != own
                })
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{direction_pixel, Convention, Rotation3, UnitVec3};
    use crate::scene::{generate_scene, Room, Sphere};

    fn gray_room() -> Scene {
        Scene::uniform(
            Room {
                min: Vec3::new(-2.0, -2.0, -2.0),
                max: Vec3::new(2.0, 2.0, 2.0),
            },
            [128, 128, 128],
        )
    }

    #[test]
    fn uniform_room_is_uniform() {
        let scene = gray_room();
        let pose = CameraPose::identity(Convention::CamToWorld);
        let g = GridSpec::new(32, 16).unwrap();
        let img = render_equirect(&scene, &pose, g);
        assert!(img.pixels.iter().all(|&p| p == [128, 128, 128]));
        let faces = render_cubemap(&scene, &pose, 8).unwrap();
        assert!(faces.iter().all(|f| f.pixels.iter().all(|&p| p == [128, 128, 128])));
        let back = cubemap_to_equirect(&faces, g).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn sphere_ahead_at_forward_pixel() {
        let mut scene = gray_room();
        scene.spheres.push(Sphere {
            center: Vec3::new(0.0, 0.0, 1.0),
            radius: 0.2,
            color: [200, 10, 10],
        });
        let g = GridSpec::new(64, 32).unwrap();
        let img = render_equirect(&scene, &CameraPose::identity(Convention::CamToWorld), g);
        // +z sits on the wrap seam, between the last and first columns.
        let p = direction_pixel(&UnitVec3::try_new(Vec3::z()).unwrap(), g);
        assert_eq!(p.u, 63.5);
        assert_eq!(img.get(63, 16), [200, 10, 10]);
        assert_eq!(img.get(0, 16), [200, 10, 10]);
        // behind the camera stays gray
        assert_eq!(img.get(31, 16), [128, 128, 128]);
    }

    #[test]
    fn rotated_camera_sees_rotated_world() {
        let mut scene = gray_room();
        scene.spheres.push(Sphere {
            center: Vec3::new(1.0, 0.0, 0.0),
            radius: 0.2,
            color: [0, 0, 255],
        });
        // Camera turned to face +x.
        let pose = CameraPose::new(
            Rotation3::rot_y(std::f64::consts::FRAC_PI_2),
            Vec3::zeros(),
            Convention::CamToWorld,
        );
        assert!((pose.rotation.apply(&Vec3::z()) - Vec3::x()).norm() < 1e-12);
        let g = GridSpec::new(64, 32).unwrap();
        let img = render_equirect(&scene, &pose, g);
        assert_eq!(img.get(0, 16), [0, 0, 255]);
    }

    #[test]
    fn face_geometry() {
        let f = 16;
        let c = face_ray(CubeFace::PosZ, f / 2, f / 2, f);
        // (a, b) = (F/2, F/2) is half a pixel off center.
        assert!((c - Vec3::new(1.0 / 16.0, -1.0 / 16.0, 1.0).normalize()).norm() < 1e-12);
        let e = 1.0 - 1.0 / f as f64;
        let corner = face_ray(CubeFace::PosZ, 0, 0, f);
        assert!((corner - Vec3::new(-e, e, 1.0).normalize()).norm() < 1e-12);
        let corner = face_ray(CubeFace::PosZ, f - 1, f - 1, f);
        assert!((corner - Vec3::new(e, -e, 1.0).normalize()).norm() < 1e-12);
        for face in FACES {
            let [r, d, fw] = face.basis();
            assert_eq!(CubeFace::of_direction(&fw), face);
            assert!(r.dot(&d).abs() + r.dot(&fw).abs() + d.dot(&fw).abs() < 1e-15);
            for (a, b) in [(0, 0), (f - 1, 0), (0, f - 1), (f - 1, f - 1), (3, 9)] {
                assert_eq!(CubeFace::of_direction(&face_ray(face, a, b, f)), face);
            }
        }
    }

    #[test]
    fn forward_direction_samples_face_center() {
        let size = 8;
        let mut faces: [Image; 6] = std::array::from_fn(|_| Image::filled(size, size, [0, 0, 0]));
        for (a, b) in [(3, 3), (4, 3), (3, 4), (4, 4)] {
            faces[CubeFace::PosZ.index()].set(a, b, [90, 90, 90]);
        }
        let g = GridSpec::new(64, 33).unwrap();
        let img = cubemap_to_equirect(&faces, g).unwrap();
        let p = direction_pixel(&UnitVec3::try_new(Vec3::z()).unwrap(), g);
        assert_eq!((p.u, p.v), (63.5, 16.0));
        assert_eq!(img.get(63, 16), [90, 90, 90]);
        assert_eq!(img.get(0, 16), [90, 90, 90]);
        assert_eq!(img.get(31, 16), [0, 0, 0]);
    }

    #[test]
    fn seams_cover_face_changes() {
        let g = GridSpec::new(128, 64).unwrap();
        let seams = seam_mask(g, 2);
        let frac = seams.iter().filter(|&&s| s).count() as f64 / seams.len() as f64;
        assert!(frac > 0.05 && frac < 0.5, "{frac}");
        // The forward pixel is deep inside +z.
        assert!(!seams[g.index(0, 32)]);
        assert!(!seams[g.index(127, 32)]);
        // Longitude 45° on the equator is a seam.
        assert!(seams[g.index(15, 32)]);
        assert!(seams[g.index(16, 32)]);
    }

    #[test]
    fn deterministic_render() {
        let scene = generate_scene(7);
        let pose = CameraPose::new(Rotation3::rot_y(0.3), Vec3::new(0.1, 1.5, -0.2), Convention::CamToWorld);
        let g = GridSpec::new(64, 32).unwrap();
        assert_eq!(render_equirect(&scene, &pose, g), render_equirect(&scene, &pose, g));
        let w2c = pose.world_to_cam();
        assert_eq!(render_equirect(&scene, &w2c, g), render_equirect(&scene, &pose, g));
    }
}
