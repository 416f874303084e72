//! File formats: text trajectories, PLKF Plücker fields, SEPM masks, PPM
//! images, clip manifests and correspondence lists.

mod binary;
mod dataset;
mod overlay;
mod ppm;
mod trajectory;

pub use binary::{read_plucker, read_sepm, write_plucker, write_sepm, PlkfFile, SepmFile, PLKF_MAGIC, SEPM_MAGIC};
pub use dataset::{
    read_correspondences, read_manifest, write_correspondences, write_frame_set, write_manifest, ClipManifest,
};
pub use overlay::{draw_epicurve, CURVE_COLOR, QUERY_COLOR};
pub use ppm::{read_ppm, write_ppm};
pub use trajectory::{parse_trajectory, read_trajectory, write_trajectory, TrajectoryRecord};

pub const FORMAT_VERSION: u32 = 1;

fn parse_err(line: usize, message: impl Into<String>) -> crate::Error {
    crate::Error::Parse {
        line,
        message: message.into(),
    }
}
