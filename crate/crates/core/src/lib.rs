pub mod attention;
pub mod epipolar;
pub mod error;
pub mod geometry;
pub mod io;
pub mod oracle;
pub mod scene;
pub mod validate;

pub use error::{Error, Result};
