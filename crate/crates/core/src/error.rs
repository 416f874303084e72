use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid {width}x{height}: width must be >= 2 and height >= 1")]
    InvalidGrid { width: u32, height: u32 },

    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("expected a {expected} pose, got {found}")]
    Convention {
        expected: &'static str,
        found: &'static str,
    },

    #[error("plane normal has |n_z| = {0:e}; ratio coefficient form is undefined")]
    DegenerateDivision(f64),

    #[error("B' = 0: the epipolar curve is a vertical great circle, not a function of u")]
    VerticalGreatCircle,

    #[error("relative baseline {0:e} is below the zero-baseline threshold")]
    ZeroBaseline(f64),

    #[error("degenerate epipolar plane: {0}")]
    DegeneratePlane(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("attention row {0} has every position masked")]
    AllMasked(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: missing convention tag")]
    ConventionMissing { line: usize },

    #[error("frame {frame}: {message}")]
    InvalidFrame { frame: usize, message: String },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("mask needs {required} bytes, over the memory budget of {budget} bytes")]
    MemoryBudget { required: u64, budget: u64 },

    #[error("no collision-free trajectory after {0} attempts")]
    TrajectoryInfeasible(usize),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
