use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("height must be positive and finite, got {0}")]
    NonPositiveHeight(f64),
    #[error("depth must be positive and finite, got {0}")]
    NonPositiveDepth(f64),
    #[error("degenerate boundary at sample {index}")]
    DegenerateBoundary { index: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("sample grid needs at least 4 samples, got {0}")]
    InvalidGrid(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid value for {0}")]
    InvalidValue(&'static str),
    #[error("camera is outside the room or too close to a wall")]
    CameraOutsideRoom,
    #[error("ray from the camera does not hit the room boundary")]
    NoIntersection,
    #[error("room generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("polygon is not simple")]
    NotSimple,
    #[error("too few pairs: {found} available, {required} required")]
    TooFewPairs { found: usize, required: usize },
    #[error("no consensus: best model has {inliers} inliers, {required} required")]
    NoConsensus { inliers: usize, required: usize },
    #[error("degenerate point configuration")]
    DegenerateConfiguration,
    #[error("polygon clipping failed: {0}")]
    ClippingFailure(&'static str),
}

impl Error {
    /// True for the two failure modes of robust pose estimation.
    pub fn is_registration_failure(&self) -> bool {
        matches!(self, Error::TooFewPairs { .. } | Error::NoConsensus { .. })
    }
}
