use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("phase undefined: on-axis field magnitude {magnitude:e} below tolerance at z = {z:e} m")]
    DegeneratePhase { z: f64, magnitude: f64 },

    #[error("phase sampling too coarse: step {step:.3} rad between z = {z0:e} and z = {z1:e} exceeds pi")]
    PhaseUndersampled { z0: f64, z1: f64, step: f64 },

    #[error("grid crosses the reflecting surface at z = {surface:e} m (grid min z = {z_min:e} m)")]
    SurfaceCrossing { surface: f64, z_min: f64 },

    #[error("half-maximum level not reached on the {side} side of the peak")]
    NoHalfMaxCrossing { side: &'static str },

    #[error("peak lies on the domain boundary; profile must have an interior maximum")]
    PeakOnBoundary,

    #[error("trap center is not a minimum along {axis} (curvature {curvature:e}); classified as saddle")]
    NegativeCurvature { axis: &'static str, curvature: f64 },

    #[error("window out of bounds: {0}")]
    WindowOutOfBounds(String),

    #[error("temperature {temperature:e} K is not below the trap depth {depth_kelvin:e} K")]
    TemperatureTooHigh { temperature: f64, depth_kelvin: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
