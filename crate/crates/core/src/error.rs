use thiserror::Error;

/// Errors produced by the simulation and asymptotic machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("window [{n_min}, {n_max}] too small: {reason}")]
    WindowTooSmall { n_min: i64, n_max: i64, reason: String },

    #[error("signal reached the lattice boundary at t = {t:.4}: deviation {deviation:.3e} at site {site}")]
    BoundaryReached { t: f64, site: i64, deviation: f64 },

    #[error("step size underflow at t = {t:.6} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("spectral parameter {lambda} is within {distance:.1e} of a band edge")]
    BandEdge { lambda: f64, distance: f64 },

    #[error("near resonance at lambda = {lambda}: |W| = {wronskian:.3e}")]
    Resonance { lambda: f64, wronskian: f64 },

    #[error("pole at infinity")]
    PoleAtInfinity,

    #[error("degenerate surface: {0}")]
    DegenerateSurface(String),

    #[error("{what}: xi = {xi} lies outside the zone ({lo}, {hi})")]
    OutsideZone { what: &'static str, xi: f64, lo: f64, hi: f64 },

    #[error("root bracket failure in {0}")]
    Bracket(&'static str),

    #[error("flat background: left and right spectra coincide")]
    Flat,

    #[error("theta function vanished at {0}")]
    ThetaZero(String),

    #[error("calibration inconsistent: spread {spread:.3e} exceeds {limit:.1e}")]
    Calibration { spread: f64, limit: f64 },

    #[error("homology convention check failed: {0}")]
    Convention(String),

    #[error("mismatched windows in trajectory")]
    MismatchedWindows,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of user input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Invalid(_) | Error::WindowTooSmall { .. } | Error::Flat | Error::Io(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
