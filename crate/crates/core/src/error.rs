use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates an invariant. `field` names the
    /// offending parameter so front ends can point at it.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("LO half-width M = {m} overlaps the signal band (must be < N/4 = {limit})")]
    LoBandTooWide { m: usize, limit: usize },

    #[error("signal mode {0} is listed more than once")]
    ModeCollision(usize),

    #[error("signal mode {p} violates the weak-signal limit: |alpha|^2 = {power} > {limit}")]
    SignalTooStrong { p: usize, power: f64, limit: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("ROI x={x0} y={y0} {width}x{height} lies outside the {cols}x{rows} frame")]
    RoiOutOfBounds {
        x0: usize,
        y0: usize,
        width: usize,
        height: usize,
        cols: usize,
        rows: usize,
    },

    #[error("mode {p} outside the valid range {min}..={max}")]
    ModeOutOfRange { p: usize, min: usize, max: usize },

    #[error("{what} needs at least {needed} samples, got {got}")]
    TooFewSamples {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("zero variance along {0}; use the histogram estimator instead")]
    ZeroVariance(String),

    #[error("both axes are {0}; a joint Q-function needs two distinct axes")]
    IdenticalAxes(String),

    #[error("no usable shots: all {excluded} shots were excluded")]
    NoUsableShots { excluded: usize },

    #[error("dark frames have zero variance; the readout-noise ratio is undefined")]
    ZeroDarkVariance,
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
