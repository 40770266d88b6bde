use thiserror::Error;

/// Errors raised by the geometry pipeline and the command-line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expression evaluated outside its domain at `{node}` (point {point:?})")]
    Domain { node: String, point: Vec<f64> },

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("twisted metric is degenerate at {point:?} (det = {det:e})")]
    DegenerateTwistedMetric { point: Vec<f64>, det: f64 },

    #[error("rigging undefined at {point:?}")]
    RiggingUndefined { point: Vec<f64> },

    #[error("screen frame is degenerate at {point:?}")]
    DegenerateScreen { point: Vec<f64> },

    #[error("associated metric is degenerate at {point:?} (det = {det:e})")]
    DegenerateAssocMetric { point: Vec<f64>, det: f64 },

    #[error("alpha = {value:e} at {point:?} does not have the declared sign")]
    AlphaSignMismatch { point: Vec<f64>, value: f64 },

    #[error("alpha has a screen component {component:e} at {point:?}")]
    AlphaNotLeafConstant { point: Vec<f64>, component: f64 },

    #[error("rigging is not closed at {point:?} (|d eta| = {defect:e})")]
    NotClosed { point: Vec<f64>, defect: f64 },

    #[error("point {point:?} violates the null condition (residual {residual:e})")]
    NotNull { point: Vec<f64>, residual: f64 },

    #[error("sampling exhausted: admitted {admitted} of {requested} points after {attempts} attempts")]
    SamplingExhausted {
        requested: usize,
        admitted: usize,
        attempts: usize,
    },

    #[error("finite-difference stencil leaves the domain at {point:?}")]
    StencilOutOfDomain { point: Vec<f64> },

    #[error("degenerate plane (|denominator| = {denominator:e})")]
    DegeneratePlane { denominator: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Short machine-readable tag used for skip/failure bookkeeping in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Parse { .. } => "parse",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidSignature(_) => "invalid_signature",
            Error::DegenerateTwistedMetric { .. } => "degenerate_twisted_metric",
            Error::RiggingUndefined { .. } => "rigging_undefined",
            Error::DegenerateScreen { .. } => "degenerate_screen",
            Error::DegenerateAssocMetric { .. } => "degenerate_assoc_metric",
            Error::AlphaSignMismatch { .. } => "alpha_sign_mismatch",
            Error::AlphaNotLeafConstant { .. } => "alpha_not_leaf_constant",
            Error::NotClosed { .. } => "not_closed",
            Error::NotNull { .. } => "not_null",
            Error::SamplingExhausted { .. } => "sampling_exhausted",
            Error::StencilOutOfDomain { .. } => "stencil_out_of_domain",
            Error::DegeneratePlane { .. } => "degenerate_plane",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
