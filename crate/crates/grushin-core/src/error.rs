use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular formula: {0}")]
    SingularFormula(String),
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),
    #[error("value overflows f64; scaled value {mantissa} * exp({exponent})")]
    Overflow { mantissa: f64, exponent: f64 },
    #[error("resonant case requires log handling: {0}")]
    Resonant(String),
    #[error("internal consistency: {0}")]
    InternalConsistency(String),
    #[error("certificate failed: {0}")]
    CertificateFailed(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("integrability violation on face {face}: {detail}")]
    IntegrabilityViolation { face: usize, detail: String },
    #[error("composition hypothesis violated for {pair}: {detail}")]
    CompositionHypothesis { pair: String, detail: String },
    #[error("weight lies on the boundary spectrum: {0}")]
    WeightOnSpectrum(String),
    #[error("invalid connection: {0}")]
    InvalidConnection(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
