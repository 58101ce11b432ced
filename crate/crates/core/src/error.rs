use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode of the classification pipeline.
///
/// [`Error::is_rejection`] separates inputs that are invalid on their face
/// from numerical verification failures; the CLI maps the two groups to
/// distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix size mismatch: {0}")]
    SizeMismatch(String),

    #[error("covering denominators differ ({0} vs {1}); rescale to a common multiple first")]
    CoveringMismatch(u32, u32),

    #[error("lowest-order coefficient is singular after monomial normalization (exponent {exponent})")]
    NonInvertibleLeadingTerm { exponent: i64 },

    #[error("series valuation violation: {0}")]
    ValuationViolation(String),

    #[error("singular matrix: {0}")]
    SingularInput(String),

    #[error("matrices do not commute (residual {residual:.3e})")]
    NonCommutingPair { residual: f64 },

    #[error("inconsistent resonance graph between eigenvalues {i} and {j}")]
    InconsistentResonanceGraph { i: usize, j: usize },

    #[error("not an integral representative: {0}")]
    NotIntegralRepresentative(String),

    #[error("input window reaches exponent {have}, alignment needs {need}")]
    WindowTooShort { need: i64, have: i64 },

    #[error("x_{index} has a component at ({row}, {col}) whose weight was not resolved as q^{index}")]
    ResonanceMismatch { index: usize, row: usize, col: usize },

    #[error("verification failed: {what} (residual {residual:.3e})")]
    VerificationFailed { what: String, residual: f64 },

    #[error("galois cocycle is not constant (residual {residual:.3e})")]
    NotConstantCocycle { residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input document: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SizeMismatch(_) => "SizeMismatch",
            Error::CoveringMismatch(..) => "CoveringMismatch",
            Error::NonInvertibleLeadingTerm { .. } => "NonInvertibleLeadingTerm",
            Error::ValuationViolation(_) => "ValuationViolation",
            Error::SingularInput(_) => "SingularInput",
            Error::NonCommutingPair { .. } => "NonCommutingPair",
            Error::InconsistentResonanceGraph { .. } => "InconsistentResonanceGraph",
            Error::NotIntegralRepresentative(_) => "NotIntegralRepresentative",
            Error::WindowTooShort { .. } => "WindowTooShort",
            Error::ResonanceMismatch { .. } => "ResonanceMismatch",
            Error::VerificationFailed { .. } => "VerificationFailed",
            Error::NotConstantCocycle { .. } => "NotConstantCocycle",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse(_) => "Parse",
        }
    }

    /// True when the input itself is unacceptable, as opposed to a numerical
    /// tolerance or verification failure.
    pub fn is_rejection(&self) -> bool {
        matches!(
            self,
            Error::SizeMismatch(_)
                | Error::CoveringMismatch(..)
                | Error::NotIntegralRepresentative(_)
                | Error::WindowTooShort { .. }
                | Error::InvalidConfig(_)
                | Error::Parse(_)
                | Error::SingularInput(_)
                | Error::ValuationViolation(_)
        )
    }
}
