use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range. `field` names the parameter.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    #[error("numeric failure in {context}: {reason}")]
    Numeric { context: String, reason: String },

    /// The statistical model itself is malformed (e.g. a truth that is not a density).
    #[error("model error: {0}")]
    Model(String),

    #[error("basis mismatch: {left:?} vs {right:?}")]
    BasisMismatch {
        left: crate::bases::BasisKind,
        right: crate::bases::BasisKind,
    },

    #[error("incompatible representations: {0}")]
    Incompatible(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn numeric(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            reason: reason.into(),
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by user-supplied configuration rather than by the computation.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parameter { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks that a tempering exponent lies in (0, 1].
pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("{alpha} is outside (0, 1]")))
    }
}

pub(crate) fn check_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            field,
            format!("{value} must be positive and finite"),
        ))
    }
}
