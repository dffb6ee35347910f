use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The primary queue has no stationary distribution (λ_p ≥ η).
    #[error("primary queue unstable: lambda_p = {lambda_p} is not below eta = {eta}")]
    UnstableQueue { lambda_p: f64, eta: f64 },

    #[error("energy drain per transmission is zero; availability is undefined")]
    ZeroDrain,
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn check_prob(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
