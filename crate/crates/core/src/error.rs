use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing field `{0}`")]
    MissingField(&'static str),

    #[error("non-positive {field}: {value}")]
    NonPositive { field: &'static str, value: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("failed to parse parameter document: {0}")]
    Parse(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("negative tension {value} N on tendon {index}")]
    NegativeTension { index: usize, value: f64 },

    #[error("no non-negative tension set balances the requested load (constraint residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("singular linearization point: sigma_min(J_v) = {sigma_min:.3e} below {threshold:.3e}")]
    Singular { sigma_min: f64, threshold: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("tip force {magnitude:.4} N exceeds the configured cap of {cap:.4} N")]
    ForceCapExceeded { magnitude: f64, cap: f64 },

    #[error("anchor at distance {distance:.4} m is out of reach (backbone length {length:.4} m)")]
    Unreachable { distance: f64, length: f64 },

    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("sweep point (theta {theta_deg:.3} deg, delta {delta_deg:.3} deg, load {load:.4}) failed: {source}")]
    SweepPoint {
        theta_deg: f64,
        delta_deg: f64,
        load: f64,
        #[source]
        source: Box<Error>,
    },
}
