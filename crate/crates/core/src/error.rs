use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Physical parameters violate their invariants.
    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),

    /// Grid, solver or scenario configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// The explicit scheme would be unstable or lose positivity.
    #[error("stability violation: {bound} = {value:.6} exceeds {limit}; {remedy}")]
    Stability {
        bound: &'static str,
        value: f64,
        limit: f64,
        remedy: String,
    },

    /// A non-finite or non-positive concentration appeared during a run.
    #[error("solver diverged at step {step} (t = {time:.6e} s): {detail}")]
    Divergence {
        step: usize,
        time: f64,
        detail: String,
    },

    /// The receiver series never rises meaningfully above background.
    #[error("no signal: peak {peak:.6e} M is not above twice the background")]
    NoSignal { peak: f64 },
}
