use thiserror::Error;

/// Errors across the simulator and its oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("system size must be between 2 and {max} spins (got {got})")]
    InvalidSize { got: usize, max: usize },

    #[error("configuration has {got} spins but {expected} were expected")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spin index {index} out of range for {n_spins} spins")]
    SpinIndexOutOfRange { index: usize, n_spins: usize },

    #[error("placket index {index} out of range for chain of length {len}")]
    PlacketIndexOutOfRange { index: usize, len: usize },

    #[error("chain needs at least 2 plackets (got {0})")]
    ChainTooShort(usize),

    #[error("step {step} outside schedule range 0..={total_steps}")]
    StepOutOfRange { step: u64, total_steps: u64 },

    #[error("{what} is capped at n = {cap}; n = {n} would visit {cost} states")]
    CapExceeded {
        what: &'static str,
        n: usize,
        cap: usize,
        cost: String,
    },

    #[error("dominant eigenpair is degenerate at omega = 0 (classical ground states come in Z2 pairs)")]
    DegenerateDominant,

    #[error("power iteration did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: u64, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid instance file: {0}")]
    InvalidInstanceFile(String),

    #[error("ensemble has no cells (instances = {instances}, repetitions = {repetitions})")]
    EmptyEnsemble { instances: usize, repetitions: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
