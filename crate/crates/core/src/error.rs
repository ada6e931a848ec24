use thiserror::Error;

/// Errors raised by the lab's operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter violates a stochasticity or range invariant.
    #[error("invalid model: {location}: {detail}")]
    InvalidModel { location: String, detail: String },

    /// A policy table is malformed.
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    /// Shapes of two objects do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Exhaustive enumeration would exceed the configured cap.
    #[error("enumeration too large: {size} items exceeds cap {cap}")]
    EnumerationTooLarge { size: String, cap: u64 },

    /// Single-step revealing quantities need `S <= O`.
    #[error("overcomplete model (S={states} > O={observations}): single-step revealing condition cannot hold, use the m-step condition")]
    Overcomplete { states: usize, observations: usize },

    /// An emission (or emission-action) matrix is numerically rank deficient.
    #[error("rank-deficient emission matrix at step {step}: sigma_S = {sigma:e} <= tol {tol:e}")]
    RankDeficient { step: usize, sigma: f64, tol: f64 },

    /// A step window runs past the horizon.
    #[error("window overflow: step {step} + window {window} exceeds horizon {horizon}")]
    WindowOverflow {
        step: usize,
        window: usize,
        horizon: usize,
    },

    /// An argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The confidence set came out empty.
    #[error("empty confidence set: no candidate satisfies the revealing threshold alpha={alpha}")]
    EmptyConfidenceSet { alpha: f64 },

    /// Rejection sampling did not produce an acceptable model.
    #[error("generator exhausted after {tries} tries (best margin {best_margin} < {alpha_min})")]
    GeneratorExhausted {
        tries: usize,
        best_margin: f64,
        alpha_min: f64,
    },

    /// The eluder search visited more nodes than allowed.
    #[error("eluder search cap {cap} exceeded; longest sequence found so far has length {lower_bound} (a lower bound only)")]
    SearchCapExceeded { cap: u64, lower_bound: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
