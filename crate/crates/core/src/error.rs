//! Error type shared by the solver library.

/// Errors surfaced by instance construction, oracles, and solver runs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid caller-supplied data (parameters, descriptors, vector shapes).
    #[error("invalid input: {0}")]
    Input(String),

    /// A block oracle broke its contract (negative entry, wrong length, ...).
    #[error("oracle contract violation: {0}")]
    OracleContract(String),

    /// A phase exceeded its call cap; the instance is most likely not
    /// normalized (lambda* far above 1), where termination is not guaranteed.
    #[error("call cap exceeded in phase {phase}: {calls} oracle calls (cap {cap}); instance likely not normalized")]
    CallCapExceeded { phase: usize, calls: u64, cap: u64 },

    /// A block is structurally infeasible (e.g. sink unreachable).
    #[error("infeasible block: {0}")]
    Infeasible(String),

    /// The request falls outside the supported (desk-scale) envelope.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An internal invariant failed; usually indicates an oracle contract
    /// breach that slipped past the per-call checks.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
