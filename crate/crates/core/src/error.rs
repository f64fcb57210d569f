use thiserror::Error;

/// Errors surfaced by the solver and diagnostic routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside the domain of the function")]
    OutsideDomain,

    #[error("polyhedron is infeasible")]
    Infeasible,

    #[error("active-set enumeration cap exceeded ({subsets} subsets, cap {cap})")]
    EnumerationCap { subsets: usize, cap: usize },

    #[error("vector is not a subgradient at the given point")]
    NotASubgradient,

    #[error("VI solver failed to reach tolerance {tol:e} within {iters} iterations")]
    ViNonconvergent { tol: f64, iters: usize },

    #[error("piece subproblem unbounded below; function data is not convex")]
    UnboundedPiece,

    #[error("point is infeasible for the affine constraint (violation {violation:e})")]
    InfeasibleForTheta { violation: f64 },

    #[error("multiplier set is empty at the given point")]
    EmptyMultiplierSet,

    #[error("all sampled pairs were degenerate (zero residual)")]
    DegenerateSamples,

    #[error("unknown builtin problem id: {0}")]
    UnknownBuiltin(String),

    #[error("invalid problem schema at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("oracle invariant violated: {0}")]
    OracleInvariant(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
