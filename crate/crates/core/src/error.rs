use thiserror::Error;

/// Errors raised by the reduction library.
///
/// Node indices carried by variants are 0-based; `Display` renders them
/// 1-based so messages line up with the file formats.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("class error: {0}")]
    Class(String),

    #[error("graph is not connected: {0}")]
    Connectivity(String),

    #[error("interior block is ill-conditioned (condition estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },

    #[error("singular pivot {pivot:.3e} while eliminating node {}", node + 1)]
    SingularPivot { node: usize, pivot: f64 },

    #[error("self-loop decomposition unavailable: {0}")]
    DecompositionUnavailable(String),

    #[error("injected currents are incompatible with a loop-less network (net injection {total:.3e})")]
    Compatibility { total: f64 },

    #[error("perturbation leaves an invalid Laplacian: {0}")]
    PerturbationInvalid(String),

    #[error("rank-one update is singular (denominator {denominator:.3e})")]
    SingularUpdate { denominator: f64 },

    #[error("reconstructed matrix is singular")]
    SingularReconstruction,

    #[error("resistances are not uniform (worst relative deviation {worst:.3e})")]
    Uniformity { worst: f64 },

    #[error("degenerate cutset: {0}")]
    CutsetDegenerate(String),

    #[error("internal invariant violated: {0}")]
    InvariantBreach(String),
}

pub type Result<T> = std::result::Result<T, Error>;
