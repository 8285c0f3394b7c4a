use thiserror::Error;

/// Errors raised by stencil generation, operator assembly and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector or grid sizes are inconsistent, or a stencil does not fit on the grid.
    #[error("size error: {0}")]
    Size(String),

    /// A request exceeds the range in which the computation is guarded to be accurate.
    #[error("range error: {0}")]
    Range(String),

    /// A least-squares fit had too few usable points.
    #[error("fit error: {0}")]
    Fit(String),

    /// The eigensolver failed to meet its residual contract.
    #[error("eigensolver did not converge: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
