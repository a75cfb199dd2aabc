use alloc::boxed::Box;
use alloc::string::String;

use crate::spectral::EigenResult;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("tail mass infinite")]
    TailMassInfinite,
    #[error("field does not live on this grid")]
    GridMismatch,
    #[error("assembly needs about {required} bytes, cap is {cap} bytes")]
    ResourceLimit { required: usize, cap: usize },
    #[error("no exact reflection pairing for this half-space; use is_polarized, which interpolates")]
    ApproximatePairing,
    #[error("domain mask is not symmetric under the reflection")]
    AsymmetricMask,
    #[error("product degenerate, reseed")]
    DegenerateProduct,
    #[error("pair has zero norm")]
    ZeroNorm,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("linear system is singular")]
    Singular,
    #[error("inverse iteration hit the iteration cap (residual {})", .0.residual)]
    EigenNotConverged(Box<EigenResult>),
    #[error("descent failed: {0}")]
    Descent(String),
}
