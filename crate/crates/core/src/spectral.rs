//! First eigenpair of the discrete operator `I`.

use alloc::boxed::Box;

use crate::energy::EnergyOperator;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::inverse_iteration;
use crate::math::sqrt;

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Normalized in `‖·‖_h`, nonnegative.
    pub phi1: Field,
    pub iterations: usize,
    /// `‖Iφ₁ − λ₁φ₁‖_h`.
    pub residual: f64,
}

/// Smallest eigenvalue of `I` by inverse iteration with a dense Cholesky
/// factorization. Converged when the eigen-residual is at most `tol`.
pub fn lambda1(op: &EnergyOperator, tol: f64, max_iter: usize) -> Result<EigenResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain("eigen tolerance must be positive".into()));
    }
    let n = op.len();
    let eig = inverse_iteration(&op.matrix(), n, tol, max_iter)?;
    // unit Euclidean vectors have ‖·‖_h = h^{N/2}, and the residual is
    // unchanged by the rescaling
    let scale = 1.0 / sqrt(op.cell_volume());
    let top = eig.vector.iter().fold(0.0f64, |m, v| m.max(*v));
    let values: alloc::vec::Vec<f64> = eig
        .vector
        .iter()
        .map(|&v| if v < 0.0 && v > -1e-13 * top { 0.0 } else { v * scale })
        .collect();
    let phi1 = Field::from_interior(op.grid(), &values)?;
    let result = EigenResult { lambda1: eig.value, phi1, iterations: eig.iterations, residual: eig.residual };
    if eig.converged {
        Ok(result)
    } else {
        Err(Error::EigenNotConverged(Box::new(result)))
    }
}

/// `ℰ(u,u) / ‖u‖²_h`.
pub fn rayleigh(op: &EnergyOperator, u: &Field) -> Result<f64> {
    let norm2 = u.inner_h(u)?;
    if !(norm2 > 0.0) {
        return Err(Error::Domain("Rayleigh quotient of the zero field".into()));
    }
    Ok(op.energy(u)? / norm2)
}
