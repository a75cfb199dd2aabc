//! Table of the fractional normalization constant against its quadrature.

use nlsym_core::kernel::{fractional_normalization, normalization_by_quadrature};
use serde::Serialize;

use crate::error::Result;

/// Agreement required between the closed form and the quadrature.
pub const CONSTANT_TOL: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct ConstantRow {
    pub dim: usize,
    pub s: f64,
    pub gamma_formula: f64,
    pub quadrature: f64,
    pub relative_delta: f64,
    pub passes: bool,
}

pub fn constant_row(dim: usize, s: f64) -> Result<ConstantRow> {
    let gamma_formula = fractional_normalization(dim, s)?;
    let quadrature = normalization_by_quadrature(dim, s)?;
    let relative_delta = (gamma_formula - quadrature).abs() / gamma_formula.abs();
    Ok(ConstantRow { dim, s, gamma_formula, quadrature, relative_delta, passes: relative_delta <= CONSTANT_TOL })
}

/// Every pair of `dims × orders`, in that order.
pub fn constants_table(dims: &[usize], orders: &[f64]) -> Result<Vec<ConstantRow>> {
    dims.iter().flat_map(|&n| orders.iter().map(move |&s| constant_row(n, s))).collect()
}
