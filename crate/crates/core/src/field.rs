//! Grid functions. A field stores one value per lattice node and vanishes
//! outside the domain mask unless it was built as an extended field.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Grid, Pairing};
use crate::math::{compensated_sum, pow, sqrt};

/// Lattice metadata a field is tied to.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridShape {
    pub dim: usize,
    pub half_extent: usize,
    pub h: f64,
}

impl GridShape {
    pub fn node_count(&self) -> usize {
        (2 * self.half_extent + 1).pow(self.dim as u32)
    }

    /// Cell volume `h^N`.
    pub fn cell_volume(&self) -> f64 {
        pow(self.h, self.dim as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Field {
    shape: GridShape,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self { shape: grid.shape(), values: vec![0.0; grid.node_count()] }
    }

    /// Sample `f` at interior nodes; zero elsewhere.
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: &Grid, mut f: F) -> Self {
        let mut out = Self::zeros(grid);
        for &i in grid.interior() {
            out.values[i] = f(&grid.point(i));
        }
        out
    }

    /// Wrap lattice values, zeroing nodes outside the mask.
    pub fn from_values(grid: &Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch);
        }
        for (v, &inside) in values.iter_mut().zip(grid.mask()) {
            if !inside {
                *v = 0.0;
            }
        }
        Ok(Self { shape: grid.shape(), values })
    }

    /// Wrap lattice values as given, including nodes outside the domain.
    pub fn extended(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { shape: grid.shape(), values })
    }

    /// Scatter values given in interior-node order.
    pub fn from_interior(grid: &Grid, interior_values: &[f64]) -> Result<Self> {
        if interior_values.len() != grid.interior().len() {
            return Err(Error::GridMismatch);
        }
        let mut out = Self::zeros(grid);
        for (&i, &v) in grid.interior().iter().zip(interior_values) {
            out.values[i] = v;
        }
        Ok(out)
    }

    /// Gather values at interior nodes.
    pub fn interior_values(&self, grid: &Grid) -> Vec<f64> {
        grid.interior().iter().map(|&i| self.values[i]).collect()
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.shape == grid.shape() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn check_same(&self, other: &Field) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Self {
        Self { shape: self.shape, values: self.values.iter().copied().map(f).collect() }
    }

    pub fn zip_map<F: FnMut(f64, f64) -> f64>(&self, other: &Field, mut f: F) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { shape: self.shape, values })
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// `(u⁺, u⁻)` with `u = u⁺ − u⁻`.
    pub fn parts(&self) -> (Self, Self) {
        (self.map(|v| v.max(0.0)), self.map(|v| (-v).max(0.0)))
    }

    /// `u∘σ` through a reflection pairing.
    pub fn reflected(&self, pairing: &Pairing) -> Self {
        let values = (0..self.values.len()).map(|i| pairing.reflected_value(&self.values, i)).collect();
        Self { shape: self.shape, values }
    }

    /// `⟨u, v⟩_h = h^N Σ u v`.
    pub fn inner_h(&self, other: &Field) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.shape.cell_volume() * crate::math::dot(&self.values, &other.values))
    }

    pub fn norm_h(&self) -> f64 {
        sqrt(self.shape.cell_volume() * crate::math::dot(&self.values, &self.values))
    }

    /// `(h^N Σ |u|^q)^{1/q}`.
    pub fn norm_q(&self, q: f64) -> f64 {
        let s = compensated_sum(self.values.iter().map(|v| pow(v.abs(), q)));
        pow(self.shape.cell_volume() * s, 1.0 / q)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
