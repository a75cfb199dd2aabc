//! Dense factorizations for the desk-scale systems the crate solves.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{fabs, sqrt, Compensated};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factor the row-major `n × n` matrix `a` (only the lower triangle is read).
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix size");
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let d = sqrt(d);
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                for k in 0..j {
                    s -= ri[k] * rj[k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut s = x[i];
            for k in 0..i {
                s -= row[k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }
}

/// LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix size");
        let mut lu = a.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(fabs(*v)));
        for k in 0..n {
            let (mut p, mut best) = (k, fabs(lu[k * n + k]));
            for i in (k + 1)..n {
                let v = fabs(lu[i * n + k]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-14 * scale || best == 0.0 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lu[i * n + k] * x[k];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// `y = A x` for a dense row-major matrix.
pub fn matvec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mut acc = Compensated::new();
            for (aij, xj) in a[i * n..(i + 1) * n].iter().zip(x) {
                acc.add(aij * xj);
            }
            acc.value()
        })
        .collect()
}

/// Outcome of [`inverse_iteration`].
#[derive(Clone, Debug)]
pub struct SmallestEigen {
    pub value: f64,
    /// Unit Euclidean norm, nonnegative sum.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `‖A x − λ x‖₂` for the unit vector `x`.
    pub residual: f64,
    pub converged: bool,
}

/// Smallest eigenpair of a symmetric positive definite matrix by inverse
/// iteration started from the all-ones vector. Stops once the eigen-residual
/// drops to `tol`.
pub fn inverse_iteration(a: &[f64], n: usize, tol: f64, max_iter: usize) -> Result<SmallestEigen> {
    let chol = Cholesky::factor(a, n)?;
    let mut x = vec![1.0 / sqrt(n as f64); n];
    let mut best: Option<SmallestEigen> = None;
    for it in 1..=max_iter {
        chol.solve_in_place(&mut x);
        let norm = sqrt(crate::math::dot(&x, &x));
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Singular);
        }
        let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for v in x.iter_mut() {
            *v *= sign / norm;
        }
        let ax = matvec(a, n, &x);
        let lambda = crate::math::dot(&ax, &x);
        let residual = sqrt(ax.iter().zip(&x).map(|(p, q)| (p - lambda * q) * (p - lambda * q)).sum());
        let done = residual <= tol;
        let candidate = SmallestEigen { value: lambda, vector: x.clone(), iterations: it, residual, converged: done };
        if done {
            return Ok(candidate);
        }
        if best.as_ref().map_or(true, |b| residual < b.residual) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one iteration"))
}
