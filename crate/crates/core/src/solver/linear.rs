//! Linearization `W_e = U − U_e`, coupling classes and the maximum
//! principles for antisymmetric supersolutions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::System;
use crate::energy::EnergyOperator;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::Side;
use crate::linalg::{inverse_iteration, Lu};
use crate::math::{fabs, pow, GaussLegendre};
use crate::polarization::ExactReflection;

/// Matrix field `C(x)` on a set of lattice nodes, `m × m` row-major per node.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CouplingField {
    m: usize,
    nodes: Vec<usize>,
    entries: Vec<f64>,
}

impl CouplingField {
    /// `nodes` are increasing lattice indices; `entries` has `m²` values per node.
    pub fn new(m: usize, nodes: Vec<usize>, entries: Vec<f64>) -> Result<Self> {
        if m == 0 || entries.len() != m * m * nodes.len() {
            return Err(Error::Domain("coupling entries do not match m² per node".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("coupling nodes must increase strictly".into()));
        }
        Ok(Self { m, nodes, entries })
    }

    /// Same matrix at every node.
    pub fn uniform(m: usize, nodes: Vec<usize>, c: &[f64]) -> Result<Self> {
        let entries = nodes.iter().flat_map(|_| c.iter().copied()).collect();
        Self::new(m, nodes, entries)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Entries at the `k`-th node.
    pub fn at(&self, k: usize) -> &[f64] {
        let mm = self.m * self.m;
        &self.entries[k * mm..(k + 1) * mm]
    }

    /// Entries at lattice node `idx`, if present.
    pub fn get(&self, idx: usize) -> Option<&[f64]> {
        self.nodes.binary_search(&idx).ok().map(|k| self.at(k))
    }

    /// `max c_ij` over the given nodes (all nodes when `None`).
    pub fn max_entry(&self, subset: Option<&[usize]>) -> f64 {
        let mut m = f64::NEG_INFINITY;
        self.for_nodes(subset, |c| m = c.iter().fold(m, |a, &b| a.max(b)));
        m
    }

    fn for_nodes<F: FnMut(&[f64])>(&self, subset: Option<&[usize]>, mut f: F) {
        match subset {
            Some(s) => s.iter().filter_map(|&i| self.get(i)).for_each(f),
            None => (0..self.len()).for_each(|k| f(self.at(k))),
        }
    }
}

/// Outcome of [`linearize`].
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Linearization {
    /// `c_ij(x) = a_i δ_ij + ∫₀¹ ∂_j g_i(U_e + t(U − U_e)) dt` at interior nodes.
    pub c: CouplingField,
    /// `W_e = U − U∘σ`, one field per component.
    pub w: Vec<Field>,
    /// `max |I w_i − Σ_j c_ij w_j|` over interior nodes.
    pub residual: f64,
    /// `max |I w_i|`, the scale for `residual`.
    pub residual_scale: f64,
    /// Diagonal entries came from difference quotients (`q < 2`).
    pub diagonal_quotient: bool,
}

/// Gauss points for the `t`-integral.
const LINEARIZE_POINTS: usize = 8;

/// Mean-value linearization of the system along the reflection `refl`.
///
/// For `q ≥ 2` every entry is an 8-point Gauss–Legendre integral of the
/// closed-form partial derivatives. For `q < 2` the diagonal derivative
/// `(q−1)|u_j|^q|u_i|^{q−2}` blows up where `u_i` vanishes, so the diagonal
/// is recovered from `g_i(U) − g_i(U_e) = Σ_j c_ij w_j` instead.
pub fn linearize(sys: &System<'_>, u: &Field, v: &Field, refl: &ExactReflection) -> Result<Linearization> {
    let grid = sys.grid();
    u.check_grid(grid)?;
    v.check_grid(grid)?;
    refl.check_mask(grid)?;
    let q = sys.q();
    let gl = GaussLegendre::new(LINEARIZE_POINTS);
    let fields = [u, v];
    let reflected = [refl.reflect_field(u), refl.reflect_field(v)];
    let w: Vec<Field> = (0..2).map(|i| fields[i].zip_map(&reflected[i], |a, b| a - b)).collect::<Result<_>>()?;
    // nonlinear parts g_1 = |v|^q |u|^{q−2} u, g_2 = |u|^q |v|^{q−2} v
    let g = |i: usize, p: [f64; 2]| {
        let (a, b) = (p[i], p[1 - i]);
        if a == 0.0 {
            0.0
        } else {
            pow(fabs(b), q) * a.signum() * pow(fabs(a), q - 1.0)
        }
    };
    let cross = |p: [f64; 2]| {
        let prod = p[0] * p[1];
        if prod == 0.0 {
            0.0
        } else {
            q * prod.signum() * pow(fabs(prod), q - 1.0)
        }
    };
    let diag = |i: usize, p: [f64; 2]| {
        let (a, b) = (p[i], p[1 - i]);
        if a == 0.0 {
            0.0
        } else {
            (q - 1.0) * pow(fabs(b), q) * pow(fabs(a), q - 2.0)
        }
    };
    let quotient = q < 2.0;
    let nodes = grid.interior().to_vec();
    let mut entries = Vec::with_capacity(4 * nodes.len());
    for (k, &idx) in nodes.iter().enumerate() {
        let top = [u.values()[idx], v.values()[idx]];
        let bottom = [reflected[0].values()[idx], reflected[1].values()[idx]];
        let dw = [top[0] - bottom[0], top[1] - bottom[1]];
        let path = |t: f64| [bottom[0] + t * dw[0], bottom[1] + t * dw[1]];
        let c12 = gl.integrate(0.0, 1.0, |t| cross(path(t)));
        let mut c = [0.0; 4];
        c[1] = c12;
        c[2] = c12;
        for i in 0..2 {
            let integral = gl.integrate(0.0, 1.0, |t| diag(i, path(t)));
            let value = if quotient && dw[i] != 0.0 {
                (g(i, top) - g(i, bottom) - c12 * dw[1 - i]) / dw[i]
            } else {
                integral
            };
            c[3 * i] = sys.coefficients(i)[k] + value;
        }
        entries.extend_from_slice(&c);
    }
    let c = CouplingField::new(2, nodes, entries)?;
    let iw: Vec<Field> = w.iter().map(|f| sys.op().apply(f)).collect::<Result<_>>()?;
    let mut residual = 0.0f64;
    let mut scale = 0.0f64;
    for (k, &idx) in c.nodes().iter().enumerate() {
        let ck = c.at(k);
        for i in 0..2 {
            let lhs = iw[i].values()[idx];
            let rhs = ck[2 * i] * w[0].values()[idx] + ck[2 * i + 1] * w[1].values()[idx];
            residual = residual.max(fabs(lhs - rhs));
            scale = scale.max(fabs(lhs));
        }
    }
    Ok(Linearization { c, w, residual, residual_scale: scale, diagonal_quotient: quotient })
}

/// Coupling class of a linear system on a node set.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "class", rename_all = "snake_case"))]
pub enum Coupling {
    /// Some off-diagonal entry is negative.
    NotWeakly { node: usize, i: usize, j: usize, value: f64 },
    /// Off-diagonal entries are nonnegative but some pair vanishes on all of D.
    Weakly,
    /// Every off-diagonal pair is positive somewhere; the witness holds the
    /// nodes where all of them are positive at once, or the union of the
    /// per-pair sets when no node serves every pair.
    Fully { witness: Vec<usize> },
}

/// Classify `C` on the lattice nodes `d` (all nodes of `C` when `None`).
pub fn coupling_classify(c: &CouplingField, d: Option<&[usize]>) -> Coupling {
    let m = c.m();
    let nodes: Vec<usize> = match d {
        Some(s) => s.iter().copied().filter(|&i| c.get(i).is_some()).collect(),
        None => c.nodes().to_vec(),
    };
    for &idx in &nodes {
        let e = c.get(idx).expect("filtered");
        for i in 0..m {
            for j in 0..m {
                if i != j && e[i * m + j] < 0.0 {
                    return Coupling::NotWeakly { node: idx, i, j, value: e[i * m + j] };
                }
            }
        }
    }
    if m == 1 {
        return Coupling::Fully { witness: nodes };
    }
    let all_positive = |e: &[f64]| (0..m).all(|i| (0..m).all(|j| i == j || e[i * m + j] > 0.0));
    let common: Vec<usize> = nodes.iter().copied().filter(|&i| all_positive(c.get(i).unwrap())).collect();
    if !common.is_empty() {
        return Coupling::Fully { witness: common };
    }
    let mut union = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let set: Vec<usize> = nodes.iter().copied().filter(|&x| c.get(x).unwrap()[i * m + j] > 0.0).collect();
            if set.is_empty() {
                return Coupling::Weakly;
            }
            union.extend(set);
        }
    }
    union.sort_unstable();
    union.dedup();
    Coupling::Fully { witness: union }
}

/// Positions of `d` in the interior ordering, after checking that every node
/// is interior and strictly on the `H` side.
fn positions(op: &EnergyOperator, refl: &ExactReflection, d: &[usize]) -> Result<Vec<usize>> {
    let grid = op.grid();
    refl.check_mask(grid)?;
    if d.is_empty() {
        return Err(Error::Domain("empty node set".into()));
    }
    d.iter()
        .map(|&i| {
            if refl.side(i) != Side::Inside {
                return Err(Error::Domain(format!("node {i} is not strictly inside the half-space")));
            }
            grid.interior_position(i).ok_or_else(|| Error::Domain(format!("node {i} is not interior")))
        })
        .collect()
}

/// Matrix of `I` on antisymmetric fields supported in `d` (and its mirror
/// image), in `d`'s node order:
/// `B_xy = (δ_xy (deg_x + W(x,σx)) − W(x,y) + W(x,σy)) / h^N`.
/// Off-diagonal entries are `≤ 0` because `|x − y| ≤ |x − σy|` on one side.
pub fn antisymmetric_matrix(op: &EnergyOperator, refl: &ExactReflection, d: &[usize]) -> Result<Vec<f64>> {
    let pos = positions(op, refl, d)?;
    let grid = op.grid();
    let mirror: Vec<usize> = d
        .iter()
        .map(|&i| grid.interior_position(refl.perm()[i]).expect("symmetric mask"))
        .collect();
    let deg = op.degrees();
    let cell = op.cell_volume();
    let n = d.len();
    let mut b = vec![0.0; n * n];
    for a in 0..n {
        for c in 0..n {
            let direct = if a == c { 0.0 } else { op.weight(pos[a], pos[c]) };
            b[a * n + c] = (op.weight(pos[a], mirror[c]) - direct) / cell;
        }
        b[a * n + a] += deg[pos[a]] / cell;
    }
    Ok(b)
}

/// First eigenvalue `Λ₁(D)` of `I` on antisymmetric fields supported in `d`.
pub fn antisymmetric_lambda1(op: &EnergyOperator, refl: &ExactReflection, d: &[usize]) -> Result<f64> {
    let b = antisymmetric_matrix(op, refl, d)?;
    let n = d.len();
    let scale = b.iter().step_by(n + 1).fold(0.0f64, |m, x| m.max(*x));
    Ok(inverse_iteration(&b, n, 1e-10 * scale, 10_000)?.value)
}

/// Which maximum principle to exercise.
#[derive(Clone, Debug)]
pub enum MpMode {
    /// Solve `(I − C) W = F` on `D` with `W = 0` on `H∖D`; `rhs` is `m·|D|`
    /// values, component-major, `≥ 0`. Negative entries of `W` below
    /// `−tol · max|W|` count as violations.
    SmallVolume { rhs: Vec<f64>, tol: f64 },
    /// Check strict positivity of a given antisymmetric supersolution.
    /// Values within `tol` of zero count as zero for the sign premise and
    /// for the alternative `W ≡ 0`; a converged solution symmetric about the
    /// plane leaves rounding noise there.
    Strong { w: Vec<Field>, tol: f64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "verdict", rename_all = "snake_case"))]
pub enum MpVerdict {
    /// Every component is `≥ 0` on D (small volume) or `> 0` on the inner
    /// sub-mask (strong); `min` is the smallest value seen.
    Holds { min: f64 },
    /// The strong alternative `W ≡ 0` on D.
    Vanishes,
    Violated { node: usize, component: usize, value: f64 },
    HypothesisNotMet { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MpReport {
    pub verdict: MpVerdict,
    /// `Λ₁(D)`, computed in small-volume mode.
    pub lambda1_d: Option<f64>,
    /// `2^{m−1} c_∞` with `c_∞ = max(max c_ij, 0)` on D.
    pub coupling_bound: f64,
    /// Solution of the linear problem, component-major on D.
    pub solution: Vec<f64>,
}

impl MpReport {
    pub fn holds(&self) -> bool {
        matches!(self.verdict, MpVerdict::Holds { .. } | MpVerdict::Vanishes)
    }
}

/// Maximum-principle harness on a node set `d` of the half-space of `refl`.
///
/// Small volume: if `C` is weakly coupled and `Λ₁(D) > 2^{m−1} c_∞`, then
/// `B − C` is a Z-matrix mapping the Perron vector of `B` to a positive
/// vector, so it is a nonsingular M-matrix and `F ≥ 0` forces `W ≥ 0`.
/// Strong: a fully coupled system with `W ≥ 0` on `H` is either `≡ 0` on D
/// or positive on every node of D whose lattice neighbours all lie in D.
pub fn mp_check(
    op: &EnergyOperator,
    refl: &ExactReflection,
    c: &CouplingField,
    d: &[usize],
    mode: &MpMode,
) -> Result<MpReport> {
    let m = c.m();
    positions(op, refl, d)?;
    if d.iter().any(|&i| c.get(i).is_none()) {
        return Err(Error::Domain("coupling field does not cover the node set".into()));
    }
    let c_inf = c.max_entry(Some(d)).max(0.0);
    let coupling_bound = pow(2.0, (m - 1) as f64) * c_inf;
    let class = coupling_classify(c, Some(d));
    let not_met = |reason: String| MpReport {
        verdict: MpVerdict::HypothesisNotMet { reason },
        lambda1_d: None,
        coupling_bound,
        solution: Vec::new(),
    };
    match mode {
        MpMode::SmallVolume { rhs, tol } => {
            let n = d.len();
            if rhs.len() != m * n {
                return Err(Error::Domain(format!("right-hand side needs {} values", m * n)));
            }
            if rhs.iter().any(|&f| f < 0.0) {
                return Err(Error::Domain("right-hand side must be nonnegative".into()));
            }
            if let Coupling::NotWeakly { node, i, j, value } = class {
                return Ok(not_met(format!("c[{i}][{j}] = {value} < 0 at node {node}")));
            }
            let lambda = antisymmetric_lambda1(op, refl, d)?;
            if !(lambda > coupling_bound) {
                let mut r = not_met(format!("Λ₁(D) = {lambda} does not exceed 2^(m−1)·c∞ = {coupling_bound}"));
                r.lambda1_d = Some(lambda);
                return Ok(r);
            }
            let b = antisymmetric_matrix(op, refl, d)?;
            let size = m * n;
            let mut a = vec![0.0; size * size];
            for i in 0..m {
                for x in 0..n {
                    let row = i * n + x;
                    for y in 0..n {
                        a[row * size + i * n + y] = b[x * n + y];
                    }
                    let cx = c.get(d[x]).expect("covered");
                    for j in 0..m {
                        a[row * size + j * n + x] -= cx[i * m + j];
                    }
                }
            }
            let sol = Lu::factor(&a, size)?.solve(rhs);
            let scale = sol.iter().fold(0.0f64, |s, x| s.max(fabs(*x)));
            let mut worst = (f64::INFINITY, 0usize);
            for (k, &x) in sol.iter().enumerate() {
                if x < worst.0 {
                    worst = (x, k);
                }
            }
            let verdict = if worst.0 >= -tol * scale {
                MpVerdict::Holds { min: worst.0 }
            } else {
                MpVerdict::Violated { node: d[worst.1 % n], component: worst.1 / n, value: worst.0 }
            };
            Ok(MpReport { verdict, lambda1_d: Some(lambda), coupling_bound, solution: sol })
        }
        MpMode::Strong { w, tol } => {
            let grid = op.grid();
            if w.len() != m {
                return Err(Error::Domain(format!("expected {m} components")));
            }
            if !(*tol >= 0.0) {
                return Err(Error::Domain("strong-mode tolerance must be nonnegative".into()));
            }
            for f in w {
                f.check_grid(grid)?;
            }
            if !matches!(class, Coupling::Fully { .. }) {
                return Ok(not_met(format!("system is not fully coupled on D ({class:?})")));
            }
            // premise: W ≥ 0 on the whole H side
            for (i, f) in w.iter().enumerate() {
                for &x in grid.interior() {
                    if refl.side(x) == Side::Inside && f.values()[x] < -tol {
                        return Ok(not_met(format!("component {i} is negative at node {x} in H")));
                    }
                }
            }
            if w.iter().all(|f| d.iter().all(|&x| fabs(f.values()[x]) <= *tol)) {
                return Ok(MpReport { verdict: MpVerdict::Vanishes, lambda1_d: None, coupling_bound, solution: Vec::new() });
            }
            let inner = inner_nodes(grid, d);
            let check: &[usize] = if inner.is_empty() { d } else { &inner };
            let mut min = f64::INFINITY;
            for (i, f) in w.iter().enumerate() {
                for &x in check {
                    let val = f.values()[x];
                    if !(val > 0.0) {
                        return Ok(MpReport {
                            verdict: MpVerdict::Violated { node: x, component: i, value: val },
                            lambda1_d: None,
                            coupling_bound,
                            solution: Vec::new(),
                        });
                    }
                    min = min.min(val);
                }
            }
            Ok(MpReport { verdict: MpVerdict::Holds { min }, lambda1_d: None, coupling_bound, solution: Vec::new() })
        }
    }
}

/// Nodes of `d` whose axis neighbours all belong to `d`.
fn inner_nodes(grid: &crate::geometry::Grid, d: &[usize]) -> Vec<usize> {
    let mut sorted = d.to_vec();
    sorted.sort_unstable();
    let dim = grid.dim();
    let mut z = vec![0i64; dim];
    d.iter()
        .copied()
        .filter(|&x| {
            grid.coords_into(x, &mut z);
            (0..dim).all(|a| {
                [-1i64, 1].iter().all(|&s| {
                    z[a] += s;
                    let ok = grid.index(&z).is_some_and(|y| sorted.binary_search(&y).is_ok());
                    z[a] -= s;
                    ok
                })
            })
        })
        .collect()
}
