//! Ground states of the coupled system
//!
//! ```text
//! I u₁ = a₁(|x|) u₁ + |u₂|^q |u₁|^{q−2} u₁
//! I u₂ = a₂(|x|) u₂ + |u₁|^q |u₂|^{q−2} u₂      in Ω,  u₁ = u₂ = 0 outside,
//! ```
//!
//! found by minimizing `J(u,v) = ½‖(u,v)‖² − (1/q)‖uv‖_q^q` over the Nehari
//! set `G(u,v) = ½‖(u,v)‖² − ‖uv‖_q^q = 0`, where
//! `‖(u,v)‖² = ℰ(u,u) + ℰ(v,v) − ∫(a₁u² + a₂v²)`. Integrals are lattice sums
//! weighted by `h^N`.

mod linear;
mod scan;

pub use linear::{
    antisymmetric_lambda1, antisymmetric_matrix, coupling_classify, linearize, mp_check, Coupling, CouplingField,
    Linearization, MpMode, MpReport, MpVerdict,
};
pub use scan::{rotating_plane_scan, RotatingPlaneReport, ScanVerdict, StrictCheck};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::energy::EnergyOperator;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::Grid;
use crate::linalg::Cholesky;
use crate::math::{compensated_sum, fabs, pow, sqrt, Compensated};
use crate::polarization::{symmetry_report, SymmetryReport};

/// Piecewise-linear function of the radius, constant beyond the outer knots.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialProfile {
    knots: Vec<[f64; 2]>,
}

impl RadialProfile {
    pub fn constant(value: f64) -> Self {
        Self { knots: vec![[0.0, value]] }
    }

    /// Knots `(r, value)` with strictly increasing `r ≥ 0`.
    pub fn piecewise(knots: Vec<[f64; 2]>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Domain("radial profile needs at least one knot".into()));
        }
        if knots.iter().any(|k| !(k[0] >= 0.0) || !k[0].is_finite() || !k[1].is_finite()) {
            return Err(Error::Domain("profile knots must be finite with r ≥ 0".into()));
        }
        if knots.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(Error::Domain("profile radii must increase strictly".into()));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[[f64; 2]] {
        &self.knots
    }

    pub fn eval(&self, r: f64) -> f64 {
        let k = &self.knots;
        if r <= k[0][0] {
            return k[0][1];
        }
        for w in k.windows(2) {
            if r <= w[1][0] {
                let t = (r - w[0][0]) / (w[1][0] - w[0][0]);
                return w[0][1] + t * (w[1][1] - w[0][1]);
            }
        }
        k[k.len() - 1][1]
    }

    /// `sup max(a, 0)` over radii in `[lo, hi]`.
    pub fn sup_positive(&self, lo: f64, hi: f64) -> f64 {
        let mut m = self.eval(lo).max(self.eval(hi));
        for k in &self.knots {
            if k[0] >= lo && k[0] <= hi {
                m = m.max(k[1]);
            }
        }
        m.max(0.0)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { knots: self.knots.iter().map(|k| [k[0], t * k[1]]).collect() }
    }
}

/// Coefficients and exponent of the system.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemSpec {
    pub a1: RadialProfile,
    pub a2: RadialProfile,
    pub q: f64,
}

/// Outcome of validating a [`SystemSpec`] against an operator.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpecCheck {
    pub lambda1: f64,
    pub sup_a1: f64,
    pub sup_a2: f64,
    /// `N/(N−2s)` for fractional kernels, infinite otherwise.
    pub critical_exponent: f64,
    /// `q < N/(N−2s)`. Not required for the discrete problem; reported.
    pub subcritical: bool,
    /// `a₁ ≠ a₂` at some interior node.
    pub distinct_coefficients: bool,
}

/// `J` from its two ingredients.
pub fn functional_value(norm2: f64, product: f64, q: f64) -> f64 {
    0.5 * norm2 - product / q
}

/// `G` from its two ingredients.
pub fn nehari_value(norm2: f64, product: f64) -> f64 {
    0.5 * norm2 - product
}

/// Scaling `t₀ = (‖(u,v)‖² / (2‖uv‖_q^q))^{1/(2q−2)}` onto the Nehari set.
pub fn nehari_scale(norm2: f64, product: f64, q: f64) -> Result<f64> {
    if !(norm2 > 0.0) {
        return Err(Error::ZeroNorm);
    }
    if !(product > 0.0) {
        return Err(Error::DegenerateProduct);
    }
    Ok(pow(norm2 / (2.0 * product), 1.0 / (2.0 * q - 2.0)))
}

/// `sign(t)|t|^e`, zero at zero.
fn signed_pow(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * pow(fabs(t), e)
    }
}

/// A point on the Nehari set.
#[derive(Clone, Debug)]
pub struct Projection {
    pub t0: f64,
    pub u: Field,
    pub v: Field,
    /// `‖(t₀u, t₀v)‖²`.
    pub norm2: f64,
    /// `G'(t₀u,t₀v)(t₀u,t₀v)`, equal to `(1−q)‖(t₀u,t₀v)‖²` on the set.
    pub radial_derivative: f64,
}

/// The system bound to an assembled operator.
#[derive(Clone, Debug)]
pub struct System<'a> {
    op: &'a EnergyOperator,
    spec: SystemSpec,
    check: SpecCheck,
    a: [Vec<f64>; 2],
}

impl<'a> System<'a> {
    /// Validate `spec` against the operator and its first eigenvalue.
    pub fn new(op: &'a EnergyOperator, spec: SystemSpec, lambda1: f64) -> Result<Self> {
        if !(spec.q > 1.0) || !spec.q.is_finite() {
            return Err(Error::Domain(format!("exponent q = {} must exceed 1", spec.q)));
        }
        if !(lambda1 > 0.0) {
            return Err(Error::Domain("λ₁ must be positive".into()));
        }
        let grid = op.grid();
        let (lo, hi) = (grid.domain().r_in(), grid.domain().r_out());
        let sup_a1 = spec.a1.sup_positive(lo, hi);
        let sup_a2 = spec.a2.sup_positive(lo, hi);
        for (name, sup) in [("a1", sup_a1), ("a2", sup_a2)] {
            if !(sup < lambda1) {
                return Err(Error::Domain(format!("sup {name}⁺ = {sup} is not below λ₁ = {lambda1}")));
            }
        }
        let radii: Vec<f64> = grid.interior().iter().map(|&i| crate::math::norm2(&grid.point(i))).collect();
        let a1: Vec<f64> = radii.iter().map(|&r| spec.a1.eval(r)).collect();
        let a2: Vec<f64> = radii.iter().map(|&r| spec.a2.eval(r)).collect();
        let critical_exponent = match op.kernel().order() {
            Some(s) => {
                let n = grid.dim() as f64;
                if n > 2.0 * s {
                    n / (n - 2.0 * s)
                } else {
                    f64::INFINITY
                }
            }
            None => f64::INFINITY,
        };
        let check = SpecCheck {
            lambda1,
            sup_a1,
            sup_a2,
            critical_exponent,
            subcritical: spec.q < critical_exponent,
            distinct_coefficients: a1 != a2,
        };
        Ok(Self { op, spec, check, a: [a1, a2] })
    }

    pub fn op(&self) -> &'a EnergyOperator {
        self.op
    }

    pub fn grid(&self) -> &'a Grid {
        self.op.grid()
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn check(&self) -> &SpecCheck {
        &self.check
    }

    pub fn q(&self) -> f64 {
        self.spec.q
    }

    /// `a_i` at interior nodes, `i ∈ {0, 1}`.
    pub fn coefficients(&self, i: usize) -> &[f64] {
        &self.a[i]
    }

    /// Radius below which `‖(u,v)‖²` cannot fall on the Nehari set:
    /// `r₀² = ((2μ)^q / 6)^{1/(q−1)} h^N` with `μ = λ₁ − max sup a_i⁺`.
    /// Inside that ball `G ≥ ⅓‖(u,v)‖²`.
    pub fn r0_squared(&self) -> f64 {
        let mu = self.check.lambda1 - self.check.sup_a1.max(self.check.sup_a2);
        let q = self.spec.q;
        pow(pow(2.0 * mu, q) / 6.0, 1.0 / (q - 1.0)) * self.op.cell_volume()
    }

    fn interior(&self, u: &Field) -> Result<Vec<f64>> {
        u.check_grid(self.grid())?;
        Ok(u.interior_values(self.grid()))
    }

    fn pair(&self, u: &Field, v: &Field) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.interior(u)?, self.interior(v)?))
    }

    fn norm2_of(&self, u: &[f64], v: &[f64]) -> f64 {
        let cell = self.op.cell_volume();
        let mut acc = Compensated::new();
        acc.add(self.op.form(u, u));
        acc.add(self.op.form(v, v));
        for k in 0..u.len() {
            acc.add(-cell * (self.a[0][k] * u[k] * u[k] + self.a[1][k] * v[k] * v[k]));
        }
        acc.value()
    }

    fn product_of(&self, u: &[f64], v: &[f64]) -> f64 {
        let q = self.spec.q;
        self.op.cell_volume() * compensated_sum(u.iter().zip(v).map(|(a, b)| pow(fabs(a * b), q)))
    }

    fn gradient_of(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let q = self.spec.q;
        let iu = self.op.apply_interior(u);
        let iv = self.op.apply_interior(v);
        let gu = (0..u.len())
            .map(|k| iu[k] - self.a[0][k] * u[k] - pow(fabs(v[k]), q) * signed_pow(u[k], q - 1.0))
            .collect();
        let gv = (0..v.len())
            .map(|k| iv[k] - self.a[1][k] * v[k] - pow(fabs(u[k]), q) * signed_pow(v[k], q - 1.0))
            .collect();
        (gu, gv)
    }

    /// `‖(u,v)‖²`.
    pub fn norm2(&self, u: &Field, v: &Field) -> Result<f64> {
        let (u, v) = self.pair(u, v)?;
        Ok(self.norm2_of(&u, &v))
    }

    /// `‖uv‖_q^q`.
    pub fn product(&self, u: &Field, v: &Field) -> Result<f64> {
        let (u, v) = self.pair(u, v)?;
        Ok(self.product_of(&u, &v))
    }

    pub fn functional(&self, u: &Field, v: &Field) -> Result<f64> {
        let (u, v) = self.pair(u, v)?;
        Ok(functional_value(self.norm2_of(&u, &v), self.product_of(&u, &v), self.spec.q))
    }

    pub fn nehari(&self, u: &Field, v: &Field) -> Result<f64> {
        let (u, v) = self.pair(u, v)?;
        Ok(nehari_value(self.norm2_of(&u, &v), self.product_of(&u, &v)))
    }

    /// Riesz representative of `J'(u,v)` in `⟨·,·⟩_h`:
    /// `(Iu − a₁u − |v|^q|u|^{q−2}u, Iv − a₂v − |u|^q|v|^{q−2}v)`.
    pub fn gradient(&self, u: &Field, v: &Field) -> Result<(Field, Field)> {
        let (u, v) = self.pair(u, v)?;
        let (gu, gv) = self.gradient_of(&u, &v);
        Ok((Field::from_interior(self.grid(), &gu)?, Field::from_interior(self.grid(), &gv)?))
    }

    /// `‖(G_u, G_v)‖_h`.
    pub fn residual(&self, u: &Field, v: &Field) -> Result<f64> {
        let (u, v) = self.pair(u, v)?;
        let (gu, gv) = self.gradient_of(&u, &v);
        Ok(self.h_norm(&gu, &gv))
    }

    fn h_norm(&self, a: &[f64], b: &[f64]) -> f64 {
        sqrt(self.op.cell_volume() * (crate::math::dot(a, a) + crate::math::dot(b, b)))
    }

    /// Rescale `(u,v)` onto the Nehari set.
    pub fn nehari_project(&self, u: &Field, v: &Field) -> Result<Projection> {
        let (ui, vi) = self.pair(u, v)?;
        let n2 = self.norm2_of(&ui, &vi);
        let t0 = nehari_scale(n2, self.product_of(&ui, &vi), self.spec.q)?;
        let (pu, pv) = (u.scaled(t0), v.scaled(t0));
        let (ui, vi) = self.pair(&pu, &pv)?;
        let norm2 = self.norm2_of(&ui, &vi);
        // G'(u,v)(u,v) = ‖(u,v)‖² − 2q‖uv‖_q^q
        let radial_derivative = norm2 - 2.0 * self.spec.q * self.product_of(&ui, &vi);
        Ok(Projection { t0, u: pu, v: pv, norm2, radial_derivative })
    }

    /// Run the descent from `seed` and post-process to a nonnegative pair.
    pub fn minimize(&self, seed: (&Field, &Field), opts: &SolveOptions) -> Result<SolveReport> {
        Minimizer::new(self, opts)?.run(seed)
    }
}

/// Seed `(φ₁, φ₁(1 + ε x·d / R))` breaking radial symmetry along `d`.
pub fn eigen_seed(phi1: &Field, grid: &Grid, eps: f64, direction: &[f64]) -> Result<(Field, Field)> {
    phi1.check_grid(grid)?;
    if direction.len() != grid.dim() {
        return Err(Error::Domain("seed direction has the wrong dimension".into()));
    }
    let r = grid.domain().r_out();
    let tilt = Field::from_fn(grid, |x| 1.0 + eps * crate::math::dot(x, direction) / r);
    Ok((phi1.clone(), phi1.zip_map(&tilt, |a, b| a * b)?))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveOptions {
    /// Stop when `‖∇J‖_h ≤ tol · ‖∇J‖_h` at the projected seed.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Steps without a new lowest `J` or residual before giving up.
    pub stagnation_window: usize,
    /// Reseeds after a degenerate product.
    pub max_restarts: usize,
    /// Precondition by `(I − a_i)^{-1}`; otherwise plain gradient steps with
    /// initial step `1/λ₁`.
    pub preconditioned: bool,
    /// Rounds of `(u,v) → (|u|,|v|)` followed by renewed descent.
    pub positivity_rounds: usize,
    /// Relative threshold for `‖u₁−u₂‖_h > distinct_tol · ‖u₁‖_h`.
    pub distinct_tol: f64,
    /// Planar symmetry report: dominance tolerance relative to `max |u|`,
    /// and sweep resolution in degrees.
    pub symmetry: Option<(f64, f64)>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            armijo_c: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            stagnation_window: 50,
            max_restarts: 5,
            preconditioned: true,
            positivity_rounds: 3,
            distinct_tol: 1e-6,
            symmetry: Some((1e-6, 1.0)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterLog {
    pub iter: usize,
    pub j: f64,
    pub residual: f64,
    pub step: f64,
    pub norm2: f64,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub u: Field,
    pub v: Field,
    pub j: f64,
    /// `J` at the projected seed.
    pub j_seed: f64,
    /// `|G| / ‖(u,v)‖²`.
    pub nehari_residual: f64,
    /// `‖∇J‖_h` at the output.
    pub residual: f64,
    pub residual_initial: f64,
    pub converged: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub positivity_rounds: usize,
    /// Largest `J(|u|,|v|) − J(u,v)` over the positivity rounds (both
    /// projected), expected `≤ 0`.
    pub positivity_energy_change: f64,
    /// `min u`, `min v` over interior nodes.
    pub min_u: f64,
    pub min_v: f64,
    /// `‖u−v‖_h / ‖u‖_h`.
    pub distinctness: f64,
    pub distinct: bool,
    pub r0_squared: f64,
    /// Smallest `‖(u,v)‖²` over all projected iterates.
    pub min_norm2: f64,
    pub log: Vec<IterLog>,
    pub symmetry: Option<SymmetryReport>,
}

impl SolveReport {
    pub fn relative_residual(&self) -> f64 {
        if self.residual_initial > 0.0 {
            self.residual / self.residual_initial
        } else {
            self.residual
        }
    }

    /// Both components strictly positive at every interior node.
    pub fn positive(&self) -> bool {
        self.min_u > 0.0 && self.min_v > 0.0
    }
}

struct Minimizer<'s, 'a> {
    sys: &'s System<'a>,
    opts: &'s SolveOptions,
    precond: Option<[Cholesky; 2]>,
    log: Vec<IterLog>,
    min_norm2: f64,
    iterations: usize,
}

/// Projected iterate with its cached quantities.
struct State {
    u: Vec<f64>,
    v: Vec<f64>,
    j: f64,
    norm2: f64,
    gu: Vec<f64>,
    gv: Vec<f64>,
    residual: f64,
}

impl<'s, 'a> Minimizer<'s, 'a> {
    fn new(sys: &'s System<'a>, opts: &'s SolveOptions) -> Result<Self> {
        if !(opts.tol > 0.0) || !(opts.backtrack > 0.0 && opts.backtrack < 1.0) {
            return Err(Error::Domain("solver tolerance and backtrack factor must lie in (0,1)".into()));
        }
        let precond = if opts.preconditioned {
            let op = sys.op;
            let n = op.len();
            let base = op.matrix();
            let factor = |a: &[f64]| {
                let mut m = base.clone();
                for k in 0..n {
                    m[k * n + k] -= a[k];
                }
                Cholesky::factor(&m, n)
            };
            Some([factor(&sys.a[0])?, factor(&sys.a[1])?])
        } else {
            None
        };
        Ok(Self { sys, opts, precond, log: Vec::new(), min_norm2: f64::INFINITY, iterations: 0 })
    }

    /// Project raw interior vectors and evaluate everything at the result.
    fn state(&mut self, u: &[f64], v: &[f64]) -> Result<State> {
        let sys = self.sys;
        let t0 = nehari_scale(sys.norm2_of(u, v), sys.product_of(u, v), sys.spec.q)?;
        let u: Vec<f64> = u.iter().map(|x| t0 * x).collect();
        let v: Vec<f64> = v.iter().map(|x| t0 * x).collect();
        let norm2 = sys.norm2_of(&u, &v);
        let j = functional_value(norm2, sys.product_of(&u, &v), sys.spec.q);
        let (gu, gv) = sys.gradient_of(&u, &v);
        let residual = sys.h_norm(&gu, &gv);
        self.min_norm2 = self.min_norm2.min(norm2);
        Ok(State { u, v, j, norm2, gu, gv, residual })
    }

    /// Nonzero bump used to repair a degenerate product.
    fn perturb(&self, u: &mut [f64], v: &mut [f64], round: usize) {
        let grid = self.sys.grid();
        let dom = grid.domain();
        let (ri, ro) = (dom.r_in(), dom.r_out());
        let scale = u.iter().chain(v.iter()).fold(0.0f64, |m, x| m.max(fabs(*x))).max(1.0);
        let amp = 0.1 * (round + 1) as f64 * scale;
        let angle = crate::math::PI * round as f64 / 5.0;
        for (k, &idx) in grid.interior().iter().enumerate() {
            let x = grid.point(idx);
            let r = crate::math::norm2(&x);
            let bump = ((r - ri) * (ro - r)).max(0.0) / ((ro - ri) * (ro - ri));
            let tilt = 1.0 + 0.25 * (crate::math::cos(angle) * x[0] + crate::math::sin(angle) * x[1 % x.len()]) / ro;
            u[k] += amp * bump;
            v[k] += amp * bump * tilt;
        }
    }

    fn run(mut self, seed: (&Field, &Field)) -> Result<SolveReport> {
        let sys = self.sys;
        let (mut u0, mut v0) = sys.pair(seed.0, seed.1)?;
        let mut restarts = 0;
        let start = loop {
            match self.state(&u0, &v0) {
                Ok(s) => break s,
                Err(Error::DegenerateProduct) | Err(Error::ZeroNorm) if restarts < self.opts.max_restarts => {
                    self.perturb(&mut u0, &mut v0, restarts);
                    restarts += 1;
                }
                Err(e) => return Err(e),
            }
        };
        let j_seed = start.j;
        let residual_initial = start.residual;
        let target = self.opts.tol * residual_initial;
        let mut state = self.descend(start, target)?;
        let mut rounds = 0;
        let mut energy_change = f64::NEG_INFINITY;
        while state.u.iter().chain(&state.v).any(|&x| x < 0.0) && rounds < self.opts.positivity_rounds {
            rounds += 1;
            let au: Vec<f64> = state.u.iter().map(|x| fabs(*x)).collect();
            let av: Vec<f64> = state.v.iter().map(|x| fabs(*x)).collect();
            let abs_state = self.state(&au, &av)?;
            energy_change = energy_change.max(abs_state.j - state.j);
            state = self.descend(abs_state, target)?;
        }
        if state.u.iter().chain(&state.v).any(|&x| x < 0.0) {
            return Err(Error::Descent(format!("sign changes persist after {rounds} positivity rounds")));
        }
        self.finish(state, j_seed, residual_initial, restarts, rounds, energy_change)
    }

    /// Armijo descent along the (preconditioned) negative gradient, each
    /// trial point rescaled onto the Nehari set.
    fn descend(&mut self, mut s: State, target: f64) -> Result<State> {
        let opts = self.opts;
        let cell = self.sys.op.cell_volume();
        let alpha0 = if self.precond.is_some() { 1.0 } else { 1.0 / self.sys.check.lambda1 };
        // near convergence the decrease of J drops below its rounding noise
        // while the residual keeps falling, so either counts as progress
        let (mut best, mut best_residual) = (s.j, s.residual);
        let mut since_best = 0;
        self.push_log(&s, 0.0);
        while s.residual > target {
            if self.iterations >= opts.max_iter {
                return Err(Error::Descent(format!(
                    "iteration cap {} reached with residual {:.3e} (target {:.3e})",
                    opts.max_iter, s.residual, target
                )));
            }
            self.iterations += 1;
            let (du, dv) = match &self.precond {
                Some([p1, p2]) => (p1.solve(&s.gu), p2.solve(&s.gv)),
                None => (s.gu.clone(), s.gv.clone()),
            };
            let slope = -cell * (crate::math::dot(&s.gu, &du) + crate::math::dot(&s.gv, &dv));
            // the Nehari rescaling leaves rounding noise of a few ulps in J
            let slack = 16.0 * f64::EPSILON * fabs(s.j);
            let mut alpha = alpha0;
            let mut accepted = None;
            for _ in 0..opts.max_backtracks {
                let cu: Vec<f64> = s.u.iter().zip(&du).map(|(x, d)| x - alpha * d).collect();
                let cv: Vec<f64> = s.v.iter().zip(&dv).map(|(x, d)| x - alpha * d).collect();
                if let Ok(c) = self.state(&cu, &cv) {
                    // once the predicted decrease is below the noise in J the
                    // sufficient-decrease test is blind; fall back to the residual.
                    // Above it no slack is granted, or an overshooting step that
                    // lands level with `s` can be taken back and forth forever.
                    let blind = -alpha * slope <= 64.0 * slack;
                    let ok = if blind {
                        c.residual < s.residual
                    } else {
                        c.j <= s.j + opts.armijo_c * alpha * slope
                    };
                    if ok {
                        accepted = Some(c);
                        break;
                    }
                }
                alpha *= opts.backtrack;
            }
            let Some(next) = accepted else {
                return Err(Error::Descent(format!(
                    "line search failed at iteration {} (J = {:.12e}, residual {:.3e})",
                    self.iterations, s.j, s.residual
                )));
            };
            s = next;
            self.push_log(&s, alpha);
            if s.j < best || s.residual < best_residual {
                best = best.min(s.j);
                best_residual = best_residual.min(s.residual);
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= opts.stagnation_window && s.residual > target {
                    return Err(Error::Descent(format!(
                        "neither J nor the residual decreased over {} steps (J = {:.12e}, residual {:.3e}, target {:.3e})",
                        opts.stagnation_window, s.j, s.residual, target
                    )));
                }
            }
        }
        Ok(s)
    }

    fn push_log(&mut self, s: &State, step: f64) {
        self.log.push(IterLog { iter: self.iterations, j: s.j, residual: s.residual, step, norm2: s.norm2 });
    }

    fn finish(
        self,
        s: State,
        j_seed: f64,
        residual_initial: f64,
        restarts: usize,
        rounds: usize,
        energy_change: f64,
    ) -> Result<SolveReport> {
        let sys = self.sys;
        let grid = sys.grid();
        let u = Field::from_interior(grid, &s.u)?;
        let v = Field::from_interior(grid, &s.v)?;
        let min_u = s.u.iter().fold(f64::INFINITY, |m, x| m.min(*x));
        let min_v = s.v.iter().fold(f64::INFINITY, |m, x| m.min(*x));
        let diff = u.zip_map(&v, |a, b| a - b)?;
        let un = u.norm_h();
        let distinctness = if un > 0.0 { diff.norm_h() / un } else { 0.0 };
        let nehari_residual = fabs(nehari_value(s.norm2, sys.product_of(&s.u, &s.v))) / s.norm2;
        let symmetry = match self.opts.symmetry {
            Some((tol, res)) if grid.dim() == 2 => {
                let scale = u.max_abs().max(v.max_abs());
                Some(symmetry_report(&[&u, &v], grid, tol * scale, res)?)
            }
            _ => None,
        };
        Ok(SolveReport {
            u,
            v,
            j: s.j,
            j_seed,
            nehari_residual,
            residual: s.residual,
            residual_initial,
            converged: true,
            iterations: self.iterations,
            restarts,
            positivity_rounds: rounds,
            positivity_energy_change: if rounds == 0 { 0.0 } else { energy_change },
            min_u,
            min_v,
            distinctness,
            distinct: distinctness > self.opts.distinct_tol,
            r0_squared: sys.r0_squared(),
            min_norm2: self.min_norm2,
            log: self.log,
            symmetry,
        })
    }
}

/// Human-readable one-line summary.
pub fn describe(report: &SolveReport) -> String {
    format!(
        "J = {:.10e}, residual {:.3e} (relative {:.3e}), {} iterations, min u = {:.3e}, min v = {:.3e}",
        report.j,
        report.residual,
        report.relative_residual(),
        report.iterations,
        report.min_u,
        report.min_v
    )
}
