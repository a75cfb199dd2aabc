//! Randomized property suites behind the `verify` subcommand. All draws come
//! from ChaCha streams derived from one seed, so a run is reproducible.

use nlsym_core::energy::{AssemblyOptions, EnergyOperator};
use nlsym_core::geometry::{Grid, RadialDomain, Side};
use nlsym_core::kernel::{KernelFamily, KernelSpec};
use nlsym_core::polarization::{
    energy_reduction_check, product_norm_check, two_point, EqualityClass, ExactReflection,
};
use nlsym_core::solver::{
    antisymmetric_lambda1, coupling_classify, linearize, mp_check, Coupling, CouplingField, MpMode, MpVerdict,
    ScanVerdict, System,
};
use nlsym_core::spectral;
use nlsym_core::Field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::constants_table;
use crate::error::Result;
use crate::experiment::{assemble_parallel, pair_symmetry, seeds, solve_seeds, Experiment};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    pub passed: bool,
    /// First few failure descriptions.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        Self { name: name.into(), cases: 0, violations: 0, passed: false, failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.violations += 1;
            if self.failures.len() < 8 {
                self.failures.push(what());
            }
        }
    }

    fn done(mut self) -> Self {
        self.passed = self.violations == 0 && self.cases > 0;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub samples: usize,
    pub suites: Vec<SuiteResult>,
    pub total_cases: usize,
    pub total_violations: usize,
    pub passed: bool,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn random_field(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    // mix of white noise and a smooth component so both sign patterns occur
    let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let mut f = Field::from_fn(grid, |x| a + (b * x[0]).sin() + (c * x[1 % x.len()]).cos() - 0.5);
    for &i in grid.interior() {
        f.values_mut()[i] += 0.5 * rng.gen_range(-1.0..1.0);
    }
    f
}

/// Closed form of the normalization constant against its quadrature.
pub fn suite_normalization() -> Result<SuiteResult> {
    let mut s = SuiteResult::new("normalization");
    for row in constants_table(&[1, 2], &[0.25, 0.5, 0.75])? {
        s.check(row.passes, || format!("N={} s={}: relative delta {:.3e}", row.dim, row.s, row.relative_delta));
    }
    Ok(s.done())
}

/// `ℰ(u⁺,u⁻) ≤ 0` and `ℰ(|u|,|u|) ≤ ℰ(u,u)`, strict for sign-changing `u`
/// when the kernel is strictly decreasing.
pub fn suite_form(op: &EnergyOperator, samples: usize, seed: u64) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("form_inequalities");
    let grid = op.grid();
    let strict = op.kernel().is_strictly_decreasing();
    let mut rng = stream(seed, 1);
    for k in 0..samples {
        let u = random_field(grid, &mut rng);
        let (p, m) = u.parts();
        let e = op.energy(&u)?;
        let scale = 1e-12 * e.abs().max(1.0);
        let cross = op.bilinear(&p, &m)?;
        let abs = op.energy(&u.abs())?;
        let changes = p.max_abs() > 0.0 && m.max_abs() > 0.0;
        s.check(cross <= scale, || format!("field {k}: E(u+,u-) = {cross:e}"));
        s.check(abs <= e + scale, || format!("field {k}: E(|u|) - E(u) = {:e}", abs - e));
        if strict && changes {
            s.check(cross < 0.0 && abs < e, || format!("field {k}: no strict decrease for a sign-changing field"));
        }
    }
    Ok(s.done())
}

/// Energy and product-norm behaviour of polarization in the eight exact
/// directions, plus the two-point identity.
pub fn suite_polarization(op: &EnergyOperator, q: f64, samples: usize, seed: u64) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("polarization");
    let grid = op.grid();
    if grid.dim() != 2 {
        s.notes.push("exact directions are planar; skipped".into());
        s.passed = true;
        return Ok(s);
    }
    let family = ExactReflection::planar_family(grid)?;
    let mut rng = stream(seed, 2);
    let mut equalities = 0;
    for k in 0..samples {
        let u = random_field(grid, &mut rng);
        let pos = u.abs();
        let other = random_field(grid, &mut rng).abs();
        for (d, refl) in family.iter().enumerate() {
            let r = energy_reduction_check(op, &u, refl)?;
            s.check(r.after <= r.before * (1.0 + 1e-12), || format!("field {k} dir {d}: energy rose"));
            if r.class != EqualityClass::Strict {
                equalities += 1;
                s.check(r.class != EqualityClass::Unclassified, || format!("field {k} dir {d}: equality off both branches"));
            }
            let p = product_norm_check(&pos, &other, refl, q)?;
            s.check(p.after >= p.before * (1.0 - 1e-12), || format!("field {k} dir {d}: product norm fell"));
            s.check(p.equal == p.condition, || format!("field {k} dir {d}: product equality without ordering"));
        }
        // a polarized field and its mirror image sit on the two equality branches
        let refl = &family[k % 8];
        let uh = refl.polarize(&u)?;
        let r = energy_reduction_check(op, &uh, refl)?;
        s.check(r.class == EqualityClass::Polarized, || format!("field {k}: polarized field classed {:?}", r.class));
        let r = energy_reduction_check(op, &refl.reflect_field(&uh), refl)?;
        s.check(r.class == EqualityClass::Reflected, || format!("field {k}: reflected field classed {:?}", r.class));
    }
    s.notes.push(format!("{equalities} equality cases among random fields"));
    let mut rng = stream(seed, 3);
    for _ in 0..100_000 {
        let mut draw = || rng.gen_range(-1000i32..=1000) as f64;
        let (a, b, c, d) = (draw(), draw(), draw(), draw());
        let t = two_point(a, b, c, d);
        s.check(t.f == -t.g && t.f >= 0.0 && t.f == t.f_closed, || format!("two-point ({a},{b},{c},{d})"));
    }
    Ok(s.done())
}

/// Positivity and monotonicity of `λ₁` over shrinking balls, and for
/// fractional kernels the exact rescaling identity.
pub fn suite_eigenvalue(kernel: &KernelSpec, h: f64, opts: AssemblyOptions, tol: f64) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("eigenvalue");
    let dim = kernel.dim();
    let radii = [1.0, 0.8, 0.6, 0.45, 0.35];
    let mut values = Vec::new();
    for &r in &radii {
        let grid = Grid::new(RadialDomain::ball(dim, r)?, h)?;
        let op = assemble_parallel(kernel, &grid, opts)?;
        let l = spectral::lambda1(&op, tol, 10_000)?.lambda1;
        s.check(l > 0.0, || format!("R={r}: lambda1 = {l}"));
        values.push(l);
    }
    for w in values.windows(2) {
        s.check(w[1] > w[0], || format!("lambda1 not increasing: {} then {}", w[0], w[1]));
    }
    s.notes.push(format!("lambda1 over radii {radii:?}: {values:?}"));
    if let KernelFamily::Fractional { order } = kernel.family() {
        for &r in &[0.5, 2.0] {
            let big = Grid::new(RadialDomain::ball(dim, r)?, h)?;
            let unit = Grid::new(RadialDomain::ball(dim, 1.0)?, h / r)?;
            let lr = spectral::lambda1(&assemble_parallel(kernel, &big, opts)?, 1e-12, 10_000)?.lambda1;
            let l1 = spectral::lambda1(&assemble_parallel(kernel, &unit, opts)?, 1e-12, 10_000)?.lambda1;
            let rel = (lr - r.powf(-2.0 * order) * l1).abs() / lr;
            s.check(rel <= 1e-8, || format!("rescaling R={r}: relative gap {rel:e}"));
        }
    }
    Ok(s.done())
}

/// Nehari projection identities and the gradient against central
/// differences.
pub fn suite_nehari(sys: &System<'_>, samples: usize, seed: u64) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("nehari");
    let grid = sys.grid();
    let q = sys.q();
    let mut rng = stream(seed, 4);
    for k in 0..samples {
        let (u, v) = (random_field(grid, &mut rng), random_field(grid, &mut rng));
        let p = sys.nehari_project(&u, &v)?;
        let g = sys.nehari(&p.u, &p.v)?;
        s.check(g.abs() <= 1e-10 * p.norm2, || format!("seed {k}: G = {g:e}"));
        let rd = (p.radial_derivative - (1.0 - q) * p.norm2).abs();
        s.check(rd <= 1e-10 * p.norm2, || format!("seed {k}: radial derivative off by {rd:e}"));
    }
    for k in 0..20 {
        let u = Field::from_fn(grid, |_| rng.gen_range(0.5..1.5));
        let v = Field::from_fn(grid, |_| rng.gen_range(0.5..1.5));
        let (du, dv) = (random_field(grid, &mut rng), random_field(grid, &mut rng));
        let (gu, gv) = sys.gradient(&u, &v)?;
        let exact = gu.inner_h(&du)? + gv.inner_h(&dv)?;
        let err = |eps: f64| -> Result<f64> {
            let a = u.zip_map(&du, |x, d| x + eps * d)?;
            let b = v.zip_map(&dv, |x, d| x + eps * d)?;
            let c = u.zip_map(&du, |x, d| x - eps * d)?;
            let e = v.zip_map(&dv, |x, d| x - eps * d)?;
            Ok(((sys.functional(&a, &b)? - sys.functional(&c, &e)?) / (2.0 * eps) - exact).abs())
        };
        let (e1, e2) = (err(1e-2)?, err(1e-3)?);
        s.check(e1 / e2 > 50.0 || e2 <= 1e-9 * exact.abs(), || format!("instance {k}: ratio {:.1}", e1 / e2));
    }
    Ok(s.done())
}

/// Interior nodes on the `H` side of `refl` within `radius` of `center`.
fn patch(grid: &Grid, refl: &ExactReflection, center: &[f64], radius: f64) -> Vec<usize> {
    grid.interior()
        .iter()
        .copied()
        .filter(|&i| {
            let x = grid.point(i);
            refl.side(i) == Side::Inside && x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius
        })
        .collect()
}

/// Small-volume maximum principle on random weakly coupled instances.
pub fn suite_small_volume(op: &EnergyOperator, samples: usize, seed: u64) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("small_volume_principle");
    let grid = op.grid();
    if grid.dim() != 2 {
        s.notes.push("exact directions are planar; skipped".into());
        s.passed = true;
        return Ok(s);
    }
    let family = ExactReflection::planar_family(grid)?;
    let mut rng = stream(seed, 5);
    let (ri, ro) = (grid.domain().r_in(), grid.domain().r_out());
    let h = grid.h();
    let mut k = 0;
    while k < samples {
        let refl = &family[rng.gen_range(0..8)];
        let e = refl.halfspace().normal().to_vec();
        let t = rng.gen_range(-0.8..0.8f64);
        let r = rng.gen_range(ri.max(2.0 * h)..ro);
        let n = [e[0] * t.cos() - e[1] * t.sin(), e[0] * t.sin() + e[1] * t.cos()];
        let center = [r * n[0], r * n[1]];
        let d = patch(grid, refl, &center, rng.gen_range(1.5..4.0) * h);
        if d.is_empty() {
            continue;
        }
        k += 1;
        let lambda = antisymmetric_lambda1(op, refl, &d)?;
        let cap = rng.gen_range(0.05..0.99) * lambda / 2.0;
        let entries: Vec<f64> = d
            .iter()
            .flat_map(|_| {
                let d1 = rng.gen_range(-cap..cap);
                let d2 = rng.gen_range(-cap..cap);
                [d1, rng.gen_range(0.0..cap), rng.gen_range(0.0..cap), d2]
            })
            .collect();
        let c = CouplingField::new(2, d.clone(), entries)?;
        let rhs: Vec<f64> = (0..2 * d.len()).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect();
        let rep = mp_check(op, refl, &c, &d, &MpMode::SmallVolume { rhs, tol: 1e-12 })?;
        s.check(rep.holds(), || format!("instance {k}: {:?}", rep.verdict));
    }
    Ok(s.done())
}

/// End-to-end ground state: convergence, positivity, distinctness, the two
/// symmetry sweeps, and the strong maximum principle in every exact
/// direction of dominance.
pub fn suite_ground_state(exp: &Experiment, seed: u64) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("ground_state");
    let cfg = &exp.config;
    let eig = exp.eigen()?;
    let sys = exp.system(eig.lambda1)?;
    let seeds = seeds(&eig.phi1, exp.grid(), cfg.solver.seeds, cfg.solver.tilt, seed)?;
    let multi = solve_seeds(&sys, &seeds, &exp.solve_options())?;
    let r = &multi.report;
    s.check(r.converged && r.relative_residual() <= cfg.solver.tol, || {
        format!("relative residual {:e}", r.relative_residual())
    });
    s.check(r.positive(), || format!("min u = {:e}, min v = {:e}", r.min_u, r.min_v));
    s.check(r.distinct, || format!("distinctness {:e}", r.distinctness));
    s.notes.push(format!("kept seed {} with J = {}", multi.best, r.j));
    let grid = exp.grid();
    if grid.dim() != 2 {
        return Ok(s.done());
    }
    let sym = pair_symmetry(&r.u, &r.v, grid, cfg.diagnostics.tol, cfg.diagnostics.resolution_deg)?;
    match &sym.scan.verdict {
        ScanVerdict::Radial | ScanVerdict::Axis { .. } => {
            s.check(sym.scan.agrees, || format!("scan {:?} against {:?}", sym.scan.verdict, sym.report.axis.verdict));
            s.check(sym.report.foliated_symmetric(), || "foliated Schwarz check failed".into());
        }
        other => s.check(false, || format!("scan verdict {other:?}")),
    }
    for refl in ExactReflection::planar_family(grid)? {
        let lin = linearize(&sys, &r.u, &r.v, &refl)?;
        let h: Vec<usize> = grid.interior().iter().copied().filter(|&i| refl.side(i) == Side::Inside).collect();
        let dominant = h.iter().all(|&i| lin.w.iter().all(|w| w.values()[i] >= 0.0));
        if !dominant || !matches!(coupling_classify(&lin.c, Some(&h)), Coupling::Fully { .. }) {
            continue;
        }
        let tol = 1e-10 * r.u.max_abs().max(r.v.max_abs());
        let rep = mp_check(&exp.op, &refl, &lin.c, &h, &MpMode::Strong { w: lin.w.clone(), tol })?;
        let e = refl.halfspace().normal().to_vec();
        s.check(matches!(rep.verdict, MpVerdict::Holds { .. } | MpVerdict::Vanishes), || {
            format!("strong principle along {e:?}: {:?}", rep.verdict)
        });
    }
    Ok(s.done())
}

/// `λ₁` on the unit ball at spacing `h` and `h/2`.
pub fn suite_discretization(kernel: &KernelSpec, h: f64, opts: AssemblyOptions, tol: f64) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("discretization");
    let ball = RadialDomain::ball(kernel.dim(), 1.0)?;
    let coarse = spectral::lambda1(&assemble_parallel(kernel, &Grid::new(ball, h)?, opts)?, tol, 10_000)?.lambda1;
    let fine = spectral::lambda1(&assemble_parallel(kernel, &Grid::new(ball, h / 2.0)?, opts)?, tol, 10_000)?.lambda1;
    let rel = (fine - coarse).abs() / fine;
    s.check(rel < 0.02, || format!("lambda1 moved by {:.2}%", 100.0 * rel));
    s.notes.push(format!("lambda1(h = {h}) = {coarse}, lambda1(h/2) = {fine}, change {:.3}%", 100.0 * rel));
    Ok(s.done())
}

/// Every suite, in order.
pub fn run_all(exp: &Experiment, seed: u64) -> Result<VerifySummary> {
    let cfg = &exp.config;
    let n = cfg.diagnostics.samples;
    let eig = exp.eigen()?;
    let sys = exp.system(eig.lambda1)?;
    let h = exp.grid().h();
    let opts = *exp.op.options();
    let tol = cfg.solver.eigen_tol;
    let suites = vec![
        suite_normalization()?,
        suite_form(&exp.op, n, seed)?,
        suite_polarization(&exp.op, cfg.system.q, n, seed)?,
        suite_eigenvalue(&exp.kernel, h, opts, tol)?,
        suite_nehari(&sys, n, seed)?,
        suite_small_volume(&exp.op, n, seed)?,
        suite_ground_state(exp, seed)?,
        suite_discretization(&exp.kernel, h, opts, tol)?,
    ];
    let total_cases = suites.iter().map(|s| s.cases).sum();
    let total_violations = suites.iter().map(|s| s.violations).sum();
    let passed = suites.iter().all(|s| s.passed);
    Ok(VerifySummary { seed, samples: n, suites, total_cases, total_violations, passed })
}
