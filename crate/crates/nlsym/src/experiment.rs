//! Pipelines from a config to assembled operators, eigenpairs, ground
//! states and symmetry reports.

use std::f64::consts::PI;

use nlsym_core::energy::{Assembler, AssemblyOptions, EnergyOperator, FarField};
use nlsym_core::geometry::Grid;
use nlsym_core::kernel::KernelSpec;
use nlsym_core::polarization::{symmetry_report, SymmetryReport};
use nlsym_core::solver::{
    eigen_seed, rotating_plane_scan, RotatingPlaneReport, SolveOptions, SolveReport, SpecCheck, System, SystemSpec,
};
use nlsym_core::spectral::{self, EigenResult};
use nlsym_core::Field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, KernelConfig, Resolution};
use crate::error::{Error, Result};
use crate::io;

pub fn build_kernel(cfg: &ExperimentConfig) -> Result<KernelSpec> {
    let dim = cfg.domain.dim;
    match &cfg.kernel {
        KernelConfig::Fractional { s } => {
            KernelSpec::fractional(dim, *s).map_err(|e| ConfigError::invalid("kernel.s", e).into())
        }
        KernelConfig::Tabulated { table, strictly_decreasing } => {
            let samples = io::read_kernel_table(table)?;
            KernelSpec::tabulated(dim, samples, *strictly_decreasing)
                .map_err(|e| ConfigError::invalid("kernel.table", e).into())
        }
    }
}

pub fn build_grid(cfg: &ExperimentConfig) -> Result<Grid> {
    let grid = match cfg.grid.resolution {
        Resolution::Spacing(h) => Grid::new(cfg.domain, h),
        Resolution::TargetNodes(n) => Grid::for_target_nodes(cfg.domain, n),
    };
    grid.map_err(|e| ConfigError::invalid("grid", e).into())
}

pub fn assembly_options(cfg: &ExperimentConfig) -> AssemblyOptions {
    AssemblyOptions { gauss_points: cfg.grid.gauss_points, cutoff: cfg.grid.cutoff, ..AssemblyOptions::default() }
}

/// Assembly with the exterior integrals spread over the rayon pool. The
/// jobs are independent and collected in order, so the result does not
/// depend on the thread count.
pub fn assemble_parallel(kernel: &KernelSpec, grid: &Grid, opts: AssemblyOptions) -> Result<EnergyOperator> {
    let asm = Assembler::new(kernel, grid, opts)?;
    let far: Vec<FarField> =
        (0..asm.job_count()).into_par_iter().map(|j| asm.far_field(j)).collect::<nlsym_core::Result<_>>()?;
    Ok(asm.finish(far)?)
}

/// A config with its grid and assembled operator.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub kernel: KernelSpec,
    pub op: EnergyOperator,
}

impl Experiment {
    pub fn assemble(config: &ExperimentConfig) -> Result<Self> {
        let kernel = build_kernel(config)?;
        let grid = build_grid(config)?;
        let op = assemble_parallel(&kernel, &grid, assembly_options(config))?;
        Ok(Self { config: config.clone(), kernel, op })
    }

    pub fn grid(&self) -> &Grid {
        self.op.grid()
    }

    pub fn eigen(&self) -> Result<EigenResult> {
        let s = &self.config.solver;
        Ok(spectral::lambda1(&self.op, s.eigen_tol, s.eigen_max_iter)?)
    }

    /// Resolve the coefficient profiles against `λ₁` and bind the system.
    /// A profile whose positive part reaches `λ₁` is a config error.
    pub fn system(&self, lambda1: f64) -> Result<System<'_>> {
        let sy = &self.config.system;
        let a1 = sy.a1.resolve(lambda1).map_err(|e| ConfigError::invalid("system.a1", e))?;
        let a2 = sy.a2.resolve(lambda1).map_err(|e| ConfigError::invalid("system.a2", e))?;
        let (lo, hi) = (self.config.domain.r_in(), self.config.domain.r_out());
        for (path, p) in [("system.a1", &a1), ("system.a2", &a2)] {
            let sup = p.sup_positive(lo, hi);
            if sup >= lambda1 {
                return Err(ConfigError::invalid(path, format!("sup of the positive part {sup} reaches lambda1 = {lambda1}")).into());
            }
        }
        Ok(System::new(&self.op, SystemSpec { a1, a2, q: sy.q }, lambda1)?)
    }

    /// Descent options; symmetry is left to [`pair_symmetry`] on the kept
    /// seed only.
    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.config.solver;
        SolveOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            preconditioned: s.preconditioned,
            symmetry: None,
            ..SolveOptions::default()
        }
    }
}

/// One starting pair for the descent.
#[derive(Clone, Debug)]
pub struct Seed {
    pub index: usize,
    /// Unit direction of the odd tilt.
    pub direction: Vec<f64>,
    pub tilt: f64,
    pub u: Field,
    pub v: Field,
}

/// Seed 0 tilts `φ₁` along `x₁` by `tilt`; the others draw a direction, a
/// tilt in `[½, 1]·tilt` and a smooth positive modulation from the
/// experiment seed, one ChaCha stream per index.
pub fn seeds(phi1: &Field, grid: &Grid, count: usize, tilt: f64, seed: u64) -> Result<Vec<Seed>> {
    let dim = grid.dim();
    let r_out = grid.domain().r_out();
    (0..count)
        .map(|index| {
            if index == 0 {
                let mut d = vec![0.0; dim];
                d[0] = 1.0;
                let (u, v) = eigen_seed(phi1, grid, tilt, &d)?;
                return Ok(Seed { index, direction: d, tilt, u, v });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let mut d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            d.iter_mut().for_each(|x| *x /= norm);
            let t = tilt * rng.gen_range(0.5..1.0);
            let (u, v) = eigen_seed(phi1, grid, t, &d)?;
            let waves: Vec<(Vec<f64>, f64)> = (0..3)
                .map(|_| ((0..dim).map(|_| rng.gen_range(-PI..PI) / r_out).collect(), rng.gen_range(0.0..2.0 * PI)))
                .collect();
            let modulation = Field::from_fn(grid, |x| {
                1.0 + 0.1
                    * waves.iter().map(|(k, ph)| (k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ph).cos()).sum::<f64>()
            });
            let u = u.zip_map(&modulation, |a, m| a * m)?;
            Ok(Seed { index, direction: d, tilt: t, u, v })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedOutcome {
    pub index: usize,
    pub direction: Vec<f64>,
    pub tilt: f64,
    pub j: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub error: Option<String>,
}

pub struct MultiSolve {
    pub outcomes: Vec<SeedOutcome>,
    /// Index of the kept seed: lowest `J` among converged runs, ties to the
    /// lower index.
    pub best: usize,
    pub report: SolveReport,
}

/// Run every seed in parallel and keep the lowest converged `J`.
pub fn solve_seeds(sys: &System<'_>, seeds: &[Seed], opts: &SolveOptions) -> Result<MultiSolve> {
    let runs: Vec<nlsym_core::Result<SolveReport>> =
        seeds.par_iter().map(|s| sys.minimize((&s.u, &s.v), opts)).collect();
    let outcomes: Vec<SeedOutcome> = seeds
        .iter()
        .zip(&runs)
        .map(|(s, r)| SeedOutcome {
            index: s.index,
            direction: s.direction.clone(),
            tilt: s.tilt,
            j: r.as_ref().ok().map(|r| r.j),
            converged: r.as_ref().is_ok_and(|r| r.converged),
            iterations: r.as_ref().map_or(0, |r| r.iterations),
            error: r.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().ok().filter(|r| r.converged).map(|r| (i, r.j)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let Some(best) = best else {
        let detail: Vec<String> =
            outcomes.iter().map(|o| format!("seed {}: {}", o.index, o.error.as_deref().unwrap_or("not converged"))).collect();
        return Err(Error::Runtime(format!("no seed converged ({})", detail.join("; "))));
    };
    let report = runs.into_iter().nth(best).expect("index in range")?;
    Ok(MultiSolve { outcomes, best, report })
}

/// Axis sweep, foliated test and rotating-plane scan of a planar pair.
#[derive(Clone, Debug, Serialize)]
pub struct PairSymmetry {
    pub tol: f64,
    pub resolution_deg: f64,
    pub report: SymmetryReport,
    pub scan: RotatingPlaneReport,
}

pub fn pair_symmetry(u: &Field, v: &Field, grid: &Grid, rel_tol: f64, resolution_deg: f64) -> Result<PairSymmetry> {
    let tol = rel_tol * u.max_abs().max(v.max_abs());
    let report = symmetry_report(&[u, v], grid, tol, resolution_deg)?;
    let scan = rotating_plane_scan(u, v, grid, tol, resolution_deg)?;
    Ok(PairSymmetry { tol, resolution_deg, report, scan })
}

/// JSON view of a [`SolveReport`] without the fields and the log, which are
/// written to their own files.
pub fn report_summary(report: &SolveReport) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(report).map_err(|e| Error::Runtime(e.to_string()))?;
    if let Some(m) = v.as_object_mut() {
        for key in ["u", "v", "log"] {
            m.remove(key);
        }
    }
    Ok(v)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecSummary {
    pub lambda1: f64,
    pub check: SpecCheck,
    pub r0_squared: f64,
}
