use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlsym::config::ExperimentConfig;
use nlsym::constants::{constants_table, CONSTANT_TOL};
use nlsym::experiment::{pair_symmetry, report_summary, seeds, solve_seeds, Experiment, PairSymmetry, SpecSummary};
use nlsym::io::{self, GridMeta};
use nlsym::verify;
use nlsym::{Error, Result};
use nlsym_core::solver::describe;
use serde_json::json;

#[derive(Parser)]
#[command(name = "nlsym", version, about = "Nonlocal elliptic systems on radial domains: ground states and their symmetry")]
struct Cli {
    /// INI experiment file; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the discrete operator and write it with the grid.
    Assemble,
    /// First eigenpair of the operator.
    Eigen,
    /// Multi-seed ground state search with symmetry diagnostics.
    Solve,
    /// Symmetry diagnostics of a stored pair of fields.
    Symmetry {
        /// Binary field file of the first component.
        #[arg(long)]
        u: PathBuf,
        /// Binary field file of the second component.
        #[arg(long)]
        v: PathBuf,
    },
    /// Randomized property suites; exits nonzero if any fails.
    Verify,
    /// Normalization constants, closed form against quadrature.
    Constants {
        #[arg(long = "N", value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        dims: Vec<usize>,
        #[arg(long = "s", value_delimiter = ',', default_values_t = [0.1, 0.25, 0.5, 0.75, 0.9])]
        orders: Vec<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Assemble => "assemble",
            Command::Eigen => "eigen",
            Command::Solve => "solve",
            Command::Symmetry { .. } => "symmetry",
            Command::Verify => "verify",
            Command::Constants { .. } => "constants",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            if let Error::Config(c) = &e {
                eprintln!("config error: {c}");
            } else {
                let diag = json!({
                    "command": cli.command.name(),
                    "seed": cli.seed,
                    "kind": e.kind(),
                    "message": e.to_string(),
                });
                let text = serde_json::to_string_pretty(&diag).unwrap_or_default();
                eprintln!("{text}");
                let _ = io::create_dir(&cli.out).and_then(|_| io::write_json(&cli.out.join("diagnostics.json"), &diag));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// `Ok(false)` marks a completed run whose checks failed.
fn run(cli: &Cli) -> Result<bool> {
    let out = &cli.out;
    let seed = cli.seed;
    if let Command::Constants { dims, orders } = &cli.command {
        io::create_dir(out)?;
        return constants(out, seed, dims, orders);
    }
    let cfg = load_config(cli.config.as_deref())?;
    io::create_dir(out)?;
    match &cli.command {
        Command::Assemble => {
            let exp = Experiment::assemble(&cfg)?;
            io::write_operator(&out.join("operator.bin"), &exp.op, seed)?;
            io::write_grid(out, exp.grid(), seed)?;
            io::write_json(
                &out.join("assemble.json"),
                &json!({
                    "seed": seed,
                    "config": cfg.render(),
                    "grid": GridMeta::of(exp.grid()),
                    "options": exp.op.options(),
                    "stats": exp.op.stats(),
                }),
            )?;
            println!("assembled {} interior nodes at h = {}", exp.op.len(), exp.grid().h());
        }
        Command::Eigen => {
            let exp = Experiment::assemble(&cfg)?;
            let eig = exp.eigen()?;
            let grid = exp.grid();
            io::write_field(out, "phi1", &eig.phi1, grid, seed)?;
            io::write_fields_csv(&out.join("phi1.csv"), grid, &[("phi1", &eig.phi1)])?;
            io::write_json(
                &out.join("eigen.json"),
                &json!({
                    "seed": seed,
                    "config": cfg.render(),
                    "grid": GridMeta::of(grid),
                    "lambda1": eig.lambda1,
                    "iterations": eig.iterations,
                    "residual": eig.residual,
                }),
            )?;
            println!("lambda1 = {:.12e} ({} iterations, residual {:.2e})", eig.lambda1, eig.iterations, eig.residual);
        }
        Command::Solve => return solve(&cfg, out, seed),
        Command::Symmetry { u, v } => {
            let (grid, fu, _) = io::read_field(u)?;
            let (grid_v, fv, _) = io::read_field(v)?;
            if GridMeta::of(&grid) != GridMeta::of(&grid_v) {
                return Err(Error::format(v, "field lives on a different grid than the first component"));
            }
            let d = &cfg.diagnostics;
            let sym = pair_symmetry(&fu, &fv, &grid, d.tol, d.resolution_deg)?;
            write_symmetry(out, &sym)?;
            io::write_json(&out.join("symmetry.json"), &json!({ "seed": seed, "symmetry": sym }))?;
            println!("{}", symmetry_line(&sym));
        }
        Command::Verify => {
            let exp = Experiment::assemble(&cfg)?;
            let summary = verify::run_all(&exp, seed)?;
            io::write_json(&out.join("verify.json"), &summary)?;
            for s in &summary.suites {
                let tag = if s.passed { "ok" } else { "FAILED" };
                println!("{:<24} {tag:<6} {} cases, {} violations", s.name, s.cases, s.violations);
                for f in &s.failures {
                    println!("    {f}");
                }
            }
            return Ok(summary.passed);
        }
        Command::Constants { .. } => unreachable!("handled before the config is read"),
    }
    Ok(true)
}

fn solve(cfg: &ExperimentConfig, out: &Path, seed: u64) -> Result<bool> {
    let exp = Experiment::assemble(cfg)?;
    let grid = exp.grid();
    let eig = exp.eigen()?;
    let sys = exp.system(eig.lambda1)?;
    let seeds = seeds(&eig.phi1, grid, cfg.solver.seeds, cfg.solver.tilt, seed)?;
    let multi = solve_seeds(&sys, &seeds, &exp.solve_options())?;
    let r = &multi.report;
    let d = &cfg.diagnostics;
    let sym = if grid.dim() == 2 { Some(pair_symmetry(&r.u, &r.v, grid, d.tol, d.resolution_deg)?) } else { None };

    io::write_field(out, "u", &r.u, grid, seed)?;
    io::write_field(out, "v", &r.v, grid, seed)?;
    io::write_fields_csv(&out.join("fields.csv"), grid, &[("u", &r.u), ("v", &r.v)])?;
    io::write_log_csv(&out.join("log.csv"), &r.log)?;
    if let Some(sym) = &sym {
        write_symmetry(out, sym)?;
    }
    let spec = SpecSummary { lambda1: eig.lambda1, check: sys.check().clone(), r0_squared: sys.r0_squared() };
    io::write_json(
        &out.join("solve.json"),
        &json!({
            "seed": seed,
            "config": cfg.render(),
            "grid": GridMeta::of(grid),
            "spec": spec,
            "seeds": multi.outcomes,
            "best": multi.best,
            "report": report_summary(r)?,
            "symmetry": sym,
        }),
    )?;

    println!("{}", describe(r));
    if let Some(sym) = &sym {
        println!("{}", symmetry_line(sym));
    }
    if !(r.converged && r.relative_residual() <= cfg.solver.tol) {
        return Err(Error::Runtime(format!(
            "kept seed {} stopped at relative residual {:.3e} above {:.1e}",
            multi.best,
            r.relative_residual(),
            cfg.solver.tol
        )));
    }
    if !r.positive() {
        return Err(Error::Runtime(format!("ground state is not positive: min u = {:e}, min v = {:e}", r.min_u, r.min_v)));
    }
    Ok(true)
}

fn write_symmetry(out: &Path, sym: &PairSymmetry) -> Result<()> {
    io::write_rings_csv(&out.join("rings.csv"), &sym.report.foliated)
}

fn symmetry_line(sym: &PairSymmetry) -> String {
    format!(
        "scan: {:?}; axis sweep: {:?}; foliated: {}; agree: {}",
        sym.scan.verdict,
        sym.report.axis.verdict,
        sym.report.foliated_symmetric(),
        sym.scan.agrees
    )
}

fn constants(out: &Path, seed: u64, dims: &[usize], orders: &[f64]) -> Result<bool> {
    let rows = constants_table(dims, orders)?;
    io::write_json(&out.join("constants.json"), &json!({ "seed": seed, "tol": CONSTANT_TOL, "rows": rows }))?;
    let path = out.join("constants.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::format(&path, e))?;
    for row in &rows {
        w.serialize(row).map_err(|e| Error::format(&path, e))?;
        println!(
            "N={} s={:<5} closed {:.10e} quadrature {:.10e} delta {:.2e} {}",
            row.dim,
            row.s,
            row.gamma_formula,
            row.quadrature,
            row.relative_delta,
            if row.passes { "ok" } else { "FAILED" }
        );
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows.iter().all(|r| r.passes))
}
