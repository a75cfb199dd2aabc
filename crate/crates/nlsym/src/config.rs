//! Experiment configuration: INI sections of `key = value` lines.
//!
//! ```ini
//! [kernel]
//! family = fractional
//! s = 0.5
//!
//! [domain]
//! shape = annulus
//! dim = 2
//! r_in = 0.5
//! r_out = 1.0
//!
//! [grid]
//! target_nodes = 800
//! gauss_points = 3
//! cutoff = none
//!
//! [system]
//! a1 = 0
//! a2 = 0.3*lambda1
//! q = 2
//!
//! [solver]
//! tol = 1e-8
//! max_iter = 5000
//! seeds = 4
//! tilt = 0.5
//! preconditioned = true
//! eigen_tol = 1e-10
//! eigen_max_iter = 5000
//!
//! [diagnostics]
//! resolution_deg = 1
//! tol = 1e-3
//! samples = 200
//! ```
//!
//! Every key is optional and the defaults are the values shown. A tabulated
//! kernel takes `family = tabulated`, `table = path.csv` (columns `r, k0`,
//! resolved against the config's directory) and `strictly_decreasing`. A ball
//! takes `shape = ball` and no `r_in`. The grid is set by `h` or by
//! `target_nodes`, never both. Coefficient profiles are a single value or a
//! comma-separated list of `r:value` knots, where a value is a number,
//! `lambda1`, or `c*lambda1`. Comments start with `;` or `#` on their own
//! line. Unknown sections and keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};

use ini::{Ini, ParseOption};
use nlsym_core::geometry::{DomainShape, RadialDomain};
use nlsym_core::solver::RadialProfile;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}: cannot read config: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{path}: unknown key")]
    Unknown { path: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

impl ConfigError {
    pub fn invalid(path: &str, msg: impl fmt::Display) -> Self {
        ConfigError::Invalid { path: path.to_string(), msg: msg.to_string() }
    }
}

/// A coefficient value, possibly relative to the first eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub value: f64,
    pub relative: bool,
}

impl Coefficient {
    pub fn resolve(&self, lambda1: f64) -> f64 {
        if self.relative {
            self.value * lambda1
        } else {
            self.value
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.relative {
            write!(f, "{}*lambda1", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: Coefficient },
    Knots { knots: Vec<(f64, Coefficient)> },
}

impl Profile {
    pub fn resolve(&self, lambda1: f64) -> nlsym_core::Result<RadialProfile> {
        match self {
            Profile::Constant { value } => Ok(RadialProfile::constant(value.resolve(lambda1))),
            Profile::Knots { knots } => {
                RadialProfile::piecewise(knots.iter().map(|(r, c)| [*r, c.resolve(lambda1)]).collect())
            }
        }
    }

    /// Largest `c` among the `c*lambda1` entries, if every entry is relative.
    fn relative_sup(&self) -> Option<f64> {
        let coefs: Vec<Coefficient> = match self {
            Profile::Constant { value } => vec![*value],
            Profile::Knots { knots } => knots.iter().map(|k| k.1).collect(),
        };
        coefs.iter().all(|c| c.relative).then(|| coefs.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max))
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant { value } => write!(f, "{value}"),
            Profile::Knots { knots } => {
                let parts: Vec<String> = knots.iter().map(|(r, c)| format!("{r}:{c}")).collect();
                write!(f, "{}", parts.join(", "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelConfig {
    Fractional { s: f64 },
    Tabulated { table: PathBuf, strictly_decreasing: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Spacing(f64),
    TargetNodes(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub resolution: Resolution,
    pub gauss_points: usize,
    pub cutoff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub a1: Profile,
    pub a2: Profile,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seeds: usize,
    pub tilt: f64,
    pub preconditioned: bool,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub resolution_deg: f64,
    /// Relative to the field's maximum.
    pub tol: f64,
    /// Random instances per property suite.
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kernel: KernelConfig,
    pub domain: RadialDomain,
    pub grid: GridConfig,
    pub system: SystemConfig,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let abs = |value| Coefficient { value, relative: false };
        Self {
            kernel: KernelConfig::Fractional { s: 0.5 },
            domain: RadialDomain { dim: 2, shape: DomainShape::Annulus { r_in: 0.5, r_out: 1.0 } },
            grid: GridConfig { resolution: Resolution::TargetNodes(800), gauss_points: 3, cutoff: None },
            system: SystemConfig {
                a1: Profile::Constant { value: abs(0.0) },
                a2: Profile::Constant { value: Coefficient { value: 0.3, relative: true } },
                q: 2.0,
            },
            solver: SolverConfig {
                tol: 1e-8,
                max_iter: 5000,
                seeds: 4,
                tilt: 0.5,
                preconditioned: true,
                eigen_tol: 1e-10,
                eigen_max_iter: 5000,
            },
            diagnostics: DiagnosticsConfig { resolution_deg: 1.0, tol: 1e-3, samples: 200 },
        }
    }
}

/// Raw `key = value` pairs of one section, consumed as they are read so
/// that leftovers can be reported as unknown.
struct Section {
    name: &'static str,
    entries: Vec<(String, String)>,
}

impl Section {
    fn path(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(pos).1)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| ConfigError::invalid(&self.path(key), e)),
        }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v: Option<f64> = self.parse(key)?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::invalid(&self.path(key), "must be finite")),
            v => Ok(v),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().next() {
            Some((k, _)) => Err(ConfigError::Unknown { path: format!("{}.{}", self.name, k) }),
            None => Ok(()),
        }
    }
}

const SECTIONS: [&str; 6] = ["kernel", "domain", "grid", "system", "solver", "diagnostics"];

fn parse_coefficient(raw: &str, path: &str) -> Result<Coefficient, ConfigError> {
    let t = raw.trim();
    if t == "lambda1" {
        return Ok(Coefficient { value: 1.0, relative: true });
    }
    let (num, relative) = match t.strip_suffix("lambda1") {
        Some(head) => match head.trim_end().strip_suffix('*') {
            Some(n) => (n.trim(), true),
            None => return Err(ConfigError::invalid(path, format!("cannot read `{t}`; expected c*lambda1"))),
        },
        None => (t, false),
    };
    let value: f64 = num.parse().map_err(|e| ConfigError::invalid(path, format!("`{num}`: {e}")))?;
    if !value.is_finite() {
        return Err(ConfigError::invalid(path, "must be finite"));
    }
    Ok(Coefficient { value, relative })
}

pub fn parse_profile(raw: &str, path: &str) -> Result<Profile, ConfigError> {
    if !raw.contains(':') {
        return Ok(Profile::Constant { value: parse_coefficient(raw, path)? });
    }
    let mut knots = Vec::new();
    for part in raw.split(',') {
        let (r, c) = part
            .split_once(':')
            .ok_or_else(|| ConfigError::invalid(path, format!("knot `{}` needs the form r:value", part.trim())))?;
        let r: f64 = r.trim().parse().map_err(|e| ConfigError::invalid(path, format!("radius `{}`: {e}", r.trim())))?;
        knots.push((r, parse_coefficient(c, path)?));
    }
    let profile = Profile::Knots { knots };
    // knot order and finiteness are checked by the core type
    profile.resolve(1.0).map_err(|e| ConfigError::invalid(path, e))?;
    Ok(profile)
}

fn parse_bool(raw: &str, path: &str) -> Result<bool, ConfigError> {
    match raw.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(ConfigError::invalid(path, format!("expected true or false, got `{other}`"))),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let mut cfg = Self::parse(&text)?;
        // relative table paths resolve against the config file
        if let KernelConfig::Tabulated { table, .. } = &mut cfg.kernel {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let opts = ParseOption { enabled_escape: false, ..ParseOption::default() };
        let ini = Ini::load_from_str_opt(text, opts)
            .map_err(|e| ConfigError::Syntax { line: e.line + 1, msg: e.msg.to_string() })?;
        let mut sections: Vec<Section> =
            SECTIONS.iter().map(|&name| Section { name, entries: Vec::new() }).collect();
        for (name, props) in ini.iter() {
            let entries: Vec<(String, String)> = props.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            let Some(name) = name else {
                if let Some((k, _)) = entries.first() {
                    return Err(ConfigError::Unknown { path: k.clone() });
                }
                continue;
            };
            let Some(sec) = sections.iter_mut().find(|s| s.name == name) else {
                return Err(ConfigError::Unknown { path: name.to_string() });
            };
            for (k, v) in entries {
                if sec.entries.iter().any(|(kk, _)| *kk == k) {
                    return Err(ConfigError::invalid(&sec.path(&k), "given twice"));
                }
                sec.entries.push((k, v));
            }
        }
        let mut it = sections.into_iter();
        let mut next = || it.next().expect("six sections");
        let mut cfg = Self::default();
        cfg.read_kernel(next())?;
        cfg.read_domain(next())?;
        cfg.read_grid(next())?;
        cfg.read_system(next())?;
        cfg.read_solver(next())?;
        cfg.read_diagnostics(next())?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn read_kernel(&mut self, mut s: Section) -> Result<(), ConfigError> {
        let family = s.take("family").unwrap_or_else(|| "fractional".into());
        self.kernel = match family.trim() {
            "fractional" => {
                let order = s.number("s")?.unwrap_or(0.5);
                KernelConfig::Fractional { s: order }
            }
            "tabulated" => {
                let table = s.take("table").ok_or_else(|| ConfigError::invalid("kernel.table", "required"))?;
                let strictly = match s.take("strictly_decreasing") {
                    Some(v) => parse_bool(&v, "kernel.strictly_decreasing")?,
                    None => false,
                };
                KernelConfig::Tabulated { table: PathBuf::from(table.trim()), strictly_decreasing: strictly }
            }
            other => return Err(ConfigError::invalid("kernel.family", format!("unknown family `{other}`"))),
        };
        s.finish()
    }

    fn read_domain(&mut self, mut s: Section) -> Result<(), ConfigError> {
        let shape = s.take("shape").unwrap_or_else(|| "annulus".into());
        let dim: usize = s.parse("dim")?.unwrap_or(2);
        let r_out = s.number("r_out")?.unwrap_or(1.0);
        let shape = match shape.trim() {
            "ball" => DomainShape::Ball { r_out },
            "annulus" => DomainShape::Annulus { r_in: s.number("r_in")?.unwrap_or(0.5), r_out },
            other => return Err(ConfigError::invalid("domain.shape", format!("unknown shape `{other}`"))),
        };
        if s.entries.iter().any(|(k, _)| k == "r_in") {
            return Err(ConfigError::invalid("domain.r_in", "only an annulus has an inner radius"));
        }
        self.domain = RadialDomain::new(dim, shape).map_err(|e| ConfigError::invalid("domain", e))?;
        s.finish()
    }

    fn read_grid(&mut self, mut s: Section) -> Result<(), ConfigError> {
        let h = s.number("h")?;
        let target: Option<usize> = s.parse("target_nodes")?;
        self.grid.resolution = match (h, target) {
            (Some(_), Some(_)) => return Err(ConfigError::invalid("grid.h", "give h or target_nodes, not both")),
            (Some(h), None) if h > 0.0 => Resolution::Spacing(h),
            (Some(_), None) => return Err(ConfigError::invalid("grid.h", "must be positive")),
            (None, Some(0)) => return Err(ConfigError::invalid("grid.target_nodes", "must be positive")),
            (None, Some(n)) => Resolution::TargetNodes(n),
            (None, None) => self.grid.resolution,
        };
        if let Some(g) = s.parse::<usize>("gauss_points")? {
            if g == 0 {
                return Err(ConfigError::invalid("grid.gauss_points", "must be positive"));
            }
            self.grid.gauss_points = g;
        }
        if let Some(c) = s.take("cutoff") {
            self.grid.cutoff = match c.trim() {
                "none" => None,
                t => {
                    let v: f64 = t.parse().map_err(|e| ConfigError::invalid("grid.cutoff", e))?;
                    if !(v > 0.0) {
                        return Err(ConfigError::invalid("grid.cutoff", "must be positive"));
                    }
                    Some(v)
                }
            };
        }
        s.finish()
    }

    fn read_system(&mut self, mut s: Section) -> Result<(), ConfigError> {
        if let Some(a) = s.take("a1") {
            self.system.a1 = parse_profile(&a, "system.a1")?;
        }
        if let Some(a) = s.take("a2") {
            self.system.a2 = parse_profile(&a, "system.a2")?;
        }
        if let Some(q) = s.number("q")? {
            self.system.q = q;
        }
        s.finish()
    }

    fn read_solver(&mut self, mut s: Section) -> Result<(), ConfigError> {
        let c = &mut self.solver;
        if let Some(v) = s.number("tol")? {
            c.tol = v;
        }
        if let Some(v) = s.parse("max_iter")? {
            c.max_iter = v;
        }
        if let Some(v) = s.parse("seeds")? {
            c.seeds = v;
        }
        if let Some(v) = s.number("tilt")? {
            c.tilt = v;
        }
        if let Some(v) = s.take("preconditioned") {
            c.preconditioned = parse_bool(&v, "solver.preconditioned")?;
        }
        if let Some(v) = s.number("eigen_tol")? {
            c.eigen_tol = v;
        }
        if let Some(v) = s.parse("eigen_max_iter")? {
            c.eigen_max_iter = v;
        }
        s.finish()
    }

    fn read_diagnostics(&mut self, mut s: Section) -> Result<(), ConfigError> {
        let c = &mut self.diagnostics;
        if let Some(v) = s.number("resolution_deg")? {
            c.resolution_deg = v;
        }
        if let Some(v) = s.number("tol")? {
            c.tol = v;
        }
        if let Some(v) = s.parse("samples")? {
            c.samples = v;
        }
        s.finish()
    }

    /// Cross-field checks that do not need the assembled operator.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let KernelConfig::Fractional { s } = self.kernel {
            if !(s > 0.0 && s < 1.0) {
                return Err(ConfigError::invalid("kernel.s", "must lie in (0, 1)"));
            }
        }
        if !(self.system.q > 1.0) {
            return Err(ConfigError::invalid("system.q", "must exceed 1"));
        }
        for (name, p) in [("system.a1", &self.system.a1), ("system.a2", &self.system.a2)] {
            if let Some(c) = p.relative_sup() {
                if c >= 1.0 {
                    return Err(ConfigError::invalid(name, "the positive part must stay below lambda1"));
                }
            }
        }
        let sv = &self.solver;
        if !(sv.tol > 0.0) {
            return Err(ConfigError::invalid("solver.tol", "must be positive"));
        }
        if !(sv.eigen_tol > 0.0) {
            return Err(ConfigError::invalid("solver.eigen_tol", "must be positive"));
        }
        if sv.max_iter == 0 || sv.eigen_max_iter == 0 {
            return Err(ConfigError::invalid("solver.max_iter", "must be positive"));
        }
        if sv.seeds == 0 {
            return Err(ConfigError::invalid("solver.seeds", "need at least one seed"));
        }
        let d = &self.diagnostics;
        if !(d.resolution_deg > 0.0 && d.resolution_deg <= 90.0) {
            return Err(ConfigError::invalid("diagnostics.resolution_deg", "must lie in (0, 90]"));
        }
        if !(d.tol >= 0.0) {
            return Err(ConfigError::invalid("diagnostics.tol", "must be nonnegative"));
        }
        Ok(())
    }

    /// Render back to the INI grammar; `parse(render(c)) == c`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        match &self.kernel {
            KernelConfig::Fractional { s } => out += &format!("[kernel]\nfamily = fractional\ns = {s}\n"),
            KernelConfig::Tabulated { table, strictly_decreasing } => {
                out += &format!(
                    "[kernel]\nfamily = tabulated\ntable = {}\nstrictly_decreasing = {strictly_decreasing}\n",
                    table.display()
                )
            }
        }
        out += &format!("\n[domain]\ndim = {}\n", self.domain.dim);
        match self.domain.shape {
            DomainShape::Ball { r_out } => out += &format!("shape = ball\nr_out = {r_out}\n"),
            DomainShape::Annulus { r_in, r_out } => {
                out += &format!("shape = annulus\nr_in = {r_in}\nr_out = {r_out}\n")
            }
        }
        out += "\n[grid]\n";
        match self.grid.resolution {
            Resolution::Spacing(h) => out += &format!("h = {h}\n"),
            Resolution::TargetNodes(n) => out += &format!("target_nodes = {n}\n"),
        }
        out += &format!("gauss_points = {}\n", self.grid.gauss_points);
        match self.grid.cutoff {
            Some(c) => out += &format!("cutoff = {c}\n"),
            None => out += "cutoff = none\n",
        }
        let sy = &self.system;
        out += &format!("\n[system]\na1 = {}\na2 = {}\nq = {}\n", sy.a1, sy.a2, sy.q);
        let sv = &self.solver;
        out += &format!(
            "\n[solver]\ntol = {}\nmax_iter = {}\nseeds = {}\ntilt = {}\npreconditioned = {}\neigen_tol = {}\neigen_max_iter = {}\n",
            sv.tol, sv.max_iter, sv.seeds, sv.tilt, sv.preconditioned, sv.eigen_tol, sv.eigen_max_iter
        );
        let d = &self.diagnostics;
        out += &format!(
            "\n[diagnostics]\nresolution_deg = {}\ntol = {}\nsamples = {}\n",
            d.resolution_deg, d.tol, d.samples
        );
        out
    }
}
