//! Assembly of the discrete nonlocal energy
//! `ℰ(u,v) = ½ Σ_{x≠y} (u(x)−u(y))(v(x)−v(y)) W(x,y) + Σ_x κ(x) u(x) v(x)`
//! and the operator `I` it induces through `⟨Iu, v⟩_h = ℰ(u,v)`.
//!
//! Weights are cell integrals `W(x,y) = h^N ∫_{cell(y)} k(x−z) dz`, so that the
//! double sum approximates the continuum double integral. The exterior term
//! `κ(x)` is the same integral taken over every cell that is not an interior
//! node, plus the kernel mass outside the lattice box. This keeps the
//! discrete operator consistent with the interior/exterior split actually
//! realized by the mask.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{unravel, Grid, RadialDomain};
use crate::kernel::KernelSpec;
use crate::math::{
    adaptive_simpson, asin, ceil, cos, fabs, pow, sin, sqrt, unit_sphere_area, Compensated,
    GaussLegendre, PI,
};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssemblyOptions {
    /// Gauss points per axis for singularity-adjacent cells.
    pub gauss_points: usize,
    /// Offsets with `|y − x| < near_radius_cells·h` use cell quadrature.
    pub near_radius_cells: f64,
    /// Pairs farther apart than this distance are dropped from `W` and their
    /// weight moved into `κ`.
    pub cutoff: Option<f64>,
    pub memory_cap_bytes: usize,
    /// Also evaluate the exterior mass of the continuous domain, for the
    /// discrepancy figure in the stats.
    pub analytic_check: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            gauss_points: 3,
            near_radius_cells: 2.0,
            cutoff: None,
            memory_cap_bytes: 2 << 30,
            analytic_check: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssemblyStats {
    pub interior_nodes: usize,
    pub lattice_nodes: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// Largest `|κ − κ_Ω| / κ_Ω` against the exterior mass of the
    /// continuous domain.
    pub analytic_discrepancy: Option<f64>,
    pub memory_bytes: usize,
    /// Weight moved from `W` into `κ` by the cutoff.
    pub cutoff_mass: f64,
}

/// Exterior contribution for one symmetry class of interior nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarField {
    pub kappa: f64,
    /// `h^N ×` kernel mass outside the lattice box.
    pub box_mass: f64,
    pub analytic: Option<f64>,
    pub cutoff_mass: f64,
}

/// Staged assembly: the per-class exterior integrals are independent jobs
/// that callers may run in parallel before calling [`Assembler::finish`].
pub struct Assembler<'a> {
    kernel: &'a KernelSpec,
    grid: &'a Grid,
    opts: AssemblyOptions,
    table: Vec<f64>,
    reps: Vec<usize>,
    rep_of: Vec<usize>,
    memory: usize,
}

impl<'a> Assembler<'a> {
    pub fn new(kernel: &'a KernelSpec, grid: &'a Grid, opts: AssemblyOptions) -> Result<Self> {
        if kernel.dim() != grid.dim() {
            return Err(Error::InvalidKernel(format!(
                "kernel dimension {} differs from grid dimension {}",
                kernel.dim(),
                grid.dim()
            )));
        }
        let report = kernel.validate(None);
        if !report.is_admissible() {
            return Err(Error::InvalidKernel(format!("validation failed: {report:?}")));
        }
        if opts.gauss_points == 0 {
            return Err(Error::Domain("gauss_points must be positive".into()));
        }
        let n = grid.interior().len();
        if n == 0 {
            return Err(Error::Domain("domain contains no grid nodes".into()));
        }
        let span = 2 * grid.half_extent() + 1;
        let table_len = span.pow(grid.dim() as u32);
        let memory = 8 * (n * n + table_len + 4 * n) + 8 * grid.node_count();
        if memory > opts.memory_cap_bytes {
            return Err(Error::ResourceLimit { required: memory, cap: opts.memory_cap_bytes });
        }
        let table = offset_table(kernel, grid, &opts);
        let (reps, rep_of) = symmetry_classes(grid);
        Ok(Self { kernel, grid, opts, table, reps, rep_of, memory })
    }

    pub fn job_count(&self) -> usize {
        self.reps.len()
    }

    /// Exterior terms for symmetry class `job`.
    pub fn far_field(&self, job: usize) -> Result<FarField> {
        let grid = self.grid;
        let dim = grid.dim();
        let x_idx = self.reps[job];
        let zx = grid.coords(x_idx);
        let mut z = vec![0i64; dim];
        let mut kappa = Compensated::new();
        let mut cutoff_mass = Compensated::new();
        let cut2 = self.opts.cutoff.map(|c| {
            let r = c / grid.h();
            r * r
        });
        for y in 0..grid.node_count() {
            grid.coords_into(y, &mut z);
            let inside = grid.is_inside(y);
            if inside {
                if let Some(c2) = cut2 {
                    let d2: i64 = z.iter().zip(&zx).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 as f64 > c2 {
                        let w = self.table[offset_index(&zx, &z, grid.half_extent())];
                        cutoff_mass.add(w);
                        kappa.add(w);
                    }
                }
                continue;
            }
            kappa.add(self.table[offset_index(&zx, &z, grid.half_extent())]);
        }
        let cell = pow(grid.h(), dim as f64);
        let x: Vec<f64> = zx.iter().map(|&c| c as f64 * grid.h()).collect();
        let box_mass = cell * outside_box_mass(self.kernel, &x, (grid.half_extent() as f64 + 0.5) * grid.h())?;
        kappa.add(box_mass);
        let analytic = if self.opts.analytic_check {
            let t = sqrt(x.iter().map(|v| v * v).sum());
            Some(cell * exterior_mass(self.kernel, grid.domain(), t)?)
        } else {
            None
        };
        Ok(FarField { kappa: kappa.value(), box_mass, analytic, cutoff_mass: cutoff_mass.value() })
    }

    pub fn finish(self, far: Vec<FarField>) -> Result<EnergyOperator> {
        if far.len() != self.reps.len() {
            return Err(Error::Domain("far-field results do not match the job list".into()));
        }
        let grid = self.grid;
        let interior = grid.interior();
        let n = interior.len();
        let m = grid.half_extent();
        let dim = grid.dim();
        let mut coords = vec![0i64; n * dim];
        for (k, &idx) in interior.iter().enumerate() {
            grid.coords_into(idx, &mut coords[k * dim..(k + 1) * dim]);
        }
        let cut2 = self.opts.cutoff.map(|c| {
            let r = c / grid.h();
            r * r
        });
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            let zi = &coords[i * dim..(i + 1) * dim];
            for j in (i + 1)..n {
                let zj = &coords[j * dim..(j + 1) * dim];
                if let Some(c2) = cut2 {
                    let d2: i64 = zi.iter().zip(zj).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 as f64 > c2 {
                        continue;
                    }
                }
                let w = self.table[offset_index(zi, zj, m)];
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        let mut kappa = Vec::with_capacity(n);
        let mut box_mass = Vec::with_capacity(n);
        let mut worst: Option<f64> = None;
        let mut cutoff_mass = Compensated::new();
        for k in 0..n {
            let f = far[self.rep_of[k]];
            kappa.push(f.kappa);
            box_mass.push(f.box_mass);
            cutoff_mass.add(f.cutoff_mass);
            if let Some(a) = f.analytic {
                let rel = fabs(f.kappa - f.cutoff_mass - a) / a;
                worst = Some(worst.map_or(rel, |w: f64| w.max(rel)));
            }
        }
        let stats = AssemblyStats {
            interior_nodes: n,
            lattice_nodes: grid.node_count(),
            kappa_min: kappa.iter().copied().fold(f64::INFINITY, f64::min),
            kappa_max: kappa.iter().copied().fold(0.0, f64::max),
            analytic_discrepancy: worst,
            memory_bytes: self.memory,
            cutoff_mass: cutoff_mass.value(),
        };
        Ok(EnergyOperator {
            kernel: self.kernel.clone(),
            grid: grid.clone(),
            opts: self.opts,
            weights,
            kappa,
            box_mass,
            table: self.table,
            stats,
        })
    }
}

/// Sequential assembly.
pub fn assemble(kernel: &KernelSpec, grid: &Grid, opts: AssemblyOptions) -> Result<EnergyOperator> {
    let asm = Assembler::new(kernel, grid, opts)?;
    let far = (0..asm.job_count()).map(|j| asm.far_field(j)).collect::<Result<Vec<_>>>()?;
    asm.finish(far)
}

/// Index into the offset table for the pair `(a, b)`.
#[inline]
fn offset_index(a: &[i64], b: &[i64], m: usize) -> usize {
    let span = 2 * m + 1;
    let mut idx = 0usize;
    for (x, y) in a.iter().zip(b) {
        idx = idx * span + (x - y).unsigned_abs() as usize;
    }
    idx
}

/// `W` for every absolute offset in `[0, 2M]^N`; entries depend only on the
/// sorted offset, so lattice symmetries act exactly.
fn offset_table(kernel: &KernelSpec, grid: &Grid, opts: &AssemblyOptions) -> Vec<f64> {
    let dim = grid.dim();
    let span = 2 * grid.half_extent() + 1;
    let len = span.pow(dim as u32);
    let h = grid.h();
    let cell = pow(h, dim as f64);
    let rule = GaussLegendre::new(opts.gauss_points);
    let near2 = opts.near_radius_cells * opts.near_radius_cells;
    let mut table = vec![0.0; len];
    let mut offset = vec![0i64; dim];
    let mut sorted = vec![0i64; dim];
    let decode = |idx: usize, out: &mut [i64]| {
        let mut rest = idx;
        for c in out.iter_mut().rev() {
            *c = (rest % span) as i64;
            rest /= span;
        }
    };
    // sorted offsets first, then every permutation copies its sorted entry
    for (idx, slot) in table.iter_mut().enumerate() {
        decode(idx, &mut offset);
        if offset.windows(2).all(|w| w[0] <= w[1]) {
            *slot = cell * cell_integral(kernel, &offset, h, near2, &rule);
        }
    }
    for idx in 0..len {
        decode(idx, &mut offset);
        sorted.copy_from_slice(&offset);
        sorted.sort_unstable();
        if sorted != offset {
            let src = sorted.iter().fold(0usize, |acc, &c| acc * span + c as usize);
            table[idx] = table[src];
        }
    }
    table
}

/// `∫_{cell(d)} k(z) dz` for integer offset `d ≠ 0`, in units where the cell
/// has side `h`.
fn cell_integral(kernel: &KernelSpec, d: &[i64], h: f64, near2: f64, rule: &GaussLegendre) -> f64 {
    let dim = d.len();
    let d2: i64 = d.iter().map(|c| c * c).sum();
    if d2 == 0 {
        return 0.0;
    }
    let cell = pow(h, dim as f64);
    if (d2 as f64) >= near2 {
        return cell * kernel.k0(h * sqrt(d2 as f64));
    }
    let p = rule.nodes.len();
    let total = pow(p as f64, dim as f64) as usize;
    let mut acc = Compensated::new();
    for k in 0..total {
        let mut rest = k;
        let mut w = 1.0;
        let mut r2 = 0.0;
        for &c in d.iter().rev() {
            let g = rest % p;
            rest /= p;
            // reference weights sum to 2 per axis on [-1,1]
            w *= 0.5 * rule.weights[g];
            let y = c as f64 + 0.5 * rule.nodes[g];
            r2 += y * y;
        }
        acc.add(w * kernel.k0(h * sqrt(r2)));
    }
    cell * acc.value()
}

/// Interior nodes grouped by sorted absolute coordinates. Every radial mask
/// is invariant under signed coordinate permutations, so one representative
/// per class suffices for the exterior integrals.
fn symmetry_classes(grid: &Grid) -> (Vec<usize>, Vec<usize>) {
    let mut classes: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut reps = Vec::new();
    let mut rep_of = Vec::with_capacity(grid.interior().len());
    let mut z = vec![0i64; grid.dim()];
    for &idx in grid.interior() {
        unravel(idx, grid.half_extent(), &mut z);
        let mut key: Vec<i64> = z.iter().map(|c| c.abs()).collect();
        key.sort_unstable();
        let next = reps.len();
        let class = *classes.entry(key.clone()).or_insert(next);
        if class == next {
            reps.push(grid.index(&key).expect("canonical node lies on the grid"));
        }
        rep_of.push(class);
    }
    (reps, rep_of)
}

/// Kernel mass outside the box `[-b, b]^N` seen from `x`, via the flux of
/// `T(|y|) y / |y|^N` through the faces, `T(ρ) = ∫_ρ^∞ k0 r^{N-1} dr`.
pub fn outside_box_mass(kernel: &KernelSpec, x: &[f64], b: f64) -> Result<f64> {
    let dim = x.len();
    let rule = GaussLegendre::new(8);
    let mut total = Compensated::new();
    for axis in 0..dim {
        for sign in [-1.0, 1.0] {
            let dist = b - sign * x[axis];
            if !(dist > 0.0) {
                return Err(Error::Domain("point lies outside the lattice box".into()));
            }
            if dim == 1 {
                total.add(kernel.tail_mass(dist)?);
                continue;
            }
            let panels = (ceil(2.0 * b / dist) as usize).clamp(2, 64);
            let others: Vec<f64> = (0..dim).filter(|&i| i != axis).map(|i| x[i]).collect();
            let mut err = None;
            let v = face_integral(&rule, panels, b, &others, &mut |t2| {
                let r = sqrt(dist * dist + t2);
                match kernel.tail_mass(r) {
                    Ok(m) => m * dist / pow(r, dim as f64),
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            total.add(v);
        }
    }
    Ok(total.value())
}

/// Tensor composite Gauss rule over `[-b, b]^{N-1}`; `f` receives the squared
/// distance of the quadrature point from `center` within the face.
fn face_integral<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    panels: usize,
    b: f64,
    center: &[f64],
    f: &mut F,
) -> f64 {
    let k = center.len();
    let p = rule.nodes.len();
    let per_axis = panels * p;
    let step = 2.0 * b / panels as f64;
    // one-dimensional nodes and weights along an axis
    let mut nodes = Vec::with_capacity(per_axis);
    let mut weights = Vec::with_capacity(per_axis);
    for panel in 0..panels {
        let lo = -b + step * panel as f64;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(lo + 0.5 * step * (x + 1.0));
            weights.push(0.5 * step * w);
        }
    }
    let total = per_axis.pow(k as u32);
    let mut acc = Compensated::new();
    for flat in 0..total {
        let mut rest = flat;
        let mut w = 1.0;
        let mut t2 = 0.0;
        for c in center {
            let i = rest % per_axis;
            rest /= per_axis;
            w *= weights[i];
            let d = nodes[i] - c;
            t2 += d * d;
        }
        acc.add(w * f(t2));
    }
    acc.value()
}

/// `∫_{ℝ^N∖Ω} k(x − z) dz` for `|x| = t` inside the radial domain, by
/// integrating the radial tail along rays over the polar angle.
pub fn exterior_mass(kernel: &KernelSpec, domain: &RadialDomain, t: f64) -> Result<f64> {
    let dim = domain.dim;
    let r_out = domain.r_out();
    let r_in = domain.r_in();
    let mut err = None;
    let mut along = |phi: f64| -> f64 {
        let (c, s) = (cos(phi), sin(phi));
        let perp = t * s;
        let out = -t * c + sqrt((r_out * r_out - perp * perp).max(0.0));
        let mut m = match kernel.tail_mass(out) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                return 0.0;
            }
        };
        if r_in > 0.0 && c < 0.0 && perp < r_in {
            let half = sqrt(r_in * r_in - perp * perp);
            let (a, b) = (-t * c - half, -t * c + half);
            if a > 0.0 {
                m += kernel.radial_mass(a, b).unwrap_or(0.0);
            }
        }
        m * pow(s, dim as f64 - 2.0)
    };
    let tol = 1e-11;
    let depth = 40;
    let body = if r_in > 0.0 && t > 0.0 {
        let tangent = PI - asin((r_in / t).min(1.0));
        adaptive_simpson(0.0, tangent, tol, depth, &mut along)
            + adaptive_simpson(tangent, PI, tol, depth, &mut along)
    } else {
        adaptive_simpson(0.0, 0.5 * PI, tol, depth, &mut along)
            + adaptive_simpson(0.5 * PI, PI, tol, depth, &mut along)
    };
    if let Some(e) = err {
        return Err(e);
    }
    Ok(unit_sphere_area(dim - 1) * body)
}

/// Assembled discrete energy.
#[derive(Clone, Debug)]
pub struct EnergyOperator {
    kernel: KernelSpec,
    grid: Grid,
    opts: AssemblyOptions,
    weights: Vec<f64>,
    kappa: Vec<f64>,
    box_mass: Vec<f64>,
    table: Vec<f64>,
    stats: AssemblyStats,
}

impl EnergyOperator {
    pub fn assemble(kernel: &KernelSpec, grid: &Grid, opts: AssemblyOptions) -> Result<Self> {
        assemble(kernel, grid, opts)
    }

    /// Rebuild an operator from stored weights and exterior terms.
    pub fn from_parts(
        kernel: KernelSpec,
        grid: Grid,
        opts: AssemblyOptions,
        weights: Vec<f64>,
        kappa: Vec<f64>,
        box_mass: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.interior().len();
        if weights.len() != n * n || kappa.len() != n || box_mass.len() != n {
            return Err(Error::GridMismatch);
        }
        let table = offset_table(&kernel, &grid, &opts);
        let stats = AssemblyStats {
            interior_nodes: n,
            lattice_nodes: grid.node_count(),
            kappa_min: kappa.iter().copied().fold(f64::INFINITY, f64::min),
            kappa_max: kappa.iter().copied().fold(0.0, f64::max),
            analytic_discrepancy: None,
            memory_bytes: 8 * (weights.len() + table.len()),
            cutoff_mass: 0.0,
        };
        Ok(Self { kernel, grid, opts, weights, kappa, box_mass, table, stats })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn options(&self) -> &AssemblyOptions {
        &self.opts
    }

    pub fn stats(&self) -> &AssemblyStats {
        &self.stats
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// Row-major `n × n` weights between interior nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// Per-node weight of the kernel mass outside the lattice box.
    pub fn box_mass(&self) -> &[f64] {
        &self.box_mass
    }

    /// `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.grid.shape().cell_volume()
    }

    /// Weight between two arbitrary lattice nodes (0 for identical nodes).
    pub fn lattice_weight(&self, a: usize, b: usize) -> f64 {
        let g = &self.grid;
        self.table[offset_index(&g.coords(a), &g.coords(b), g.half_extent())]
    }

    /// `ℰ(u,v)` on interior value vectors.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        form_value(self.len(), &self.weights, &self.kappa, u, v)
    }

    pub fn bilinear(&self, u: &Field, v: &Field) -> Result<f64> {
        u.check_grid(&self.grid)?;
        v.check_grid(&self.grid)?;
        Ok(self.form(&u.interior_values(&self.grid), &v.interior_values(&self.grid)))
    }

    pub fn energy(&self, u: &Field) -> Result<f64> {
        self.bilinear(u, u)
    }

    /// `Iu` on interior value vectors.
    pub fn apply_interior(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let cell = self.cell_volume();
        (0..n)
            .map(|i| {
                let row = &self.weights[i * n..(i + 1) * n];
                let mut acc = Compensated::new();
                for (j, w) in row.iter().enumerate() {
                    if *w != 0.0 {
                        acc.add((u[i] - u[j]) * w);
                    }
                }
                acc.add(self.kappa[i] * u[i]);
                acc.value() / cell
            })
            .collect()
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        u.check_grid(&self.grid)?;
        let out = self.apply_interior(&u.interior_values(&self.grid));
        Field::from_interior(&self.grid, &out)
    }

    /// Diagonal of the weight Laplacian plus `κ`, in form units.
    pub fn degrees(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = Compensated::new();
                for w in &self.weights[i * n..(i + 1) * n] {
                    acc.add(*w);
                }
                acc.add(self.kappa[i]);
                acc.value()
            })
            .collect()
    }

    /// Dense symmetric matrix of `I` on interior nodes, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.len();
        let cell = self.cell_volume();
        let deg = self.degrees();
        let mut a: Vec<f64> = self.weights.iter().map(|w| -w / cell).collect();
        for i in 0..n {
            a[i * n + i] = deg[i] / cell;
        }
        a
    }

    /// `ρ(u) = Σ_{x∈Ω} Σ_{y≠x} (u(x)−u(y))² W(x,y)` for a field that may be
    /// nonzero outside the domain; the sum runs over the whole lattice plus
    /// the mass outside it. The cutoff option is ignored here.
    pub fn rho(&self, u: &Field) -> Result<f64> {
        u.check_grid(&self.grid)?;
        let g = &self.grid;
        let dim = g.dim();
        let m = g.half_extent();
        let vals = u.values();
        let mut zx = vec![0i64; dim];
        let mut zy = vec![0i64; dim];
        let mut acc = Compensated::new();
        for (k, &x) in g.interior().iter().enumerate() {
            g.coords_into(x, &mut zx);
            for y in 0..g.node_count() {
                if y == x {
                    continue;
                }
                g.coords_into(y, &mut zy);
                let d = vals[x] - vals[y];
                if d != 0.0 {
                    acc.add(d * d * self.table[offset_index(&zx, &zy, m)]);
                }
            }
            acc.add(vals[x] * vals[x] * self.box_mass[k]);
        }
        Ok(acc.value())
    }
}

/// `½ Σ_{i≠j} (u_i−u_j)(v_i−v_j) W_ij + Σ κ_i u_i v_i` for a dense weight
/// matrix.
pub fn form_value(n: usize, weights: &[f64], kappa: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let mut acc = Compensated::new();
    for i in 0..n {
        let row = &weights[i * n..(i + 1) * n];
        let (ui, vi) = (u[i], v[i]);
        for j in (i + 1)..n {
            let w = row[j];
            if w != 0.0 {
                acc.add((ui - u[j]) * (vi - v[j]) * w);
            }
        }
        acc.add(kappa[i] * ui * vi);
    }
    acc.value()
}
