//! Polarization `u_H`, reflection dominance, the two-point rearrangement
//! inequalities, and the foliated Schwarz tests built on them.

use alloc::vec;
use alloc::vec::Vec;

use crate::energy::EnergyOperator;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{integer_reflection, reflect, reflection_pairing, Grid, HalfSpace, Pairing, Side};
use crate::math::{atan2, cos, fabs, floor, sin, sqrt, PI};

/// A half-space whose reflection maps the lattice onto itself.
#[derive(Clone, Debug)]
pub struct ExactReflection {
    halfspace: HalfSpace,
    perm: Vec<usize>,
    side: Vec<Side>,
}

impl ExactReflection {
    pub fn new(grid: &Grid, halfspace: &HalfSpace) -> Result<Self> {
        let Pairing::Exact(perm) = reflection_pairing(grid, halfspace)? else {
            return Err(Error::ApproximatePairing);
        };
        let mut z = vec![0i64; grid.dim()];
        let side = (0..grid.node_count())
            .map(|i| {
                grid.coords_into(i, &mut z);
                halfspace.side_of(&z)
            })
            .collect();
        Ok(Self { halfspace: halfspace.clone(), perm, side })
    }

    /// The eight lattice-compatible planar directions, at multiples of 45°.
    pub fn planar_family(grid: &Grid) -> Result<Vec<Self>> {
        (0..8).map(|k| Self::new(grid, &lattice_direction(k))).collect()
    }

    pub fn halfspace(&self) -> &HalfSpace {
        &self.halfspace
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn side(&self, idx: usize) -> Side {
        self.side[idx]
    }

    /// Fails unless the reflection maps the domain mask onto itself.
    pub fn check_mask(&self, grid: &Grid) -> Result<()> {
        if self.perm.len() != grid.node_count() {
            return Err(Error::GridMismatch);
        }
        if (0..grid.node_count()).all(|i| grid.is_inside(i) == grid.is_inside(self.perm[i])) {
            Ok(())
        } else {
            Err(Error::AsymmetricMask)
        }
    }

    /// `u_H`: larger value on the `H` side, smaller on the other, unchanged
    /// on the hyperplane.
    pub fn polarize(&self, u: &Field) -> Result<Field> {
        if u.values().len() != self.perm.len() {
            return Err(Error::GridMismatch);
        }
        let vals = u.values();
        let out = vals
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let b = vals[self.perm[i]];
                match self.side[i] {
                    Side::Inside => a.max(b),
                    Side::Outside => a.min(b),
                    Side::Boundary => a,
                }
            })
            .collect::<Vec<f64>>();
        let mut f = u.clone();
        f.values_mut().copy_from_slice(&out);
        Ok(f)
    }

    /// The complementary half-space `σ(H)`, sharing the permutation.
    pub fn flipped(&self) -> Self {
        let side = self
            .side
            .iter()
            .map(|s| match s {
                Side::Inside => Side::Outside,
                Side::Outside => Side::Inside,
                Side::Boundary => Side::Boundary,
            })
            .collect();
        Self { halfspace: self.halfspace.flipped(), perm: self.perm.clone(), side }
    }

    /// `u∘σ`.
    pub fn reflect_field(&self, u: &Field) -> Field {
        let vals = u.values();
        let mut f = u.clone();
        for (i, slot) in f.values_mut().iter_mut().enumerate() {
            *slot = vals[self.perm[i]];
        }
        f
    }
}

/// Planar unit normal at `k·45°`, with exact components on the axes.
pub fn lattice_direction(k: usize) -> HalfSpace {
    let r = core::f64::consts::FRAC_1_SQRT_2;
    let e = match k % 8 {
        0 => [1.0, 0.0],
        1 => [r, r],
        2 => [0.0, 1.0],
        3 => [-r, r],
        4 => [-1.0, 0.0],
        5 => [-r, -r],
        6 => [0.0, -1.0],
        _ => [r, -r],
    };
    HalfSpace::new(e.to_vec()).expect("unit vector")
}

/// Normal at `deg` degrees, snapping the eight lattice-compatible angles to
/// their exact representation.
pub fn direction_at_degrees(deg: f64) -> HalfSpace {
    let k = deg / 45.0;
    let kr = floor(k + 0.5);
    if fabs(k - kr) < 1e-12 {
        lattice_direction((kr as i64).rem_euclid(8) as usize)
    } else {
        HalfSpace::from_angle(deg * PI / 180.0)
    }
}

pub fn polarize(u: &Field, grid: &Grid, halfspace: &HalfSpace) -> Result<Field> {
    u.check_grid(grid)?;
    ExactReflection::new(grid, halfspace)?.polarize(u)
}

/// Per-node sums of absolute second differences along each axis; nodes off
/// the lattice count as zero.
pub fn curvature(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let dim = grid.dim();
    let mut z = vec![0i64; dim];
    let mut out = vec![0.0; grid.node_count()];
    for (i, slot) in out.iter_mut().enumerate() {
        grid.coords_into(i, &mut z);
        let mut acc = 0.0;
        for a in 0..dim {
            let c = z[a];
            z[a] = c + 1;
            let up = grid.index(&z).map_or(0.0, |j| values[j]);
            z[a] = c - 1;
            let down = grid.index(&z).map_or(0.0, |j| values[j]);
            z[a] = c;
            acc += fabs(up - 2.0 * values[i] + down);
        }
        *slot = acc;
    }
    out
}

/// Multilinear interpolation of lattice values at `x` (physical
/// coordinates), returning the value and an error bound: one eighth of the
/// largest second-difference sum over the cell corners, or the spread of the
/// corner values when a corner lies outside the mask or within `1.5h` of the
/// boundary. Fields there behave like a fractional power of the distance to
/// the boundary and second differences say little about the cell interior.
pub fn interpolate(grid: &Grid, values: &[f64], curv: &[f64], x: &[f64]) -> (f64, f64) {
    let dim = grid.dim();
    let m = grid.half_extent() as i64;
    let mut base = vec![0i64; dim];
    let mut frac = vec![0.0; dim];
    for i in 0..dim {
        let y = x[i] / grid.h();
        let f = floor(y);
        base[i] = f as i64;
        frac[i] = y - f;
        if frac[i] < 1e-12 {
            frac[i] = 0.0;
        } else if frac[i] > 1.0 - 1e-12 {
            base[i] += 1;
            frac[i] = 0.0;
        }
    }
    let exact = frac.iter().all(|&f| f == 0.0);
    let mut corner = vec![0i64; dim];
    let mut value = 0.0;
    let mut bound = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut straddles = false;
    for bits in 0..(1usize << dim) {
        let mut w = 1.0;
        for i in 0..dim {
            let up = (bits >> i) & 1 == 1;
            corner[i] = base[i] + up as i64;
            w *= if up { frac[i] } else { 1.0 - frac[i] };
        }
        if w == 0.0 || corner.iter().any(|c| c.abs() > m) {
            continue;
        }
        let j = grid.index(&corner).expect("bounds checked");
        value += w * values[j];
        lo = lo.min(values[j]);
        hi = hi.max(values[j]);
        straddles |= !grid.is_inside(j) || near_boundary(grid, &corner);
        if !exact {
            bound = bound.max(curv[j] / 8.0);
        }
    }
    if straddles && !exact {
        bound = bound.max(hi - lo);
    }
    (value, bound)
}

fn near_boundary(grid: &Grid, z: &[i64]) -> bool {
    let h = grid.h();
    let r = sqrt(z.iter().map(|&c| (c as f64 * h) * (c as f64 * h)).sum());
    let dom = grid.domain();
    let d = (dom.r_out() - r).min(if dom.r_in() > 0.0 { r - dom.r_in() } else { f64::INFINITY });
    d < 1.5 * h
}

/// Dominance of `u` over its reflection on the `H` side.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dominance {
    pub holds: bool,
    /// `max (u(σx) − u(x))⁺` over interior nodes with `x·e > 0`.
    pub max_violation: f64,
    /// Largest interpolation error bound used (0 for exact directions).
    pub interpolation_bound: f64,
    pub exact: bool,
}

/// Reflected value `u(σx)` at an interior node, with its interpolation
/// bound. Exact for lattice-compatible directions.
struct Reflector<'a> {
    grid: &'a Grid,
    matrix: Option<Vec<i64>>,
    normal: &'a [f64],
}

impl<'a> Reflector<'a> {
    fn new(grid: &'a Grid, hs: &'a HalfSpace) -> Self {
        Self { grid, matrix: integer_reflection(hs.normal()), normal: hs.normal() }
    }

    fn sample(&self, values: &[f64], curv: &[f64], z: &[i64], image: &mut [i64]) -> (f64, f64) {
        let n = z.len();
        if let Some(r) = &self.matrix {
            for i in 0..n {
                image[i] = (0..n).map(|j| r[i * n + j] * z[j]).sum();
            }
            let j = self.grid.index(image).expect("signed permutation stays on the lattice");
            return (values[j], 0.0);
        }
        let x: Vec<f64> = z.iter().map(|&c| c as f64 * self.grid.h()).collect();
        let y = reflect(&x, self.normal);
        interpolate(self.grid, values, curv, &y)
    }
}

pub fn is_polarized(u: &Field, grid: &Grid, halfspace: &HalfSpace, tol: f64) -> Result<Dominance> {
    u.check_grid(grid)?;
    let curv = curvature(grid, u.values());
    Ok(dominance_with(u.values(), &curv, grid, halfspace, tol))
}

fn dominance_with(values: &[f64], curv: &[f64], grid: &Grid, hs: &HalfSpace, tol: f64) -> Dominance {
    let refl = Reflector::new(grid, hs);
    let mut z = vec![0i64; grid.dim()];
    let mut image = vec![0i64; grid.dim()];
    let mut holds = true;
    let mut worst = 0.0f64;
    let mut bound_max = 0.0f64;
    for &i in grid.interior() {
        grid.coords_into(i, &mut z);
        if hs.side_of(&z) != Side::Inside {
            continue;
        }
        let (r, bound) = refl.sample(values, curv, &z, &mut image);
        let v = r - values[i];
        worst = worst.max(v);
        bound_max = bound_max.max(bound);
        if v > tol + bound {
            holds = false;
        }
    }
    Dominance { holds, max_violation: worst, interpolation_bound: bound_max, exact: refl.matrix.is_some() }
}

/// `max (|u − u∘σ| − bound)` over interior nodes, where `bound` is the
/// interpolation allowance at each node.
fn reflection_excess(values: &[f64], curv: &[f64], grid: &Grid, hs: &HalfSpace) -> f64 {
    let refl = Reflector::new(grid, hs);
    let mut z = vec![0i64; grid.dim()];
    let mut image = vec![0i64; grid.dim()];
    grid.interior().iter().fold(f64::NEG_INFINITY, |m, &i| {
        grid.coords_into(i, &mut z);
        let (r, bound) = refl.sample(values, curv, &z, &mut image);
        m.max(fabs(r - values[i]) - bound)
    })
}

/// Which branch of the equality dichotomy an energy-preserving
/// polarization falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EqualityClass {
    /// `ℰ(u_H,u_H) < ℰ(u,u)`.
    Strict,
    /// Equal energies and `u = u_H`.
    Polarized,
    /// Equal energies and `u = u_{σ(H)}`.
    Reflected,
    /// Equal energies with neither identity.
    Unclassified,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyReduction {
    pub before: f64,
    pub after: f64,
    pub class: EqualityClass,
}

/// Relative tolerance for calling two energies equal.
pub const EQUALITY_TOL: f64 = 1e-9;

pub fn energy_reduction_check(
    op: &EnergyOperator,
    u: &Field,
    refl: &ExactReflection,
) -> Result<EnergyReduction> {
    let grid = op.grid();
    u.check_grid(grid)?;
    refl.check_mask(grid)?;
    let uh = refl.polarize(u)?;
    let before = op.energy(u)?;
    let after = op.energy(&uh)?;
    let scale = before.abs().max(after.abs()).max(f64::MIN_POSITIVE);
    let class = if fabs(before - after) > EQUALITY_TOL * scale {
        EqualityClass::Strict
    } else {
        let same = |a: &Field, b: &Field| {
            let m = a.max_abs().max(b.max_abs());
            a.values().iter().zip(b.values()).all(|(x, y)| fabs(x - y) <= 1e-12 * m)
        };
        if same(u, &uh) {
            EqualityClass::Polarized
        } else {
            if same(u, &refl.flipped().polarize(u)?) {
                EqualityClass::Reflected
            } else {
                EqualityClass::Unclassified
            }
        }
    };
    Ok(EnergyReduction { before, after, class })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProductNorm {
    /// `‖uv‖_q`.
    pub before: f64,
    /// `‖u_H v_H‖_q`.
    pub after: f64,
    pub equal: bool,
    /// `(u(x)−u(σx))(v(x)−v(σx)) ≥ 0` on every `H`-side node.
    pub condition: bool,
}

pub fn product_norm_check(u: &Field, v: &Field, refl: &ExactReflection, q: f64) -> Result<ProductNorm> {
    u.check_same(v)?;
    if !(q >= 1.0) {
        return Err(Error::Domain("product norm exponent must be at least 1".into()));
    }
    if u.values().iter().chain(v.values()).any(|&x| x < 0.0) {
        return Err(Error::Domain("product norm check needs nonnegative fields".into()));
    }
    let uh = refl.polarize(u)?;
    let vh = refl.polarize(v)?;
    let before = u.zip_map(v, |a, b| a * b)?.norm_q(q);
    let after = uh.zip_map(&vh, |a, b| a * b)?.norm_q(q);
    let (uv, vv) = (u.values(), v.values());
    let condition = (0..uv.len()).all(|i| {
        refl.side[i] != Side::Inside || {
            let j = refl.perm[i];
            (uv[i] - uv[j]) * (vv[i] - vv[j]) >= 0.0
        }
    });
    let scale = before.max(after).max(f64::MIN_POSITIVE);
    Ok(ProductNorm { before, after, equal: fabs(after - before) <= EQUALITY_TOL * scale, condition })
}

/// The two-point functionals `f` and `g` for `x₁, x₂ ∈ H`, given the values
/// `u(x_j)` and `u(σx_j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPoint {
    pub f: f64,
    pub g: f64,
    /// `2|η₁η₂| − 2η₁η₂` with `η_j = (u(x_j) − u(σx_j))/2`.
    pub f_closed: f64,
    /// `(u(x₁) − u(σx₁))(u(x₂) − u(σx₂)) ≥ 0`.
    pub same_sign: bool,
}

pub fn two_point(u1: f64, u1s: f64, u2: f64, u2s: f64) -> TwoPoint {
    let (p1, m1) = (u1.max(u1s), u1.min(u1s));
    let (p2, m2) = (u2.max(u2s), u2.min(u2s));
    let f = p1 * p2 + m1 * m2 - u1 * u2 - u1s * u2s;
    let g = p1 * m2 + m1 * p2 - u1 * u2s - u1s * u2;
    let e1 = 0.5 * (u1 - u1s);
    let e2 = 0.5 * (u2 - u2s);
    let f_closed = 2.0 * fabs(e1 * e2) - 2.0 * e1 * e2;
    TwoPoint { f, g, f_closed, same_sign: (u1 - u1s) * (u2 - u2s) >= 0.0 }
}

/// Angular profile of one ring.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RingProfile {
    pub radius: f64,
    /// Polar angles from `p`, in `[0, π]`.
    pub angles: Vec<f64>,
    /// Samples on the counterclockwise side of `p`.
    pub upper: Vec<f64>,
    /// Samples on the clockwise side.
    pub lower: Vec<f64>,
    /// Largest rise above the running minimum as the angle grows.
    pub monotonicity_residual: f64,
    /// `max |upper − lower|`.
    pub symmetry_residual: f64,
    pub interpolation_bound: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoliatedReport {
    pub holds: bool,
    pub axis: [f64; 2],
    pub rings: Vec<RingProfile>,
}

impl FoliatedReport {
    pub fn max_residual(&self) -> f64 {
        self.rings.iter().fold(0.0, |m, r| m.max(r.monotonicity_residual).max(r.symmetry_residual))
    }
}

/// Samples per ring.
pub const RING_SAMPLES: usize = 256;

/// Planar test: on rings of radius `2h, 4h, …` inside the domain, `u` must
/// be symmetric about the axis `p` and nonincreasing in the polar angle.
pub fn foliated_schwarz_check(u: &Field, grid: &Grid, p: &[f64], tol: f64) -> Result<FoliatedReport> {
    u.check_grid(grid)?;
    if grid.dim() != 2 || p.len() != 2 {
        return Err(Error::Domain("foliated Schwarz check is planar".into()));
    }
    if fabs(sqrt(p[0] * p[0] + p[1] * p[1]) - 1.0) > 1e-9 {
        return Err(Error::Domain("axis must be a unit vector".into()));
    }
    let h = grid.h();
    let dom = grid.domain();
    let alpha = atan2(p[1], p[0]);
    let curv = curvature(grid, u.values());
    let half = RING_SAMPLES / 2;
    let mut rings = Vec::new();
    let mut k = 1;
    loop {
        let r = 2.0 * h * k as f64;
        k += 1;
        if r > dom.r_out() - 1.5 * h {
            break;
        }
        if r < dom.r_in() + 1.5 * h {
            continue;
        }
        let mut angles = Vec::with_capacity(half + 1);
        let mut upper = Vec::with_capacity(half + 1);
        let mut lower = Vec::with_capacity(half + 1);
        let mut bound = 0.0f64;
        for j in 0..=half {
            let theta = PI * j as f64 / half as f64;
            angles.push(theta);
            for (sign, out) in [(1.0, &mut upper), (-1.0, &mut lower)] {
                let phi = alpha + sign * theta;
                let (v, b) = interpolate(grid, u.values(), &curv, &[r * cos(phi), r * sin(phi)]);
                out.push(v);
                bound = bound.max(b);
            }
        }
        let rise = |s: &[f64]| {
            let mut low = s[0];
            let mut worst = 0.0f64;
            for &v in s {
                worst = worst.max(v - low);
                low = low.min(v);
            }
            worst
        };
        let monotonicity_residual = rise(&upper).max(rise(&lower));
        let symmetry_residual = upper.iter().zip(&lower).fold(0.0f64, |m, (a, b)| m.max(fabs(a - b)));
        let passes = monotonicity_residual <= tol + 2.0 * bound && symmetry_residual <= tol + 2.0 * bound;
        rings.push(RingProfile {
            radius: r,
            angles,
            upper,
            lower,
            monotonicity_residual,
            symmetry_residual,
            interpolation_bound: bound,
            passes,
        });
    }
    let holds = rings.iter().all(|r| r.passes);
    Ok(FoliatedReport { holds, axis: [p[0], p[1]], rings })
}

/// Result of the angular sweep.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "verdict", rename_all = "snake_case"))]
pub enum AxisVerdict {
    /// Every swept direction dominates; `p` is the first sweep direction.
    Radial { p: [f64; 2] },
    /// Midpoint of a dominance arc whose endpoints are reflection planes of
    /// symmetry. Angles in radians.
    Axis { p: [f64; 2], arc_start: f64, arc_end: f64 },
    /// Only isolated dominance directions were found.
    Inconclusive,
    None,
}

impl AxisVerdict {
    pub fn axis(&self) -> Option<[f64; 2]> {
        match self {
            AxisVerdict::Radial { p } | AxisVerdict::Axis { p, .. } => Some(*p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionVerdict {
    /// Angle of the normal, radians.
    pub angle: f64,
    pub exact: bool,
    pub holds: bool,
    pub max_violation: f64,
    pub interpolation_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AxisReport {
    pub verdict: AxisVerdict,
    pub directions: Vec<DirectionVerdict>,
    pub resolution_deg: f64,
}

/// Steps scanned inward from each run edge when locating an arc end.
const END_WINDOW: usize = 4;

/// Sweep normals at `resolution_deg` steps, collect the directions in which
/// every field dominates its reflection, and read the axis off the longest
/// dominance arc whose endpoints are planes of symmetry.

pub fn find_axis(fields: &[&Field], grid: &Grid, tol: f64, resolution_deg: f64) -> Result<AxisReport> {
    if grid.dim() != 2 {
        return Err(Error::Domain("axis sweep is planar".into()));
    }
    if !(resolution_deg > 0.0 && resolution_deg <= 90.0) {
        return Err(Error::Domain("sweep resolution must lie in (0°, 90°]".into()));
    }
    for f in fields {
        f.check_grid(grid)?;
    }
    let curvs: Vec<Vec<f64>> = fields.iter().map(|f| curvature(grid, f.values())).collect();
    let steps = floor(360.0 / resolution_deg + 0.5) as usize;
    let step_deg = 360.0 / steps as f64;
    let dominant_at = |deg: f64| -> (bool, DirectionVerdict) {
        let hs = direction_at_degrees(deg);
        let mut v = DirectionVerdict {
            angle: deg * PI / 180.0,
            exact: integer_reflection(hs.normal()).is_some(),
            holds: true,
            max_violation: 0.0,
            interpolation_bound: 0.0,
        };
        for (f, c) in fields.iter().zip(&curvs) {
            let d = dominance_with(f.values(), c, grid, &hs, tol);
            v.holds &= d.holds;
            v.max_violation = v.max_violation.max(d.max_violation);
            v.interpolation_bound = v.interpolation_bound.max(d.interpolation_bound);
        }
        (v.holds, v)
    };
    let directions: Vec<DirectionVerdict> = (0..steps).map(|k| dominant_at(k as f64 * step_deg).1).collect();
    let report = |verdict| AxisReport { verdict, directions: directions.clone(), resolution_deg: step_deg };
    let flags: Vec<bool> = directions.iter().map(|d| d.holds).collect();
    if flags.iter().all(|&b| b) {
        return Ok(report(AxisVerdict::Radial { p: [1.0, 0.0] }));
    }
    if !flags.iter().any(|&b| b) {
        return Ok(report(AxisVerdict::None));
    }
    // circular runs of dominant directions, as (start index, length)
    let first_gap = flags.iter().position(|&b| !b).expect("some direction fails");
    let mut runs = Vec::new();
    let mut k = 0;
    while k < steps {
        let i = (first_gap + k) % steps;
        if flags[i] {
            let mut len = 0;
            while len < steps && flags[(i + len) % steps] {
                len += 1;
            }
            runs.push((i, len));
            k += len;
        } else {
            k += 1;
        }
    }
    let excess_at = |deg: f64| {
        let hs = direction_at_degrees(deg);
        fields.iter().zip(&curvs).map(|(f, c)| reflection_excess(f.values(), c, grid, &hs)).fold(f64::NEG_INFINITY, f64::max)
    };
    // Interpolation blurs the edges of a run by a step or two, so the arc
    // end is sought near each edge as the most symmetric direction.
    let end_near = |edge: usize, inward: i64, len: usize| -> Option<f64> {
        let reach = (len / 2).min(END_WINDOW) as i64;
        let mut best = (f64::INFINITY, 0.0);
        for k in -1..=reach {
            let deg = (edge as i64 + inward * k) as f64 * step_deg;
            let e = excess_at(deg);
            if e < best.0 {
                best = (e, deg);
            }
        }
        let (mut a, mut b) = (best.1 - step_deg, best.1 + step_deg);
        let g = 0.5 * (sqrt(5.0) - 1.0);
        for _ in 0..24 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if excess_at(c) <= excess_at(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let mid = 0.5 * (a + b);
        let cand = if excess_at(mid) <= best.0 { (excess_at(mid), mid) } else { best };
        (cand.0 <= 2.0 * tol).then_some(cand.1)
    };
    let mut best: Option<(f64, f64, f64)> = None;
    let mut saw_single = false;
    for &(start, len) in &runs {
        if len < 2 {
            saw_single = true;
            continue;
        }
        let (Some(lo), Some(hi)) = (end_near(start, 1, len), end_near(start + len - 1, -1, len)) else {
            continue;
        };
        let width = hi - lo;
        // the two planes of symmetry must differ
        if width < 0.5 * step_deg {
            continue;
        }
        if best.map_or(true, |b| width > b.2) {
            best = Some((lo, hi, width));
        }
    }
    match best {
        Some((lo, hi, _)) => {
            let mid = 0.5 * (lo + hi) * PI / 180.0;
            let p = snap_unit([cos(mid), sin(mid)]);
            Ok(report(AxisVerdict::Axis {
                p,
                arc_start: crate::geometry::wrap_angle(lo * PI / 180.0),
                arc_end: crate::geometry::wrap_angle(hi * PI / 180.0),
            }))
        }
        None if saw_single => Ok(report(AxisVerdict::Inconclusive)),
        None => Ok(report(AxisVerdict::None)),
    }
}

/// Round components within `1e-12` of `0` or `±1` so lattice axes come out
/// exact.
fn snap_unit(p: [f64; 2]) -> [f64; 2] {
    let snap = |v: f64| {
        if fabs(v) < 1e-12 {
            0.0
        } else if fabs(fabs(v) - 1.0) < 1e-12 {
            v.signum()
        } else {
            v
        }
    };
    [snap(p[0]), snap(p[1])]
}

/// Axis sweep plus the foliated Schwarz test of every field about the
/// detected axis.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymmetryReport {
    pub axis: AxisReport,
    /// One entry per field; empty when no axis was found.
    pub foliated: Vec<FoliatedReport>,
}

impl SymmetryReport {
    /// True when an axis was found and every field passed the ring test.
    pub fn foliated_symmetric(&self) -> bool {
        self.axis.verdict.axis().is_some() && self.foliated.iter().all(|f| f.holds)
    }
}

pub fn symmetry_report(fields: &[&Field], grid: &Grid, tol: f64, resolution_deg: f64) -> Result<SymmetryReport> {
    let axis = find_axis(fields, grid, tol, resolution_deg)?;
    let foliated = match axis.verdict.axis() {
        Some(p) => fields.iter().map(|f| foliated_schwarz_check(f, grid, &p, tol)).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    Ok(SymmetryReport { axis, foliated })
}

/// `‖u‖_q` with the cell-volume weight, exposed for rearrangement checks.
pub fn lq_norm(u: &Field, q: f64) -> f64 {
    u.norm_q(q)
}

/// Angle of the planar vector `p`, radians.
pub fn axis_angle(p: &[f64]) -> f64 {
    atan2(p[1], p[0])
}

/// Angular distance between two planar unit vectors, radians.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let c = (a[0] * b[0] + a[1] * b[1]).clamp(-1.0, 1.0);
    crate::math::acos(c)
}
