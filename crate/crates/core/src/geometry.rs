//! Radial domains, the node-centered lattice that discretizes them, and the
//! reflections and rotations the symmetry machinery acts with.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{acos, ceil, dot, fabs, floor, pow, sqrt, PI};

/// Relative margin used by the membership test. Nodes within this relative
/// distance of a boundary sphere count as outside, so that rescaling `h` and
/// the radii by a common factor never changes the mask through rounding.
const MASK_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum DomainShape {
    Ball { r_out: f64 },
    Annulus { r_in: f64, r_out: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialDomain {
    pub dim: usize,
    pub shape: DomainShape,
}

impl RadialDomain {
    pub fn ball(dim: usize, r_out: f64) -> Result<Self> {
        Self::new(dim, DomainShape::Ball { r_out })
    }

    pub fn annulus(dim: usize, r_in: f64, r_out: f64) -> Result<Self> {
        Self::new(dim, DomainShape::Annulus { r_in, r_out })
    }

    pub fn new(dim: usize, shape: DomainShape) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("radial domains need N ≥ 2, got {dim}")));
        }
        let (r_in, r_out) = match shape {
            DomainShape::Ball { r_out } => (0.0, r_out),
            DomainShape::Annulus { r_in, r_out } => (r_in, r_out),
        };
        if !(r_in >= 0.0 && r_out > r_in && r_out.is_finite()) {
            return Err(Error::Domain(format!("need 0 ≤ R_in < R_out, got {r_in}, {r_out}")));
        }
        Ok(Self { dim, shape })
    }

    pub fn r_in(&self) -> f64 {
        match self.shape {
            DomainShape::Ball { .. } => 0.0,
            DomainShape::Annulus { r_in, .. } => r_in,
        }
    }

    pub fn r_out(&self) -> f64 {
        match self.shape {
            DomainShape::Ball { r_out } | DomainShape::Annulus { r_out, .. } => r_out,
        }
    }

    /// Membership by radius.
    pub fn contains_radius(&self, r: f64) -> bool {
        let outer = r < self.r_out() * (1.0 - MASK_MARGIN);
        match self.shape {
            DomainShape::Ball { .. } => outer,
            DomainShape::Annulus { r_in, .. } => outer && r > r_in * (1.0 + MASK_MARGIN),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_radius(sqrt(dot(x, x)))
    }

    /// Lebesgue measure.
    pub fn volume(&self) -> f64 {
        let n = self.dim as f64;
        let ball = crate::math::unit_sphere_area(self.dim) / n;
        ball * (pow(self.r_out(), n) - pow(self.r_in(), n))
    }
}

/// Lattice `x = h·z`, `z ∈ [-M, M]^N`, with the mask of nodes strictly
/// inside the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: RadialDomain,
    h: f64,
    half_extent: usize,
    mask: Vec<bool>,
    interior: Vec<usize>,
}

impl Grid {
    /// Grid with spacing `h` and one node of padding beyond `R_out`.
    pub fn new(domain: RadialDomain, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("grid spacing must be positive, got {h}")));
        }
        let m = ceil(domain.r_out() / h) as usize + 1;
        Self::with_half_extent(domain, h, m)
    }

    pub fn with_half_extent(domain: RadialDomain, h: f64, half_extent: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("grid spacing must be positive, got {h}")));
        }
        if (half_extent as f64) * h < domain.r_out() {
            return Err(Error::Domain("grid does not cover the domain".into()));
        }
        let side = 2 * half_extent + 1;
        let total = side
            .checked_pow(domain.dim as u32)
            .ok_or_else(|| Error::Domain("grid too large".into()))?;
        let mut mask = vec![false; total];
        let mut interior = Vec::new();
        let mut z = vec![0i64; domain.dim];
        for (idx, slot) in mask.iter_mut().enumerate() {
            unravel(idx, half_extent, &mut z);
            let s: i64 = z.iter().map(|v| v * v).sum();
            if domain.contains_radius(h * sqrt(s as f64)) {
                *slot = true;
                interior.push(idx);
            }
        }
        Ok(Self { domain, h, half_extent, mask, interior })
    }

    /// Pick `h` so the domain holds roughly `target` interior nodes.
    pub fn for_target_nodes(domain: RadialDomain, target: usize) -> Result<Self> {
        if target == 0 {
            return Err(Error::Domain("target node count must be positive".into()));
        }
        let mut h = pow(domain.volume() / target as f64, 1.0 / domain.dim as f64);
        let mut grid = Self::new(domain, h)?;
        for _ in 0..8 {
            let ratio = grid.interior.len().max(1) as f64 / target as f64;
            if fabs(ratio - 1.0) < 0.02 {
                break;
            }
            h *= pow(ratio, 1.0 / domain.dim as f64);
            grid = Self::new(domain, h)?;
        }
        Ok(grid)
    }

    pub fn domain(&self) -> &RadialDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_extent(&self) -> usize {
        self.half_extent
    }

    /// Nodes per axis, `2M + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_extent + 1
    }

    pub fn node_count(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Lattice indices of interior nodes, increasing.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Position of lattice node `idx` in [`Grid::interior`].
    pub fn interior_position(&self, idx: usize) -> Option<usize> {
        self.interior.binary_search(&idx).ok()
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn shape(&self) -> crate::field::GridShape {
        crate::field::GridShape { dim: self.dim(), half_extent: self.half_extent, h: self.h }
    }

    /// Integer coordinates of a node.
    pub fn coords(&self, idx: usize) -> Vec<i64> {
        let mut z = vec![0; self.dim()];
        unravel(idx, self.half_extent, &mut z);
        z
    }

    pub fn coords_into(&self, idx: usize, z: &mut [i64]) {
        unravel(idx, self.half_extent, z);
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.coords(idx).iter().map(|&v| v as f64 * self.h).collect()
    }

    /// Index of the node with integer coordinates `z`, if on the grid.
    pub fn index(&self, z: &[i64]) -> Option<usize> {
        ravel(z, self.half_extent)
    }

    /// Index of the grid node nearest `x` (no bounds clamping).
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let z: Vec<i64> = x.iter().map(|&v| floor(v / self.h + 0.5) as i64).collect();
        self.index(&z)
    }
}

pub(crate) fn unravel(mut idx: usize, m: usize, z: &mut [i64]) {
    let side = 2 * m + 1;
    for c in z.iter_mut().rev() {
        *c = (idx % side) as i64 - m as i64;
        idx /= side;
    }
}

pub(crate) fn ravel(z: &[i64], m: usize) -> Option<usize> {
    let side = 2 * m + 1;
    let mut idx = 0usize;
    for &c in z {
        if c.unsigned_abs() as usize > m {
            return None;
        }
        idx = idx * side + (c + m as i64) as usize;
    }
    Some(idx)
}

/// Open half-space `{x : x·e > 0}` through the origin.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HalfSpace {
    normal: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Inside,
    Boundary,
    Outside,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>) -> Result<Self> {
        let n = sqrt(dot(&normal, &normal));
        if normal.is_empty() || fabs(n - 1.0) > 1e-12 {
            return Err(Error::Domain(format!("half-space normal must be a unit vector (|e| = {n})")));
        }
        Ok(Self { normal })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        let n = sqrt(dot(v, v));
        if !(n > 0.0) {
            return Err(Error::Domain("half-space normal must be nonzero".into()));
        }
        Ok(Self { normal: v.iter().map(|x| x / n).collect() })
    }

    /// Planar half-space with normal `(cos θ, sin θ)`.
    pub fn from_angle(theta: f64) -> Self {
        Self { normal: vec![crate::math::cos(theta), crate::math::sin(theta)] }
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Half-space on the other side of the hyperplane.
    pub fn flipped(&self) -> Self {
        Self { normal: self.normal.iter().map(|v| -v).collect() }
    }

    pub fn reflect(&self, x: &[f64]) -> Vec<f64> {
        reflect(x, &self.normal)
    }

    /// Side of an integer lattice point; exact in integer-friendly
    /// directions, with a relative tolerance otherwise.
    pub fn side_of(&self, z: &[i64]) -> Side {
        let mut d = 0.0;
        let mut scale = 0.0;
        for (c, e) in z.iter().zip(&self.normal) {
            d += *c as f64 * e;
            scale += fabs(*c as f64 * e);
        }
        if fabs(d) <= 1e-12 * scale.max(1.0) {
            Side::Boundary
        } else if d > 0.0 {
            Side::Inside
        } else {
            Side::Outside
        }
    }
}

/// `x − 2(x·e)e`.
pub fn reflect(x: &[f64], e: &[f64]) -> Vec<f64> {
    let d = dot(x, e);
    x.iter().zip(e).map(|(xi, ei)| xi - 2.0 * d * ei).collect()
}

/// Discrete realization of `u ↦ u∘σ_e` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub enum Pairing {
    /// `perm[i]` is the node `σ(i)`; an involution on all lattice nodes.
    Exact(Vec<usize>),
    /// Multilinear stencil at `σ(x)` per node; corners off the grid are
    /// dropped (the field vanishes there).
    Approximate(Vec<Stencil>),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Stencil {
    pub entries: Vec<(usize, f64)>,
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * values[i]).sum()
    }
}

impl Pairing {
    pub fn is_exact(&self) -> bool {
        matches!(self, Pairing::Exact(_))
    }

    /// Value of `u∘σ` at node `i`.
    pub fn reflected_value(&self, values: &[f64], i: usize) -> f64 {
        match self {
            Pairing::Exact(p) => values[p[i]],
            Pairing::Approximate(st) => st[i].apply(values),
        }
    }
}

/// Reflection matrix `I − 2ee^T` when all its entries are integers.
pub fn integer_reflection(e: &[f64]) -> Option<Vec<i64>> {
    let n = e.len();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j { 1.0 } else { 0.0 } - 2.0 * e[i] * e[j];
            let r = floor(v + 0.5);
            if fabs(v - r) > 1e-12 {
                return None;
            }
            out.push(r as i64);
        }
    }
    Some(out)
}

pub fn reflection_pairing(grid: &Grid, e: &HalfSpace) -> Result<Pairing> {
    let n = grid.dim();
    if e.dim() != n {
        return Err(Error::Domain("half-space dimension differs from grid".into()));
    }
    let mut z = vec![0i64; n];
    let mut image = vec![0i64; n];
    if let Some(r) = integer_reflection(e.normal()) {
        // an orthogonal integer matrix is a signed permutation, so the box
        // lattice maps onto itself
        let mut perm = Vec::with_capacity(grid.node_count());
        for idx in 0..grid.node_count() {
            grid.coords_into(idx, &mut z);
            for i in 0..n {
                image[i] = (0..n).map(|j| r[i * n + j] * z[j]).sum();
            }
            perm.push(grid.index(&image).expect("signed permutation stays on the lattice"));
        }
        return Ok(Pairing::Exact(perm));
    }
    let m = grid.half_extent() as i64;
    let mut stencils = Vec::with_capacity(grid.node_count());
    let mut base = vec![0i64; n];
    let mut frac = vec![0.0; n];
    let mut corner = vec![0i64; n];
    for idx in 0..grid.node_count() {
        grid.coords_into(idx, &mut z);
        let zf: Vec<f64> = z.iter().map(|&c| c as f64).collect();
        let y = reflect(&zf, e.normal());
        for i in 0..n {
            let f = floor(y[i]);
            base[i] = f as i64;
            frac[i] = y[i] - f;
            if frac[i] < 1e-13 {
                frac[i] = 0.0;
            } else if frac[i] > 1.0 - 1e-13 {
                base[i] += 1;
                frac[i] = 0.0;
            }
        }
        let mut entries = Vec::new();
        for bits in 0..(1usize << n) {
            let mut w = 1.0;
            for i in 0..n {
                let up = (bits >> i) & 1 == 1;
                corner[i] = base[i] + up as i64;
                w *= if up { frac[i] } else { 1.0 - frac[i] };
            }
            if w == 0.0 || corner.iter().any(|c| c.abs() > m) {
                continue;
            }
            entries.push((grid.index(&corner).expect("bounds checked"), w));
        }
        stencils.push(Stencil { entries });
    }
    Ok(Pairing::Approximate(stencils))
}

/// Polar angle `arccos(x·p/|x|) ∈ [0, π]`.
pub fn polar_angle(x: &[f64], p: &[f64]) -> Result<f64> {
    let nx = sqrt(dot(x, x));
    if !(nx > 0.0) {
        return Err(Error::Domain("polar angle undefined at the origin".into()));
    }
    Ok(acos((dot(x, p) / nx).clamp(-1.0, 1.0)))
}

/// Rotate `e0` by `phi` inside the plane spanned by the orthonormal pair.
pub fn rotate_direction(e0: &[f64], phi: f64, plane: (&[f64], &[f64])) -> Result<Vec<f64>> {
    let (a, b) = plane;
    if a.len() != e0.len() || b.len() != e0.len() {
        return Err(Error::Domain("dimension mismatch in rotation plane".into()));
    }
    if fabs(dot(a, a) - 1.0) > 1e-9 || fabs(dot(b, b) - 1.0) > 1e-9 || fabs(dot(a, b)) > 1e-9 {
        return Err(Error::Domain("rotation plane vectors must be orthonormal".into()));
    }
    let alpha = dot(e0, a);
    let beta = dot(e0, b);
    let off: f64 = e0
        .iter()
        .zip(a.iter().zip(b))
        .map(|(e, (ai, bi))| {
            let r = e - alpha * ai - beta * bi;
            r * r
        })
        .sum();
    if sqrt(off) > 1e-9 {
        return Err(Error::Domain("e0 is not in the rotation plane".into()));
    }
    let (c, s) = (crate::math::cos(phi), crate::math::sin(phi));
    let (ra, rb) = (alpha * c - beta * s, alpha * s + beta * c);
    Ok(a.iter().zip(b).map(|(ai, bi)| ra * ai + rb * bi).collect())
}

/// Normalize an angle into `(-π, π]`.
pub fn wrap_angle(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut p = phi - two_pi * floor((phi + PI) / two_pi);
    if p <= -PI {
        p += two_pi;
    }
    p
}
