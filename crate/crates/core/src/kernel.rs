//! Radial kernels `k(z) = k0(|z|)`: evaluation, the fractional normalization
//! constant, validity checks and the short/long range split `k = k_δ + j_δ`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{
    adaptive_simpson, cos, exp, fabs, log, pow, sin, tgamma, unit_sphere_area, GaussLegendre, PI,
};

/// One tabulated sample `(r, k0(r))`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub r: f64,
    pub k0: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum KernelFamily {
    /// `c_{N,s} r^{-N-2s}`.
    Fractional { order: f64 },
    Tabulated { samples: Vec<Sample> },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelSpec {
    dim: usize,
    family: KernelFamily,
    strictly_decreasing: bool,
    /// Cached `c_{N,s}` for the fractional family, 1 otherwise.
    scale: f64,
}

/// Result of a kernel evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    /// Set when a tabulated kernel was queried below its first sample.
    pub extrapolated: bool,
}

impl KernelSpec {
    pub fn fractional(dim: usize, order: f64) -> Result<Self> {
        let scale = fractional_normalization(dim, order)?;
        Ok(Self {
            dim,
            family: KernelFamily::Fractional { order },
            strictly_decreasing: true,
            scale,
        })
    }

    /// Build a tabulated kernel. Radii must be positive and strictly
    /// increasing, values finite, nonnegative and nonincreasing. Setting
    /// `strictly_decreasing` asserts that the samples strictly decrease.
    pub fn tabulated(dim: usize, samples: Vec<Sample>, strictly_decreasing: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidKernel("dimension must be at least 1".into()));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidKernel("a table needs at least two samples".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.r.is_finite() && s.r > 0.0) {
                return Err(Error::InvalidKernel(format!("sample {i}: radius must be positive")));
            }
            if !(s.k0.is_finite() && s.k0 >= 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "sample {i}: value must be finite and nonnegative"
                )));
            }
            if i > 0 {
                let prev = samples[i - 1];
                if s.r <= prev.r {
                    return Err(Error::InvalidKernel(format!(
                        "sample {i}: radii must be strictly increasing"
                    )));
                }
                if s.k0 > prev.k0 {
                    return Err(Error::InvalidKernel(format!("sample {i}: k0 increases")));
                }
                if strictly_decreasing && s.k0 >= prev.k0 {
                    return Err(Error::InvalidKernel(format!(
                        "sample {i}: table flagged strictly decreasing but k0 does not decrease"
                    )));
                }
            }
        }
        if strictly_decreasing && samples[samples.len() - 1].k0 == 0.0 {
            return Err(Error::InvalidKernel(
                "table flagged strictly decreasing but ends at zero".into(),
            ));
        }
        Ok(Self {
            dim,
            family: KernelFamily::Tabulated { samples },
            strictly_decreasing,
            scale: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.strictly_decreasing
    }

    /// Fractional order `s`, if this is a fractional kernel.
    pub fn order(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Fractional { order } => Some(order),
            KernelFamily::Tabulated { .. } => None,
        }
    }

    /// Evaluate `k0(r)` for `r > 0`.
    pub fn eval(&self, r: f64) -> Result<KernelValue> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("kernel radius must be positive, got {r}")));
        }
        let extrapolated = match &self.family {
            KernelFamily::Tabulated { samples } => r < samples[0].r,
            KernelFamily::Fractional { .. } => false,
        };
        Ok(KernelValue { value: self.k0(r), extrapolated })
    }

    /// `k0(r)` without argument checks; `r` must be positive.
    #[inline]
    pub fn k0(&self, r: f64) -> f64 {
        match &self.family {
            KernelFamily::Fractional { order } => {
                self.scale * pow(r, -(self.dim as f64) - 2.0 * order)
            }
            KernelFamily::Tabulated { samples } => {
                let n = samples.len();
                let seg = samples.partition_point(|s| s.r <= r);
                let i = seg.clamp(1, n - 1) - 1;
                Segment::new(samples[i], samples[i + 1], seg >= n).eval(r)
            }
        }
    }

    /// Radial mass `∫_a^b k0(r) r^{N-1} dr` for `0 < a ≤ b ≤ ∞`, in closed
    /// form for both families.
    pub fn radial_mass(&self, a: f64, b: f64) -> Result<f64> {
        if !(a > 0.0) || b < a {
            return Err(Error::Domain(format!("bad radial interval [{a}, {b}]")));
        }
        let n = self.dim as f64;
        match &self.family {
            KernelFamily::Fractional { order } => {
                let e = -2.0 * order;
                let upper = if b.is_finite() { pow(b, e) } else { 0.0 };
                Ok(self.scale * (pow(a, e) - upper) / (2.0 * order))
            }
            KernelFamily::Tabulated { samples } => {
                let len = samples.len();
                let mut total = 0.0;
                // piece below the first sample uses the first segment's law
                let mut lo = a;
                for k in 0..len {
                    let edge = if k + 1 < len { samples[k + 1].r } else { f64::INFINITY };
                    if lo >= b {
                        break;
                    }
                    if edge <= lo {
                        continue;
                    }
                    let hi = if edge < b { edge } else { b };
                    let seg = if k + 1 < len {
                        Segment::new(samples[k], samples[k + 1], false)
                    } else {
                        Segment::new(samples[len - 2], samples[len - 1], true)
                    };
                    total += seg.mass(lo, hi, n)?;
                    lo = hi;
                }
                Ok(total)
            }
        }
    }

    /// Tail mass `∫_ρ^∞ k0(r) r^{N-1} dr`.
    pub fn tail_mass(&self, rho: f64) -> Result<f64> {
        self.radial_mass(rho, f64::INFINITY)
    }

    /// Asymptotic exponent `p` with `k0(r) ~ r^p` as `r → ∞`; `None` when the
    /// kernel vanishes identically beyond the table.
    pub fn tail_exponent(&self) -> Option<f64> {
        match &self.family {
            KernelFamily::Fractional { order } => Some(-(self.dim as f64) - 2.0 * order),
            KernelFamily::Tabulated { samples } => {
                let len = samples.len();
                let seg = Segment::new(samples[len - 2], samples[len - 1], true);
                match seg.law {
                    Law::Power { p, .. } => Some(p),
                    _ => None,
                }
            }
        }
    }

    /// Exponent `p` with `k0(r) ~ r^p` as `r → 0`; `None` for logarithmic
    /// or bounded behaviour that is not a power law.
    pub fn origin_exponent(&self) -> Option<f64> {
        match &self.family {
            KernelFamily::Fractional { order } => Some(-(self.dim as f64) - 2.0 * order),
            KernelFamily::Tabulated { samples } => {
                match Segment::new(samples[0], samples[1], false).law {
                    Law::Power { p, .. } => Some(p),
                    _ => None,
                }
            }
        }
    }

    /// Check the integrability, divergence, bound and monotonicity conditions.
    pub fn validate(&self, bounds: Option<BoundParams>) -> ValidationReport {
        let n = self.dim as f64;
        let (second_moment, zeroth_divergence) = match &self.family {
            KernelFamily::Fractional { .. } => (Verdict::Holds, Verdict::Holds),
            KernelFamily::Tabulated { samples } => {
                let near = Segment::new(samples[0], samples[1], false);
                // a bounded or log-singular start integrates against r^{N+1}
                let near_ok = match near.law {
                    Law::Power { p, .. } => p + n + 2.0 > 0.0,
                    _ => true,
                };
                let far_ok = match self.tail_exponent() {
                    Some(p) => p + n < 0.0,
                    None => true,
                };
                let second = if near_ok && far_ok { Verdict::Holds } else { Verdict::Fails };
                let divergence = if samples[0].r >= 1.0 {
                    // no data inside the unit ball: any verdict is a guess
                    Verdict::Inconclusive
                } else {
                    match near.law {
                        Law::Power { p, .. } if p + n <= 0.0 => Verdict::Holds,
                        Law::Zero => Verdict::Fails,
                        _ => Verdict::Fails,
                    }
                };
                (second, divergence)
            }
        };
        let strict = match &self.family {
            KernelFamily::Fractional { .. } => true,
            KernelFamily::Tabulated { samples } => {
                samples.windows(2).all(|w| w[1].k0 < w[0].k0) && samples[samples.len() - 1].k0 > 0.0
            }
        };
        let bounds = bounds.map(|b| self.check_bounds(b));
        ValidationReport {
            second_moment,
            zeroth_moment_divergence: zeroth_divergence,
            bounds,
            nonincreasing: true,
            strictly_decreasing: strict,
            flag_consistent: strict == self.strictly_decreasing,
        }
    }

    fn check_bounds(&self, b: BoundParams) -> BoundsVerdict {
        let n = self.dim as f64;
        let lower_exp = -n - 2.0 * b.s;
        let upper_exp = -n - 2.0 * b.sigma;
        let tail_exp = -n - 2.0 * b.gamma;
        let slack = 1e-12;
        match &self.family {
            KernelFamily::Fractional { order } => {
                let p = -n - 2.0 * order;
                let c = self.scale;
                // on (0,1): c r^p ≥ r^{lower}/C needs p ≤ lower and c·C ≥ 1
                let lower = p <= lower_exp + slack && c * b.c >= 1.0 - slack;
                let upper = p >= upper_exp - slack && c <= b.c * (1.0 + slack);
                let tail = p <= tail_exp + slack && c <= b.c * (1.0 + slack);
                BoundsVerdict { lower_near_origin: lower, upper_near_origin: upper, tail }
            }
            KernelFamily::Tabulated { .. } => {
                let mut lower = true;
                let mut upper = true;
                let mut tail = true;
                let steps = 600;
                for i in 0..=steps {
                    // log-spaced probes on [1e-6, 1e6]
                    let r = pow(10.0, -6.0 + 12.0 * i as f64 / steps as f64);
                    let k = self.k0(r);
                    if r < 1.0 {
                        lower &= k * (1.0 + slack) >= pow(r, lower_exp) / b.c;
                        upper &= k <= b.c * pow(r, upper_exp) * (1.0 + slack);
                    } else {
                        tail &= k <= b.c * pow(r, tail_exp) * (1.0 + slack);
                    }
                }
                // asymptotic laws decide what the probes cannot reach
                match self.origin_exponent() {
                    Some(p) => {
                        lower &= p <= lower_exp + slack;
                        upper &= p >= upper_exp - slack;
                    }
                    None => lower = false,
                }
                if let Some(p) = self.tail_exponent() {
                    tail &= p <= tail_exp + slack;
                }
                BoundsVerdict { lower_near_origin: lower, upper_near_origin: upper, tail }
            }
        }
    }

    /// Split the kernel at radius `delta` and compute the mass `J_δ` of the
    /// long-range part.
    pub fn truncate(&self, delta: f64) -> Result<TruncatedKernel> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("truncation radius must be positive, got {delta}")));
        }
        let n = self.dim as f64;
        let mut r_far = (10.0 * delta).max(10.0);
        let mut breaks = Vec::new();
        if let KernelFamily::Tabulated { samples } = &self.family {
            r_far = r_far.max(samples[samples.len() - 1].r);
            breaks.extend(samples.iter().map(|s| s.r).filter(|&r| r > delta && r < r_far));
        }
        // the tail beyond r_far is a pure power law (or zero)
        let tail = match (self.tail_exponent(), &self.family) {
            (None, _) => 0.0,
            (Some(p), _) if p + n >= 0.0 => return Err(Error::TailMassInfinite),
            (Some(p), _) => -self.k0(r_far) * pow(r_far, n) / (p + n),
        };
        // geometric breakpoints keep each Simpson panel well conditioned
        let mut r = delta;
        while r < r_far {
            breaks.push(r);
            r *= 2.0;
        }
        breaks.push(r_far);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut near = 0.0;
        for w in breaks.windows(2) {
            near += adaptive_simpson(w[0], w[1], 1e-13, 48, |r| self.k0(r) * pow(r, n - 1.0));
        }
        let sphere = unit_sphere_area(self.dim);
        Ok(TruncatedKernel { base: self.clone(), delta, long_range_mass: sphere * (near + tail) })
    }
}

/// Constants `(c, s, σ, γ)` of the two-sided power bounds
/// `r^{-N-2s}/c ≤ k0(r) ≤ c r^{-N-2σ}` on `(0,1)` and
/// `k0(r) ≤ c r^{-N-2γ}` on `[1,∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundParams {
    pub c: f64,
    pub s: f64,
    pub sigma: f64,
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsVerdict {
    pub lower_near_origin: bool,
    pub upper_near_origin: bool,
    pub tail: bool,
}

impl BoundsVerdict {
    pub fn all(&self) -> bool {
        self.lower_near_origin && self.upper_near_origin && self.tail
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    /// `∫ min{1,r²} k0 r^{N-1} dr < ∞`.
    pub second_moment: Verdict,
    /// `∫ k0 r^{N-1} dr = ∞`.
    pub zeroth_moment_divergence: Verdict,
    pub bounds: Option<BoundsVerdict>,
    pub nonincreasing: bool,
    pub strictly_decreasing: bool,
    /// The declared monotonicity flag matches the data.
    pub flag_consistent: bool,
}

impl ValidationReport {
    /// Whether the kernel is admissible for assembly.
    pub fn is_admissible(&self) -> bool {
        self.second_moment == Verdict::Holds
            && self.zeroth_moment_divergence != Verdict::Fails
            && self.nonincreasing
            && self.flag_consistent
    }
}

/// `k = k_δ + j_δ` with `k_δ = k·1_{B_δ}`; stores `J_δ = ‖j_δ‖_{L¹}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedKernel {
    pub base: KernelSpec,
    pub delta: f64,
    pub long_range_mass: f64,
}

impl TruncatedKernel {
    /// Short-range part `k_δ(r)`.
    pub fn short_range(&self, r: f64) -> f64 {
        if r < self.delta {
            self.base.k0(r)
        } else {
            0.0
        }
    }

    /// Long-range part `j_δ(r)`.
    pub fn long_range(&self, r: f64) -> f64 {
        if r >= self.delta {
            self.base.k0(r)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Law {
    /// `v (r/r0)^p`.
    Power { v: f64, r0: f64, p: f64 },
    /// `v + β ln(r/r0)`, clamped at zero.
    LogLinear { v: f64, r0: f64, beta: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    law: Law,
}

impl Segment {
    /// Interpolant through two samples; `beyond` marks extrapolation past the
    /// last sample, where a vanishing endpoint keeps the kernel at zero.
    fn new(a: Sample, b: Sample, beyond: bool) -> Self {
        let law = if a.k0 > 0.0 && b.k0 > 0.0 {
            Law::Power { v: a.k0, r0: a.r, p: log(b.k0 / a.k0) / log(b.r / a.r) }
        } else if beyond && b.k0 == 0.0 {
            Law::Zero
        } else if a.k0 == 0.0 {
            Law::Zero
        } else {
            Law::LogLinear { v: a.k0, r0: a.r, beta: (b.k0 - a.k0) / log(b.r / a.r) }
        };
        Self { law }
    }

    fn eval(&self, r: f64) -> f64 {
        match self.law {
            Law::Power { v, r0, p } => v * pow(r / r0, p),
            Law::LogLinear { v, r0, beta } => (v + beta * log(r / r0)).max(0.0),
            Law::Zero => 0.0,
        }
    }

    /// `∫_a^b k0 r^{N-1} dr` for this segment's law.
    fn mass(&self, a: f64, b: f64, n: f64) -> Result<f64> {
        match self.law {
            Law::Zero => Ok(0.0),
            Law::Power { v, r0, p } => {
                let e = p + n;
                let coef = v * pow(r0, -p);
                if !b.is_finite() {
                    if e >= 0.0 {
                        return Err(Error::TailMassInfinite);
                    }
                    return Ok(coef * (-pow(a, e)) / e);
                }
                if fabs(e) < 1e-14 {
                    Ok(coef * log(b / a))
                } else {
                    Ok(coef * (pow(b, e) - pow(a, e)) / e)
                }
            }
            Law::LogLinear { v, r0, beta } => {
                // the interpolant reaches zero at r0·exp(-v/β) when β < 0
                let b = if beta < 0.0 { b.min(r0 * exp(-v / beta)) } else { b };
                if !b.is_finite() {
                    return Err(Error::TailMassInfinite);
                }
                if b <= a {
                    return Ok(0.0);
                }
                let prim = |r: f64| {
                    let rn = pow(r, n);
                    v * rn / n + beta * rn / n * (log(r / r0) - 1.0 / n)
                };
                Ok(prim(b) - prim(a))
            }
        }
    }
}

/// `c_{N,s} = 2^{2s} s Γ(N/2+s) / (π^{N/2} Γ(1−s))`.
pub fn fractional_normalization(dim: usize, s: f64) -> Result<f64> {
    check_fractional(dim, s)?;
    let n = dim as f64;
    Ok(pow(2.0, 2.0 * s) * s * tgamma(n / 2.0 + s) / (pow(PI, n / 2.0) * tgamma(1.0 - s)))
}

fn check_fractional(dim: usize, s: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("fractional order must lie in (0,1), got {s}")));
    }
    Ok(())
}

/// Inverse of `∫_{ℝ^N} (1 − cos x₁) |x|^{-N-2s} dx`, by quadrature.
///
/// Integrating out the transverse directions factors the integral into the
/// one-dimensional `∫_ℝ (1 − cos t)|t|^{-1-2s} dt` times
/// `|S^{N-2}| ∫_0^{π/2} cos^{2s}θ sin^{N-2}θ dθ`.
pub fn normalization_by_quadrature(dim: usize, s: f64) -> Result<f64> {
    check_fractional(dim, s)?;
    let line = 2.0 * half_line_integral(s);
    let transverse = if dim == 1 {
        1.0
    } else {
        let rule = GaussLegendre::new(20);
        let m = (dim - 2) as f64;
        // θ = π/2 − (π/2)t⁴ smooths the cos^{2s} endpoint behaviour
        let inner = rule.integrate_composite(0.0, 1.0, 8, |t| {
            let phi = 0.5 * PI * t * t * t * t;
            let jac = 2.0 * PI * t * t * t;
            pow(sin(phi), 2.0 * s) * pow(cos(phi), m) * jac
        });
        unit_sphere_area(dim - 1) * inner
    };
    Ok(1.0 / (line * transverse))
}

/// `∫_0^∞ (1 − cos x) x^{-1-2s} dx`.
fn half_line_integral(s: f64) -> f64 {
    let rule = GaussLegendre::new(20);
    // [0,1] with x = t^{1/(1-s)}: the integrand becomes ~ t near 0
    let k = 1.0 / (1.0 - s);
    let head = rule.integrate_composite(0.0, 1.0, 16, |t| {
        if t == 0.0 {
            return 0.0;
        }
        let x = pow(t, k);
        let one_minus_cos = 2.0 * sin(0.5 * x) * sin(0.5 * x);
        one_minus_cos * pow(x, -1.0 - 2.0 * s) * k * pow(t, k - 1.0)
    });
    // [1, A] resolved panel by panel
    let periods = 200;
    let a_end = 2.0 * PI * periods as f64;
    let panels = 4 * periods + 1;
    let middle = rule.integrate_composite(1.0, a_end, panels, |x| {
        (1.0 - cos(x)) * pow(x, -1.0 - 2.0 * s)
    });
    // [A, ∞): ∫ x^{-a} = A^{-2s}/(2s) minus Re ∫ e^{ix} x^{-a} via the
    // asymptotic expansion F = i e^{iA} A^{-a} Σ (a)_k (−i/A)^k
    let a = 1.0 + 2.0 * s;
    let mut im = 0.0;
    let mut coef = 1.0;
    let mut term_re = 1.0;
    let mut term_im = 0.0;
    for kk in 0..10 {
        im += coef * term_im;
        coef *= (a + kk as f64) / a_end;
        // multiply by −i
        let (tr, ti) = (term_im, -term_re);
        term_re = tr;
        term_im = ti;
    }
    // F = i e^{iA} A^{-a} (S_re + i S_im) with e^{iA} = 1 at A = 2πK, so
    // Re F = −S_im A^{-a}
    let scale = pow(a_end, -a);
    let f_re = -im * scale;
    let tail = pow(a_end, -2.0 * s) / (2.0 * s) - f_re;
    head + middle + tail
}
