//! Rotating-plane sweep over a planar solution pair.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{Grid, Side};
use crate::math::{ceil, cos, fabs, floor, sin, PI};
use crate::polarization::{
    angle_between, direction_at_degrees, find_axis, is_polarized, AxisReport, ExactReflection,
};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "verdict", rename_all = "snake_case"))]
pub enum ScanVerdict {
    /// Dominance in every direction: `M` is the full circle.
    Radial,
    /// `M ⊇ [φ₋, φ₊]` with axis at the midpoint. Angles in radians.
    Axis { phi_minus: f64, phi_plus: f64, p: [f64; 2] },
    /// No swept direction dominates.
    NoSymmetry,
    /// Dominance only in isolated directions.
    Inconclusive,
}

/// Sign of `W_e = U − U_e` at a lattice direction strictly inside the arc.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrictCheck {
    /// Angle of the normal, radians.
    pub angle: f64,
    /// `min W_e` per component over interior nodes with `x·e > 0`.
    pub min_w: [f64; 2],
    pub positive: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotatingPlaneReport {
    pub verdict: ScanVerdict,
    /// Dominance flag per swept angle `−180° + k·resolution`.
    pub dominance: Vec<bool>,
    pub resolution_deg: f64,
    pub strict: Vec<StrictCheck>,
    /// Every strict check came out positive (and at least one was made).
    pub strictly_decreasing: bool,
    /// The independent endpoint-symmetry sweep.
    pub axis_report: AxisReport,
    /// Angle between the scan's axis and `find_axis`'s, radians.
    pub axis_gap: Option<f64>,
    /// Both sweeps agree within one resolution step (or both report radial).
    pub agrees: bool,
}

/// Sweep `φ ∈ (−π, π]`, mark the directions where both components dominate
/// their reflections, and take `φ₋ = inf M`, `φ₊ = sup M` on the longest
/// arc of `M`. The axis is the arc midpoint; strict positivity of `W_e` is
/// checked at lattice directions strictly inside the arc.
pub fn rotating_plane_scan(
    u: &Field,
    v: &Field,
    grid: &Grid,
    tol: f64,
    resolution_deg: f64,
) -> Result<RotatingPlaneReport> {
    if grid.dim() != 2 {
        return Err(Error::Domain("rotating-plane scan is planar".into()));
    }
    if !(resolution_deg > 0.0 && resolution_deg <= 90.0) {
        return Err(Error::Domain("sweep resolution must lie in (0°, 90°]".into()));
    }
    u.check_grid(grid)?;
    v.check_grid(grid)?;
    let steps = floor(360.0 / resolution_deg + 0.5) as usize;
    let step = 360.0 / steps as f64;
    let dominant = |deg: f64| -> Result<bool> {
        let hs = direction_at_degrees(deg);
        Ok(is_polarized(u, grid, &hs, tol)?.holds && is_polarized(v, grid, &hs, tol)?.holds)
    };
    let angle_at = |k: usize| -180.0 + (k + 1) as f64 * step;
    let dominance: Vec<bool> = (0..steps).map(|k| dominant(angle_at(k))).collect::<Result<_>>()?;
    let axis_report = find_axis(&[u, v], grid, tol, step)?;
    let resolution = step * PI / 180.0;
    let mut report = RotatingPlaneReport {
        verdict: ScanVerdict::NoSymmetry,
        dominance: dominance.clone(),
        resolution_deg: step,
        strict: Vec::new(),
        strictly_decreasing: false,
        axis_report,
        axis_gap: None,
        agrees: false,
    };
    if dominance.iter().all(|&b| b) {
        report.verdict = ScanVerdict::Radial;
        report.agrees = report.axis_report.verdict == crate::polarization::AxisVerdict::Radial { p: [1.0, 0.0] };
        return Ok(report);
    }
    if !dominance.iter().any(|&b| b) {
        report.agrees = report.axis_report.verdict.axis().is_none();
        return Ok(report);
    }
    // longest circular run of dominant directions
    let gap = dominance.iter().position(|&b| !b).expect("some direction fails");
    let (mut best_start, mut best_len) = (0, 0);
    let mut k = 0;
    while k < steps {
        let i = (gap + k) % steps;
        if dominance[i] {
            let mut len = 0;
            while len < steps && dominance[(i + len) % steps] {
                len += 1;
            }
            if len > best_len {
                best_start = i;
                best_len = len;
            }
            k += len;
        } else {
            k += 1;
        }
    }
    if best_len < 2 {
        report.verdict = ScanVerdict::Inconclusive;
        report.agrees = report.axis_report.verdict.axis().is_none();
        return Ok(report);
    }
    let refine = |inside: f64, outside: f64| -> Result<f64> {
        let (mut a, mut b) = (inside, outside);
        for _ in 0..12 {
            let m = 0.5 * (a + b);
            if dominant(m)? {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(a)
    };
    let lo_deg = angle_at(best_start);
    let hi_deg = lo_deg + (best_len - 1) as f64 * step;
    let lo = refine(lo_deg, lo_deg - step)?;
    let hi = refine(hi_deg, hi_deg + step)?;
    let mid = 0.5 * (lo + hi) * PI / 180.0;
    let p = [cos(mid), sin(mid)];
    report.verdict = ScanVerdict::Axis {
        phi_minus: crate::geometry::wrap_angle(lo * PI / 180.0),
        phi_plus: crate::geometry::wrap_angle(hi * PI / 180.0),
        p,
    };
    // lattice directions at least one step inside the arc
    let first = ceil((lo + step) / 45.0) as i64;
    let mut j = first;
    while (j as f64) * 45.0 <= hi - step {
        let deg = j as f64 * 45.0;
        let refl = ExactReflection::new(grid, &direction_at_degrees(deg))?;
        let mut min_w = [f64::INFINITY; 2];
        for (c, f) in [u, v].into_iter().enumerate() {
            let reflected = refl.reflect_field(f);
            for &x in grid.interior() {
                if refl.side(x) == Side::Inside {
                    min_w[c] = min_w[c].min(f.values()[x] - reflected.values()[x]);
                }
            }
        }
        let positive = min_w[0] > 0.0 && min_w[1] > 0.0;
        report.strict.push(StrictCheck { angle: deg * PI / 180.0, min_w, positive });
        j += 1;
    }
    report.strictly_decreasing = !report.strict.is_empty() && report.strict.iter().all(|s| s.positive);
    if let Some(q) = report.axis_report.verdict.axis() {
        let gap = angle_between(&p, &q);
        report.axis_gap = Some(gap);
        report.agrees = fabs(gap) <= resolution;
    }
    Ok(report)
}
