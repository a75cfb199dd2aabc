use std::f64::consts::PI;

use libm::{pow, sin};
use nlsym_core::kernel::*;
use nlsym_core::Error;

/// Independent Lanczos Gamma oracle (g = 7, n = 9).
fn gamma_oracle(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / (sin(PI * x) * gamma_oracle(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = G[0];
    for (i, g) in G.iter().enumerate().skip(1) {
        acc += g / (x + i as f64);
    }
    let t = x + 7.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

fn oracle_constant(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    4f64.powf(s) * s * gamma_oracle(nf / 2.0 + s)
        / (PI.powf(nf / 2.0) * gamma_oracle(1.0 - s))
}

#[test]
fn normalization_examples() {
    let c = fractional_normalization(1, 0.5).unwrap();
    assert!((c - 1.0 / PI).abs() < 1e-14);
    let c = fractional_normalization(2, 0.5).unwrap();
    assert!((c - 0.5 / PI).abs() < 1e-14);
    for n in 1..=3 {
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let c = fractional_normalization(n, s).unwrap();
            let o = oracle_constant(n, s);
            assert!((c - o).abs() < 1e-12 * o, "N={n} s={s}: {c} vs {o}");
        }
    }
    assert!(fractional_normalization(1, 1.0).is_err());
    assert!(fractional_normalization(1, 0.0).is_err());
}

#[test]
fn quadrature_matches_gamma_formula() {
    for n in 1..=3 {
        for s in [0.25, 0.5, 0.75] {
            let q = normalization_by_quadrature(n, s).unwrap();
            let c = fractional_normalization(n, s).unwrap();
            assert!(((q - c) / c).abs() < 1e-6, "N={n} s={s}: {q} vs {c}");
        }
    }
}

#[test]
fn eval_examples() {
    let k = KernelSpec::fractional(1, 0.5).unwrap();
    assert!((k.eval(1.0).unwrap().value - 1.0 / PI).abs() < 1e-15);
    let k2 = KernelSpec::fractional(2, 0.5).unwrap();
    let v = k2.eval(2.0).unwrap().value;
    assert!((v - oracle_constant(2, 0.5) / 8.0).abs() < 1e-14);
    assert!(k.eval(0.0).is_err());
    assert!(k.eval(-1.0).is_err());

    let t = KernelSpec::tabulated(
        1,
        vec![Sample { r: 1.0, k0: 4.0 }, Sample { r: 2.0, k0: 1.0 }],
        true,
    )
    .unwrap();
    assert_eq!(t.eval(2.0).unwrap().value, 1.0);
    assert_eq!(t.eval(1.0).unwrap().value, 4.0);
    // log-log interpolation of 4 r^{-2}
    assert!((t.eval(1.5).unwrap().value - 4.0 / 2.25).abs() < 1e-14);
    assert!((t.eval(4.0).unwrap().value - 0.25).abs() < 1e-14);
    let below = t.eval(0.5).unwrap();
    assert!(below.extrapolated);
    assert!((below.value - 16.0).abs() < 1e-12);
}

#[test]
fn table_construction_rejects_bad_input() {
    let s = |r, k0| Sample { r, k0 };
    assert!(KernelSpec::tabulated(1, vec![s(1.0, 1.0)], false).is_err());
    assert!(KernelSpec::tabulated(1, vec![s(1.0, 1.0), s(1.0, 0.5)], false).is_err());
    assert!(KernelSpec::tabulated(1, vec![s(1.0, 1.0), s(2.0, 2.0)], false).is_err());
    assert!(KernelSpec::tabulated(1, vec![s(1.0, 1.0), s(2.0, -1.0)], false).is_err());
    assert!(KernelSpec::tabulated(1, vec![s(1.0, 1.0), s(2.0, 1.0)], true).is_err());
    assert!(KernelSpec::tabulated(1, vec![s(1.0, 1.0), s(2.0, 1.0)], false).is_ok());
}

#[test]
fn fractional_validates_with_saturated_bounds() {
    let k = KernelSpec::fractional(2, 0.6).unwrap();
    let c = fractional_normalization(2, 0.6).unwrap();
    let bound = BoundParams { c: c.max(1.0 / c), s: 0.6, sigma: 0.6, gamma: 0.6 };
    let rep = k.validate(Some(bound));
    assert!(rep.is_admissible());
    assert!(rep.bounds.unwrap().all());
    assert_eq!(rep.zeroth_moment_divergence, Verdict::Holds);
    // a faster tail than the kernel has is rejected
    let rep = k.validate(Some(BoundParams { gamma: 0.8, ..bound }));
    assert!(!rep.bounds.unwrap().tail);
}

fn truncated_power_table() -> KernelSpec {
    // r^{-2.2} on (0,1], zero beyond
    let mut samples: Vec<Sample> = (0..=40)
        .map(|i| {
            let r = pow(10.0, -4.0 + 0.1 * i as f64);
            Sample { r, k0: pow(r, -2.2) }
        })
        .collect();
    samples.push(Sample { r: 1.5, k0: 0.0 });
    KernelSpec::tabulated(1, samples, false).unwrap()
}

#[test]
fn truncated_power_table_report() {
    let k = truncated_power_table();
    let rep = k.validate(None);
    assert_eq!(rep.second_moment, Verdict::Holds);
    assert_eq!(rep.zeroth_moment_divergence, Verdict::Holds);
    assert!(rep.flag_consistent);
    // closed form of ∫_0^1 r² r^{-2.2} dr = 1/0.8 plus the log-linear ramp
    let m = k.radial_mass(0.5, 1.0).unwrap();
    let exact = (pow(0.5, -1.2) - 1.0) / 1.2;
    assert!((m - exact).abs() < 1e-12 * exact);
}

#[test]
fn bounded_table_fails_divergence() {
    let s = |r, k0| Sample { r, k0 };
    let k =
        KernelSpec::tabulated(2, vec![s(0.01, 5.0), s(0.1, 5.0), s(1.0, 1.0), s(2.0, 0.1)], false)
            .unwrap();
    assert_eq!(k.validate(None).zeroth_moment_divergence, Verdict::Fails);
    let far = KernelSpec::tabulated(2, vec![s(2.0, 5.0), s(3.0, 1.0)], true).unwrap();
    assert_eq!(far.validate(None).zeroth_moment_divergence, Verdict::Inconclusive);
}

#[test]
fn truncation_examples() {
    let k = KernelSpec::fractional(1, 0.5).unwrap();
    let j1 = k.truncate(1.0).unwrap().long_range_mass;
    assert!((j1 - 2.0 / PI).abs() < 1e-10);
    let j_half = k.truncate(0.5).unwrap().long_range_mass;
    assert!(j_half > j1);
    let j01 = k.truncate(0.1).unwrap().long_range_mass;
    let j001 = k.truncate(0.01).unwrap().long_range_mass;
    assert!(j001 > j01 && j01 > j1);
    assert!(j001 / j1 > 10.0);
    assert!((j001 / j1 - 100.0).abs() < 1e-6);
}

#[test]
fn truncation_agrees_with_closed_form_tail() {
    let k = truncated_power_table();
    for delta in [1e-3, 0.02, 0.3, 0.9, 2.0] {
        let j = k.truncate(delta).unwrap().long_range_mass;
        let exact = 2.0 * k.tail_mass(delta).unwrap();
        assert!((j - exact).abs() <= 1e-9 * exact.max(1e-300), "δ={delta}: {j} vs {exact}");
    }
    let k = KernelSpec::fractional(3, 0.25).unwrap();
    let j = k.truncate(0.2).unwrap().long_range_mass;
    let exact = 4.0 * PI * k.tail_mass(0.2).unwrap();
    assert!((j - exact).abs() < 1e-9 * exact);
}

#[test]
fn divergent_tail_is_rejected() {
    let s = |r, k0| Sample { r, k0 };
    let k = KernelSpec::tabulated(2, vec![s(0.5, 4.0), s(1.0, 2.0)], true).unwrap();
    assert!(matches!(k.truncate(1.0), Err(Error::TailMassInfinite)));
}
