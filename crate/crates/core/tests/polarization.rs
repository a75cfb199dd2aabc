use nlsym_core::energy::{assemble, AssemblyOptions};
use nlsym_core::geometry::{Grid, HalfSpace, RadialDomain};
use nlsym_core::kernel::KernelSpec;
use nlsym_core::polarization::{
    energy_reduction_check, find_axis, foliated_schwarz_check, is_polarized, polarize, product_norm_check,
    two_point, AxisVerdict, EqualityClass, ExactReflection,
};
use nlsym_core::{Error, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk(h: f64) -> Grid {
    Grid::new(RadialDomain::ball(2, 1.0).unwrap(), h).unwrap()
}

fn odd_bump(g: &Grid) -> Field {
    Field::from_fn(g, |x| x[0] * (1.0 - x[0] * x[0] - x[1] * x[1]))
}


#[test]
fn polarize_examples() {
    let g = disk(0.1);
    let e1 = HalfSpace::new(vec![1.0, 0.0]).unwrap();
    let u = Field::from_fn(&g, |x| -x[0]);
    let uh = polarize(&u, &g, &e1).unwrap();
    let expect = Field::from_fn(&g, |x| x[0]);
    for (a, b) in uh.values().iter().zip(expect.values()) {
        assert!((a - b).abs() < 1e-15);
    }
    let b = odd_bump(&g);
    assert_eq!(polarize(&b, &g, &e1).unwrap(), b);
    let radial = Field::from_fn(&g, |x| 1.0 - x[0] * x[0] - x[1] * x[1]);
    for refl in ExactReflection::planar_family(&g).unwrap() {
        // sampling 1 − x² − y² is symmetric up to rounding only
        let p = refl.polarize(&radial).unwrap();
        assert!(p.values().iter().zip(radial.values()).all(|(a, b)| (a - b).abs() < 1e-15));
        // idempotent, and the value multiset is preserved
        let once = refl.polarize(&b).unwrap();
        assert_eq!(refl.polarize(&once).unwrap(), once);
        let mut a: Vec<f64> = b.values().to_vec();
        let mut c: Vec<f64> = once.values().to_vec();
        a.sort_by(f64::total_cmp);
        c.sort_by(f64::total_cmp);
        assert_eq!(a, c);
    }
    let odd = HalfSpace::from_angle(10f64.to_radians());
    assert!(matches!(polarize(&b, &g, &odd), Err(Error::ApproximatePairing)));
}

#[test]
fn dominance_examples() {
    let g = disk(0.05);
    let u = odd_bump(&g);
    for deg in [-80.0, -45.0, -10.0, 0.0, 10.0, 33.0, 60.0, 89.0] {
        let hs = HalfSpace::from_angle(f64::to_radians(deg));
        let d = is_polarized(&u, &g, &hs, 0.0).unwrap();
        assert!(d.holds, "{deg}°: {d:?}");
    }
    let back = HalfSpace::new(vec![-1.0, 0.0]).unwrap();
    let d = is_polarized(&u, &g, &back, 1e-9).unwrap();
    assert!(!d.holds);
    assert!((d.max_violation - 2.0 * u.max_abs()).abs() < 1e-12);
    let c = Field::from_fn(&g, |_| 3.0);
    for deg in [0.0, 17.0, 45.0, 200.0] {
        let d = is_polarized(&c, &g, &HalfSpace::from_angle(f64::to_radians(deg)), 1e-12).unwrap();
        assert!(d.holds, "{deg}: {d:?}");
    }
}

#[test]
fn energy_reduction_classes() {
    let g = disk(0.125);
    let k = KernelSpec::fractional(2, 0.5).unwrap();
    let op = assemble(&k, &g, AssemblyOptions::default()).unwrap();
    let e1 = ExactReflection::new(&g, &HalfSpace::new(vec![1.0, 0.0]).unwrap()).unwrap();
    let radial = Field::from_fn(&g, |x| 1.0 - x[0] * x[0] - x[1] * x[1]);
    let r = energy_reduction_check(&op, &radial, &e1).unwrap();
    assert_eq!(r.class, EqualityClass::Polarized);
    let flip = Field::from_fn(&g, |x| -x[0]);
    let r = energy_reduction_check(&op, &flip, &e1).unwrap();
    assert_eq!(r.class, EqualityClass::Reflected);
    assert!((r.before - r.after).abs() <= 1e-12 * r.before);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let family = ExactReflection::planar_family(&g).unwrap();
    for _ in 0..50 {
        let u = Field::from_fn(&g, |_| rng.gen_range(-1.0..1.0));
        for refl in &family {
            let r = energy_reduction_check(&op, &u, refl).unwrap();
            assert!(r.after <= r.before * (1.0 + 1e-12));
            assert_eq!(r.class, EqualityClass::Strict);
        }
    }
}

#[test]
fn asymmetric_mask_is_refused() {
    // a box lattice shifted off-center would break the mask symmetry; here
    // the shape is checked through the same permutation on a different grid
    let g = disk(0.125);
    let other = disk(0.1);
    let refl = ExactReflection::new(&g, &HalfSpace::new(vec![1.0, 0.0]).unwrap()).unwrap();
    assert!(refl.check_mask(&other).is_err());
}

#[test]
fn product_norm_examples() {
    let g = disk(0.125);
    let e1 = ExactReflection::new(&g, &HalfSpace::new(vec![1.0, 0.0]).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let one = Field::from_fn(&g, |_| 1.0);
    for _ in 0..20 {
        let u = Field::from_fn(&g, |_| rng.gen::<f64>());
        let p = product_norm_check(&u, &one, &e1, 2.0).unwrap();
        assert!(p.equal && p.condition);
        let v = Field::from_fn(&g, |_| rng.gen::<f64>());
        let p = product_norm_check(&u, &v, &e1, 1.5).unwrap();
        assert!(p.after >= p.before * (1.0 - 1e-15));
        assert_eq!(p.equal, p.condition);
    }
    // one reflection pair with opposite ordering
    let mut u = Field::zeros(&g);
    let mut v = Field::zeros(&g);
    let a = g.index(&[2, 1]).unwrap();
    let b = g.index(&[-2, 1]).unwrap();
    u.values_mut()[a] = 2.0;
    u.values_mut()[b] = 1.0;
    v.values_mut()[a] = 1.0;
    v.values_mut()[b] = 3.0;
    let p = product_norm_check(&u, &v, &e1, 2.0).unwrap();
    // (2·1)² + (1·3)² = 13 against (2·3)² + (1·1)² = 37
    let cell = 0.125f64 * 0.125;
    assert!((p.before - (13.0 * cell).sqrt()).abs() < 1e-14);
    assert!((p.after - (37.0 * cell).sqrt()).abs() < 1e-14);
    assert!(!p.equal && !p.condition);
    let neg = Field::from_fn(&g, |_| -1.0);
    assert!(product_norm_check(&neg, &one, &e1, 2.0).is_err());
}

#[test]
fn two_point_identity_on_integers() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let mut draw = || rng.gen_range(-1000i32..=1000) as f64;
        let (a, b, c, d) = (draw(), draw(), draw(), draw());
        let t = two_point(a, b, c, d);
        assert_eq!(t.f, -t.g);
        assert_eq!(t.f, t.f_closed);
        assert!(t.f >= 0.0);
        assert_eq!(t.f == 0.0, t.same_sign);
    }
}

#[test]
fn foliated_schwarz_examples() {
    let g = disk(0.05);
    let radial = Field::from_fn(&g, |x| (1.0f64 - x[0] * x[0] - x[1] * x[1]).powi(2));
    for p in [[1.0, 0.0], [0.6, 0.8], [0.0, -1.0]] {
        assert!(foliated_schwarz_check(&radial, &g, &p, 1e-12).unwrap().holds);
    }
    let u = odd_bump(&g);
    let rep = foliated_schwarz_check(&u, &g, &[1.0, 0.0], 1e-12).unwrap();
    assert!(rep.holds, "{}", rep.max_residual());
    assert!(!rep.rings.is_empty());
    assert!(rep.rings.iter().all(|r| r.upper.len() + r.lower.len() >= 256));
    let rep = foliated_schwarz_check(&u, &g, &[0.0, 1.0], 1e-12).unwrap();
    assert!(!rep.holds);
}

#[test]
fn axis_examples() {
    let g = disk(0.05);
    let u = odd_bump(&g);
    let rep = find_axis(&[&u], &g, 1e-12, 1.0).unwrap();
    let AxisVerdict::Axis { p, .. } = rep.verdict else { panic!("{:?}", rep.verdict) };
    assert!((p[0] - 1.0).abs() < 1e-3 && p[1].abs() < 0.02, "{p:?}");
    assert_eq!(rep.directions.len(), 360);
    assert!(rep.directions.iter().filter(|d| d.exact).count() == 8);

    let radial = Field::from_fn(&g, |x| 1.0 - x[0] * x[0] - x[1] * x[1]);
    assert_eq!(find_axis(&[&radial], &g, 1e-12, 1.0).unwrap().verdict, AxisVerdict::Radial { p: [1.0, 0.0] });

    let v = Field::from_fn(&g, |x| x[1] * (1.0 - x[0] * x[0] - x[1] * x[1]));
    assert_eq!(find_axis(&[&u, &v], &g, 1e-12, 1.0).unwrap().verdict, AxisVerdict::None);

    // an axis off the lattice directions
    let t = 0.4f64;
    let w = Field::from_fn(&g, |x| (x[0] * t.cos() + x[1] * t.sin()) * (1.0 - x[0] * x[0] - x[1] * x[1]));
    let rep = find_axis(&[&w], &g, 1e-12, 1.0).unwrap();
    let p = rep.verdict.axis().expect("axis");
    assert!((p[1].atan2(p[0]) - t).abs() < 1f64.to_radians(), "{p:?}");
}
