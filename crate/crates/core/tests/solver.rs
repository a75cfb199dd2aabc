use nlsym_core::energy::{assemble, AssemblyOptions, EnergyOperator};
use nlsym_core::geometry::{Grid, HalfSpace, RadialDomain, Side};
use nlsym_core::kernel::KernelSpec;
use nlsym_core::polarization::ExactReflection;
use nlsym_core::solver::*;
use nlsym_core::spectral::lambda1;
use nlsym_core::{Error, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    grid: Grid,
    op: EnergyOperator,
    lambda1: f64,
    phi1: Field,
}

fn setup(domain: RadialDomain, h: f64) -> Setup {
    let grid = Grid::new(domain, h).unwrap();
    let k = KernelSpec::fractional(2, 0.5).unwrap();
    let op = assemble(&k, &grid, AssemblyOptions::default()).unwrap();
    let e = lambda1(&op, 1e-11, 10_000).unwrap();
    Setup { grid, op, lambda1: e.lambda1, phi1: e.phi1 }
}

fn disk() -> Setup {
    setup(RadialDomain::ball(2, 1.0).unwrap(), 0.125)
}

fn spec(a1: f64, a2: f64, q: f64) -> SystemSpec {
    SystemSpec { a1: RadialProfile::constant(a1), a2: RadialProfile::constant(a2), q }
}

fn random_field(g: &Grid, rng: &mut ChaCha8Rng) -> Field {
    Field::from_fn(g, |_| rng.gen_range(-1.0..1.0))
}

fn e1(g: &Grid) -> ExactReflection {
    ExactReflection::new(g, &HalfSpace::new(vec![1.0, 0.0]).unwrap()).unwrap()
}

#[test]
fn functional_arithmetic() {
    assert_eq!(functional_value(2.0, 1.0, 2.0), 0.5);
    assert_eq!(nehari_value(2.0, 1.0), 0.0);
    assert_eq!(nehari_scale(2.0, 1.0, 2.0).unwrap(), 1.0);
    assert!((nehari_scale(8.0, 1.0, 2.0).unwrap() - 2.0).abs() < 1e-15);
    assert!(matches!(nehari_scale(0.0, 1.0, 2.0), Err(Error::ZeroNorm)));
    assert!(matches!(nehari_scale(1.0, 0.0, 2.0), Err(Error::DegenerateProduct)));
}

#[test]
fn scaling_along_rays() {
    let s = disk();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for q in [1.5, 2.0, 3.0] {
        let sys = System::new(&s.op, spec(0.2 * s.lambda1, -1.0, q), s.lambda1).unwrap();
        let (u, v) = (random_field(&s.grid, &mut rng), random_field(&s.grid, &mut rng));
        let (n, p) = (sys.norm2(&u, &v).unwrap(), sys.product(&u, &v).unwrap());
        for t in [0.3, 1.0, 2.5] {
            let j = sys.functional(&u.scaled(t), &v.scaled(t)).unwrap();
            let expect = 0.5 * t * t * n - t.powf(2.0 * q) * p / q;
            assert!((j - expect).abs() <= 1e-12 * (n * t * t + t.powf(2.0 * q) * p), "q={q} t={t}");
        }
        let z = Field::zeros(&s.grid);
        assert_eq!(sys.functional(&z, &z).unwrap(), 0.0);
        let (gu, gv) = sys.gradient(&z, &z).unwrap();
        assert_eq!(gu.max_abs() + gv.max_abs(), 0.0);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let s = disk();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for q in [1.5, 2.0, 2.5] {
        let sys = System::new(&s.op, spec(0.1, 0.4 * s.lambda1, q), s.lambda1).unwrap();
        // keep the values away from zero so |·|^{q−1} stays smooth
        let u = Field::from_fn(&s.grid, |_| rng.gen_range(0.5..1.5));
        let v = Field::from_fn(&s.grid, |_| rng.gen_range(-1.5..-0.5));
        let (du, dv) = (random_field(&s.grid, &mut rng), random_field(&s.grid, &mut rng));
        let (gu, gv) = sys.gradient(&u, &v).unwrap();
        let exact = gu.inner_h(&du).unwrap() + gv.inner_h(&dv).unwrap();
        let err = |eps: f64| {
            let shift = |f: &Field, d: &Field, t: f64| f.zip_map(d, |a, b| a + t * b).unwrap();
            let jp = sys.functional(&shift(&u, &du, eps), &shift(&v, &dv, eps)).unwrap();
            let jm = sys.functional(&shift(&u, &du, -eps), &shift(&v, &dv, -eps)).unwrap();
            ((jp - jm) / (2.0 * eps) - exact).abs()
        };
        let (e1, e2) = (err(1e-2), err(1e-3));
        assert!(e2 < 1e-6 * exact.abs().max(1.0), "q={q}: {e2}");
        // second order: a tenfold smaller step gains about two digits
        assert!(e1 / e2 > 50.0, "q={q}: {e1} {e2}");
    }
}

#[test]
fn nehari_projection_identities() {
    let s = disk();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for q in [1.5, 2.0, 3.0] {
        let sys = System::new(&s.op, spec(0.0, 0.5 * s.lambda1, q), s.lambda1).unwrap();
        for _ in 0..10 {
            let (u, v) = (random_field(&s.grid, &mut rng), random_field(&s.grid, &mut rng));
            let p = sys.nehari_project(&u, &v).unwrap();
            let g = sys.nehari(&p.u, &p.v).unwrap();
            assert!(g.abs() <= 1e-10 * p.norm2, "q={q}: G={g}");
            assert!((p.radial_derivative - (1.0 - q) * p.norm2).abs() <= 1e-10 * p.norm2);
            let j = sys.functional(&p.u, &p.v).unwrap();
            // on the Nehari set J = (1/2 − 1/(2q))‖(u,v)‖²
            assert!((j - (0.5 - 0.5 / q) * p.norm2).abs() <= 1e-10 * p.norm2);
            // t₀ maximizes J along the ray
            for t in [0.9, 1.1] {
                assert!(sys.functional(&p.u.scaled(t), &p.v.scaled(t)).unwrap() < j);
            }
        }
    }
}

#[test]
fn small_norm_ball_keeps_nehari_positive() {
    let s = disk();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for q in [1.5, 2.0, 3.0] {
        let sys = System::new(&s.op, spec(0.3 * s.lambda1, -2.0, q), s.lambda1).unwrap();
        let r0 = sys.r0_squared();
        assert!(r0 > 0.0);
        for _ in 0..50 {
            let (u, v) = (random_field(&s.grid, &mut rng), random_field(&s.grid, &mut rng));
            let n = sys.norm2(&u, &v).unwrap();
            let t = (rng.gen_range(0.01..0.99) * r0 / n).sqrt();
            let (u, v) = (u.scaled(t), v.scaled(t));
            let n = sys.norm2(&u, &v).unwrap();
            assert!(n < r0);
            assert!(sys.nehari(&u, &v).unwrap() >= n / 3.0, "q={q}");
        }
    }
}

#[test]
fn system_validation() {
    let s = disk();
    assert!(System::new(&s.op, spec(0.0, 0.0, 1.0), s.lambda1).is_err());
    assert!(System::new(&s.op, spec(s.lambda1, 0.0, 2.0), s.lambda1).is_err());
    assert!(System::new(&s.op, spec(0.0, 0.0, 2.0), 0.0).is_err());
    let sys = System::new(&s.op, spec(-1.0, 0.99 * s.lambda1, 2.0), s.lambda1).unwrap();
    let c = sys.check();
    assert_eq!(c.sup_a1, 0.0);
    assert!(c.distinct_coefficients);
    // N = 2, s = ½ is the critical case for q = 2
    assert_eq!(c.critical_exponent, 2.0);
    assert!(!c.subcritical);
    let radial = RadialProfile::piecewise(vec![[0.0, 1.0], [0.5, -1.0], [1.0, 2.0]]).unwrap();
    assert_eq!(radial.eval(0.25), 0.0);
    assert_eq!(radial.eval(3.0), 2.0);
    assert_eq!(radial.sup_positive(0.0, 0.5), 1.0);
    assert!(RadialProfile::piecewise(vec![[0.5, 1.0], [0.2, 0.0]]).is_err());
}

#[test]
fn descent_reaches_positive_critical_point() {
    let s = disk();
    let sys = System::new(&s.op, spec(0.0, 0.3 * s.lambda1, 2.5), s.lambda1).unwrap();
    let (u, v) = eigen_seed(&s.phi1, &s.grid, 0.5, &[1.0, 0.0]).unwrap();
    let r = sys.minimize((&u, &v), &SolveOptions::default()).unwrap();
    assert!(r.converged, "{}", describe(&r));
    assert!(r.relative_residual() <= 1e-8);
    assert!(r.j <= r.j_seed);
    assert!(r.positive());
    assert!(r.min_u > 0.0 && r.min_v > 0.0);
    assert!(r.distinct);
    assert!(r.nehari_residual <= 1e-10);
    assert!(r.min_norm2 >= r.r0_squared);
    // J never increases along the logged iterates
    for w in r.log.windows(2) {
        assert!(w[1].j <= w[0].j + 16.0 * f64::EPSILON * w[0].j.abs(), "{w:?}");
    }
    let unpre = SolveOptions { preconditioned: false, ..SolveOptions::default() };
    let r2 = sys.minimize((&u, &v), &unpre).unwrap();
    assert!(r2.converged);
    assert!((r2.j - r.j).abs() <= 1e-6 * r.j);
}

#[test]
fn symmetric_seed_stays_symmetric() {
    let s = disk();
    let sys = System::new(&s.op, spec(0.2 * s.lambda1, 0.2 * s.lambda1, 2.0), s.lambda1).unwrap();
    let seed = Field::from_fn(&s.grid, |x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0) * (1.0 + 0.3 * x[0]));
    let r = sys.minimize((&seed, &seed), &SolveOptions::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.u, r.v);
    assert!(!r.distinct);
    assert_eq!(r.distinctness, 0.0);
}

#[test]
fn degenerate_seed_is_reseeded() {
    let s = disk();
    let sys = System::new(&s.op, spec(0.0, 0.0, 2.0), s.lambda1).unwrap();
    let u = Field::from_fn(&s.grid, |x| x[0].max(0.0));
    let v = Field::from_fn(&s.grid, |x| (-x[0]).max(0.0));
    let r = sys.minimize((&u, &v), &SolveOptions::default()).unwrap();
    assert!(r.restarts >= 1);
    assert!(r.converged && r.positive());
    let z = Field::zeros(&s.grid);
    let none = SolveOptions { max_restarts: 0, ..SolveOptions::default() };
    assert!(matches!(sys.minimize((&u, &z), &none), Err(Error::DegenerateProduct)));
}

#[test]
fn linearization_quadratic_case() {
    let s = disk();
    let a = [0.1, 0.25 * s.lambda1];
    let sys = System::new(&s.op, spec(a[0], a[1], 2.0), s.lambda1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let u = Field::from_fn(&s.grid, |_| rng.gen_range(0.0..1.0));
    let v = Field::from_fn(&s.grid, |_| rng.gen_range(0.0..1.0));
    let refl = e1(&s.grid);
    let lin = linearize(&sys, &u, &v, &refl).unwrap();
    assert!(!lin.diagonal_quotient);
    let (ru, rv) = (refl.reflect_field(&u), refl.reflect_field(&v));
    for (k, &i) in lin.c.nodes().iter().enumerate() {
        let b = [ru.values()[i], rv.values()[i]];
        let w = [u.values()[i] - b[0], v.values()[i] - b[1]];
        // ∫₀¹ of products of linear paths, in closed form
        let mean = |i: usize, j: usize| b[i] * b[j] + 0.5 * (b[i] * w[j] + b[j] * w[i]) + w[i] * w[j] / 3.0;
        let c = lin.c.at(k);
        assert!((c[1] - 2.0 * mean(0, 1)).abs() < 1e-13);
        assert_eq!(c[1], c[2]);
        assert!((c[0] - a[0] - mean(1, 1)).abs() < 1e-13);
        assert!((c[3] - a[1] - mean(0, 0)).abs() < 1e-13);
        assert!(c[1] >= 0.0);
        assert!((lin.w[0].values()[i] - w[0]).abs() == 0.0);
    }
    assert!(matches!(coupling_classify(&lin.c, None), Coupling::Fully { .. }));
}

#[test]
fn linearization_residual_at_a_solution() {
    let s = disk();
    for q in [1.5, 2.0] {
        let sys = System::new(&s.op, spec(0.0, 0.3 * s.lambda1, q), s.lambda1).unwrap();
        let (u, v) = eigen_seed(&s.phi1, &s.grid, 0.5, &[1.0, 0.0]).unwrap();
        let opts = SolveOptions { tol: 1e-10, symmetry: None, ..SolveOptions::default() };
        let r = sys.minimize((&u, &v), &opts).unwrap();
        let lin = linearize(&sys, &r.u, &r.v, &e1(&s.grid)).unwrap();
        assert_eq!(lin.diagonal_quotient, q < 2.0);
        assert!(lin.residual <= 1e-6 * lin.residual_scale.max(1.0), "q={q}: {}", lin.residual);
    }
}

#[test]
fn coupling_examples() {
    let nodes = vec![3, 7, 9];
    let full = CouplingField::uniform(2, nodes.clone(), &[1.0, 0.5, 0.5, -2.0]).unwrap();
    assert_eq!(coupling_classify(&full, None), Coupling::Fully { witness: nodes.clone() });
    let neg = CouplingField::uniform(2, nodes.clone(), &[1.0, -0.1, 0.5, 1.0]).unwrap();
    assert!(matches!(coupling_classify(&neg, None), Coupling::NotWeakly { node: 3, i: 0, j: 1, .. }));
    let zero = CouplingField::uniform(2, nodes.clone(), &[1.0, 0.0, 0.3, 1.0]).unwrap();
    assert_eq!(coupling_classify(&zero, None), Coupling::Weakly);
    // each pair positive somewhere, never both at one node
    let split = CouplingField::new(
        2,
        nodes.clone(),
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    )
    .unwrap();
    assert_eq!(coupling_classify(&split, None), Coupling::Fully { witness: vec![3, 7] });
    assert_eq!(coupling_classify(&split, Some(&[7, 9])), Coupling::Weakly);
    assert_eq!(coupling_classify(&CouplingField::uniform(1, nodes.clone(), &[-4.0]).unwrap(), None), Coupling::Fully { witness: nodes });
    assert!(CouplingField::new(2, vec![2, 1], vec![0.0; 8]).is_err());
    assert!(CouplingField::new(2, vec![1], vec![0.0; 3]).is_err());
}

/// Interior nodes with `x₁ > 0` inside a small disk around `(0.5, 0)`.
fn patch(g: &Grid, radius: f64) -> Vec<usize> {
    g.interior()
        .iter()
        .copied()
        .filter(|&i| {
            let x = g.point(i);
            x[0] > 0.0 && (x[0] - 0.5).hypot(x[1]) < radius
        })
        .collect()
}

#[test]
fn antisymmetric_operator_oracle() {
    let s = disk();
    let refl = e1(&s.grid);
    let d = patch(&s.grid, 0.3);
    let n = d.len();
    let b = antisymmetric_matrix(&s.op, &refl, &d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // B acts like I on the odd extension of a field on D
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut f = Field::zeros(&s.grid);
    for (k, &i) in d.iter().enumerate() {
        f.values_mut()[i] = w[k];
        f.values_mut()[refl.perm()[i]] = -w[k];
    }
    let iw = s.op.apply(&f).unwrap();
    for (x, &i) in d.iter().enumerate() {
        let bw: f64 = (0..n).map(|y| b[x * n + y] * w[y]).sum();
        assert!((bw - iw.values()[i]).abs() <= 1e-10 * iw.max_abs());
        for y in 0..n {
            assert_eq!(b[x * n + y], b[y * n + x]);
            if x != y {
                assert!(b[x * n + y] <= 0.0);
            }
        }
    }
    let lambda = antisymmetric_lambda1(&s.op, &refl, &d).unwrap();
    let rayleigh = |w: &[f64]| {
        let num: f64 = (0..n).map(|x| w[x] * (0..n).map(|y| b[x * n + y] * w[y]).sum::<f64>()).sum();
        num / w.iter().map(|t| t * t).sum::<f64>()
    };
    for _ in 0..100 {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(lambda <= rayleigh(&w) * (1.0 + 1e-10));
    }
    let gershgorin = (0..n)
        .map(|x| b[x * n + x] - (0..n).filter(|&y| y != x).map(|y| b[x * n + y].abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    assert!(lambda >= gershgorin * (1.0 - 1e-10));
    // smaller sets have larger first eigenvalues
    let smaller = patch(&s.grid, 0.2);
    assert!(antisymmetric_lambda1(&s.op, &refl, &smaller).unwrap() > lambda);
    // nodes on the mirror line are refused
    let on_line: Vec<usize> = s.grid.interior().iter().copied().filter(|&i| refl.side(i) == Side::Boundary).take(1).collect();
    assert!(antisymmetric_matrix(&s.op, &refl, &on_line).is_err());
}

#[test]
fn small_volume_principle() {
    let s = disk();
    let refl = e1(&s.grid);
    let d = patch(&s.grid, 0.3);
    let n = d.len();
    let lambda = antisymmetric_lambda1(&s.op, &refl, &d).unwrap();
    let zero = CouplingField::uniform(2, d.clone(), &[0.0; 4]).unwrap();
    let rhs = vec![1.0; 2 * n];
    let r = mp_check(&s.op, &refl, &zero, &d, &MpMode::SmallVolume { rhs, tol: 0.0 }).unwrap();
    assert!(matches!(r.verdict, MpVerdict::Holds { min } if min > 0.0));
    assert_eq!(r.lambda1_d, Some(lambda));

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        // weakly coupled with 2 c∞ < Λ₁(D)
        let cap = rng.gen_range(0.0..0.99) * lambda / 2.0;
        let entries: Vec<f64> = (0..n)
            .flat_map(|_| {
                let d1 = rng.gen_range(-cap..cap);
                let d2 = rng.gen_range(-cap..cap);
                [d1, rng.gen_range(0.0..cap), rng.gen_range(0.0..cap), d2]
            })
            .collect();
        let c = CouplingField::new(2, d.clone(), entries).unwrap();
        let rhs: Vec<f64> = (0..2 * n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect();
        let r = mp_check(&s.op, &refl, &c, &d, &MpMode::SmallVolume { rhs, tol: 1e-12 }).unwrap();
        assert!(r.holds(), "{:?}", r.verdict);
        assert!(r.coupling_bound < lambda);
    }

    let big = CouplingField::uniform(2, d.clone(), &[0.0, lambda, lambda, 0.0]).unwrap();
    let r = mp_check(&s.op, &refl, &big, &d, &MpMode::SmallVolume { rhs: vec![1.0; 2 * n], tol: 0.0 }).unwrap();
    assert!(matches!(r.verdict, MpVerdict::HypothesisNotMet { .. }));
    let neg = CouplingField::uniform(2, d.clone(), &[0.0, -1e-3, 0.0, 0.0]).unwrap();
    let r = mp_check(&s.op, &refl, &neg, &d, &MpMode::SmallVolume { rhs: vec![1.0; 2 * n], tol: 0.0 }).unwrap();
    assert!(matches!(r.verdict, MpVerdict::HypothesisNotMet { .. }));
    let short = mp_check(&s.op, &refl, &zero, &d, &MpMode::SmallVolume { rhs: vec![1.0; n], tol: 0.0 });
    assert!(short.is_err());
    let negative_rhs = mp_check(&s.op, &refl, &zero, &d, &MpMode::SmallVolume { rhs: vec![-1.0; 2 * n], tol: 0.0 });
    assert!(negative_rhs.is_err());
}

/// Ground state on an annulus with the eigenfunction seed tilted along `x₁`.
fn annulus_ground_state() -> (Setup, SolveReport, f64) {
    let s = setup(RadialDomain::annulus(2, 0.5, 1.0).unwrap(), 0.075);
    let a2 = 0.3 * s.lambda1;
    let sys = System::new(&s.op, spec(0.0, a2, 2.0), s.lambda1).unwrap();
    let (u, v) = eigen_seed(&s.phi1, &s.grid, 0.5, &[1.0, 0.0]).unwrap();
    let r = sys.minimize((&u, &v), &SolveOptions::default()).unwrap();
    (s, r, a2)
}

#[test]
fn strong_principle_on_ground_state() {
    let (s, r, a2) = annulus_ground_state();
    assert!(r.converged && r.positive(), "{}", describe(&r));
    let sys = System::new(&s.op, spec(0.0, a2, 2.0), s.lambda1).unwrap();
    let refl = e1(&s.grid);
    let lin = linearize(&sys, &r.u, &r.v, &refl).unwrap();
    let h: Vec<usize> = s.grid.interior().iter().copied().filter(|&i| refl.side(i) == Side::Inside).collect();
    assert!(matches!(coupling_classify(&lin.c, Some(&h)), Coupling::Fully { .. }));
    let tol = 1e-10 * r.u.max_abs().max(r.v.max_abs());
    let rep = mp_check(&s.op, &refl, &lin.c, &h, &MpMode::Strong { w: lin.w.clone(), tol }).unwrap();
    assert!(matches!(rep.verdict, MpVerdict::Holds { min } if min > 0.0), "{:?}", rep.verdict);
    // x₂ ↦ −x₂ is a symmetry of the pair, so W vanishes up to rounding
    let plane = ExactReflection::new(&s.grid, &HalfSpace::new(vec![0.0, 1.0]).unwrap()).unwrap();
    let lin = linearize(&sys, &r.u, &r.v, &plane).unwrap();
    let h: Vec<usize> = s.grid.interior().iter().copied().filter(|&i| plane.side(i) == Side::Inside).collect();
    let rep = mp_check(&s.op, &plane, &lin.c, &h, &MpMode::Strong { w: lin.w, tol }).unwrap();
    assert_eq!(rep.verdict, MpVerdict::Vanishes);
    // the reflected pair violates the nonnegativity hypothesis
    let back = ExactReflection::new(&s.grid, &HalfSpace::new(vec![-1.0, 0.0]).unwrap()).unwrap();
    let lin = linearize(&sys, &r.u, &r.v, &back).unwrap();
    let h: Vec<usize> = s.grid.interior().iter().copied().filter(|&i| back.side(i) == Side::Inside).collect();
    let rep = mp_check(&s.op, &back, &lin.c, &h, &MpMode::Strong { w: lin.w, tol }).unwrap();
    assert!(!rep.holds());
}

#[test]
fn scan_on_ground_state() {
    let (s, r, _) = annulus_ground_state();
    let sym = r.symmetry.as_ref().expect("symmetry report");
    assert!(sym.foliated_symmetric());
    let scan = rotating_plane_scan(&r.u, &r.v, &s.grid, 1e-6 * r.u.max_abs(), 1.0).unwrap();
    let ScanVerdict::Axis { phi_minus, phi_plus, p } = scan.verdict else { panic!("{:?}", scan.verdict) };
    assert!(p[0] > 0.999, "{p:?}");
    assert!(phi_minus < 0.0 && phi_plus > 0.0);
    assert!(scan.strictly_decreasing && scan.agrees);
}

#[test]
fn scan_examples() {
    let g = Grid::new(RadialDomain::ball(2, 1.0).unwrap(), 0.05).unwrap();
    let radial = Field::from_fn(&g, |x| 1.0 - x[0] * x[0] - x[1] * x[1]);
    let rep = rotating_plane_scan(&radial, &radial.scaled(2.0), &g, 1e-12, 2.0).unwrap();
    assert_eq!(rep.verdict, ScanVerdict::Radial);
    assert!(rep.agrees);
    assert!(rep.dominance.iter().all(|&b| b));

    let bump = |c: f64| Field::from_fn(&g, move |x| ((1.0 - x[0] * x[0] - x[1] * x[1]) * (c + x[0])).max(0.0));
    let rep = rotating_plane_scan(&bump(1.0), &bump(1.5), &g, 1e-12, 1.0).unwrap();
    let ScanVerdict::Axis { p, .. } = rep.verdict else { panic!("{:?}", rep.verdict) };
    assert!((p[0] - 1.0).abs() < 1e-3, "{p:?}");
    assert!(rep.agrees);

    // dominant on the quarter (0°, 90°), but neither endpoint is a symmetry
    // plane of both components
    let u = Field::from_fn(&g, |x| x[0] * (1.0 - x[0] * x[0] - x[1] * x[1]));
    let v = Field::from_fn(&g, |x| x[1] * (1.0 - x[0] * x[0] - x[1] * x[1]));
    let rep = rotating_plane_scan(&u, &v, &g, 1e-12, 1.0).unwrap();
    let ScanVerdict::Axis { p, .. } = rep.verdict else { panic!("{:?}", rep.verdict) };
    assert!((p[0] - p[1]).abs() < 1e-3, "{p:?}");
    assert!(rep.axis_report.verdict.axis().is_none());
    assert!(!rep.agrees);
    assert!(rotating_plane_scan(&u, &v, &g, 1e-12, 0.0).is_err());
}
