use nlsym::config::{
    parse_profile, Coefficient, ConfigError, ExperimentConfig, KernelConfig, Profile, Resolution,
};
use nlsym_core::geometry::DomainShape;

fn err(text: &str) -> ConfigError {
    ExperimentConfig::parse(text).expect_err("config should be rejected")
}

fn invalid_path(e: &ConfigError) -> &str {
    match e {
        ConfigError::Invalid { path, .. } | ConfigError::Unknown { path } => path,
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn empty_file_gives_defaults() {
    let cfg = ExperimentConfig::parse("").unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.grid.resolution, Resolution::TargetNodes(800));
    assert_eq!(cfg.domain.shape, DomainShape::Annulus { r_in: 0.5, r_out: 1.0 });
}

#[test]
fn full_file() {
    let text = "
; a comment line
[kernel]
family = fractional
s = 0.3

[domain]
shape = ball
dim = 2
r_out = 1.5

[grid]
h = 0.1
gauss_points = 2
cutoff = 0.25

[system]
a1 = -1
a2 = 0:0.1*lambda1, 1.5:0.4*lambda1
q = 1.5

[solver]
tol = 1e-9
seeds = 2
preconditioned = no

# another comment
[diagnostics]
resolution_deg = 0.5
tol = 1e-4
samples = 10
";
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(cfg.kernel, KernelConfig::Fractional { s: 0.3 });
    assert_eq!(cfg.domain.shape, DomainShape::Ball { r_out: 1.5 });
    assert_eq!(cfg.grid.resolution, Resolution::Spacing(0.1));
    assert_eq!(cfg.grid.gauss_points, 2);
    assert_eq!(cfg.grid.cutoff, Some(0.25));
    assert_eq!(cfg.system.q, 1.5);
    assert_eq!(cfg.system.a1, Profile::Constant { value: Coefficient { value: -1.0, relative: false } });
    let Profile::Knots { knots } = &cfg.system.a2 else { panic!("knots expected") };
    assert_eq!(knots.len(), 2);
    assert_eq!(knots[1], (1.5, Coefficient { value: 0.4, relative: true }));
    assert!(!cfg.solver.preconditioned);
    assert_eq!(cfg.solver.seeds, 2);
    assert_eq!(cfg.solver.max_iter, 5000);
    assert_eq!(cfg.diagnostics.samples, 10);
}

#[test]
fn render_round_trips() {
    let mut cfg = ExperimentConfig::default();
    assert_eq!(ExperimentConfig::parse(&cfg.render()).unwrap(), cfg);
    cfg.grid.resolution = Resolution::Spacing(0.0625);
    cfg.grid.cutoff = Some(0.3);
    cfg.system.a1 = parse_profile("0.5:-2, 0.75:0.25*lambda1, 1:0.875*lambda1", "x").unwrap();
    cfg.system.a2 = parse_profile("-0.125", "x").unwrap();
    cfg.system.q = 2.5;
    cfg.solver.preconditioned = false;
    cfg.diagnostics.tol = 3e-7;
    let text = cfg.render();
    assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg, "{text}");
}

#[test]
fn unknown_keys_name_their_path() {
    assert_eq!(invalid_path(&err("[solver]\nmax_iters = 3\n")), "solver.max_iters");
    assert_eq!(invalid_path(&err("[kernel]\ns = 0.5\norder = 2\n")), "kernel.order");
    assert_eq!(invalid_path(&err("[output]\ndir = x\n")), "output");
    assert_eq!(invalid_path(&err("seed = 3\n")), "seed");
}

#[test]
fn bad_values_name_their_path() {
    for (text, path) in [
        ("[kernel]\ns = 1.2\n", "kernel.s"),
        ("[kernel]\ns = half\n", "kernel.s"),
        ("[kernel]\nfamily = gaussian\n", "kernel.family"),
        ("[kernel]\nfamily = tabulated\n", "kernel.table"),
        ("[domain]\nshape = ball\nr_in = 0.2\n", "domain.r_in"),
        ("[domain]\nr_in = 2\n", "domain"),
        ("[grid]\nh = 0.1\ntarget_nodes = 100\n", "grid.h"),
        ("[grid]\nh = -0.1\n", "grid.h"),
        ("[grid]\ncutoff = 0\n", "grid.cutoff"),
        ("[system]\nq = 1\n", "system.q"),
        ("[system]\na2 = lambda1\n", "system.a2"),
        ("[system]\na1 = 0.5:0.2*lambda1, 0.9:0.95*lambda1, 0.7:0\n", "system.a1"),
        ("[system]\na1 = 2*lambda\n", "system.a1"),
        ("[solver]\nseeds = 0\n", "solver.seeds"),
        ("[solver]\npreconditioned = maybe\n", "solver.preconditioned"),
        ("[solver]\ntol = nan\n", "solver.tol"),
        ("[diagnostics]\nresolution_deg = 120\n", "diagnostics.resolution_deg"),
        ("[solver]\ntol = 1\ntol = 2\n", "solver.tol"),
    ] {
        let e = err(text);
        assert_eq!(invalid_path(&e), path, "{text:?} gave {e}");
        assert!(e.to_string().starts_with(path), "{e}");
    }
}

#[test]
fn syntax_errors_carry_a_line() {
    match err("[kernel]\ns = 0.5\n[solver\n") {
        ConfigError::Syntax { line, .. } => assert!(line >= 3, "line {line}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn profiles_resolve_against_lambda1() {
    let p = parse_profile("0.5:0, 1:0.5*lambda1", "system.a2").unwrap();
    let r = p.resolve(4.0).unwrap();
    assert_eq!(r.eval(0.5), 0.0);
    assert_eq!(r.eval(1.0), 2.0);
    assert!((r.eval(0.75) - 1.0).abs() < 1e-15);
    assert_eq!(parse_profile(" lambda1 ", "p").unwrap().resolve(3.0).unwrap().eval(0.7), 3.0);
    assert_eq!(parse_profile("2.5", "p").unwrap().resolve(3.0).unwrap().eval(0.7), 2.5);
    assert_eq!(p.to_string(), "0.5:0, 1:0.5*lambda1");
}

#[test]
fn table_paths_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    std::fs::create_dir(&sub).unwrap();
    let file = sub.join("run.ini");
    std::fs::write(&file, "[kernel]\nfamily = tabulated\ntable = k.csv\nstrictly_decreasing = true\n").unwrap();
    let cfg = ExperimentConfig::load(&file).unwrap();
    assert_eq!(cfg.kernel, KernelConfig::Tabulated { table: sub.join("k.csv"), strictly_decreasing: true });
    match ExperimentConfig::load(&dir.path().join("missing.ini")) {
        Err(ConfigError::Io(..)) => {}
        other => panic!("unexpected {other:?}"),
    }
}
