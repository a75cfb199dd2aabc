use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "
[grid]
target_nodes = 200

[solver]
seeds = 2

[diagnostics]
samples = 10
";

fn nlsym(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlsym")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.ini"), SMALL).unwrap();
    dir
}

#[test]
fn solve_is_reproducible_and_complete() {
    let dir = setup();
    let p = dir.path();
    for out in ["a", "b"] {
        let o = nlsym(p, &["--config", "small.ini", "--out", out, "--seed", "5", "solve"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["solve.json", "u.bin", "u.json", "v.bin", "v.json", "fields.csv", "log.csv", "rings.csv"] {
        let a = std::fs::read(p.join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(p.join("b").join(f)).unwrap(), "{f} differs between runs");
    }
    let s = json(&p.join("a/solve.json"));
    assert_eq!(s["seed"], 5);
    assert_eq!(s["seeds"].as_array().unwrap().len(), 2);
    assert_eq!(s["report"]["converged"], true);
    assert!(s["report"]["min_u"].as_f64().unwrap() > 0.0);
    assert!(s["symmetry"]["scan"]["agrees"].as_bool().unwrap());
    assert_eq!(json(&p.join("a/u.json"))["seed"], 5);

    let o = nlsym(p, &["--config", "small.ini", "--out", "sym", "symmetry", "--u", "a/u.bin", "--v", "a/v.bin"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sym = json(&p.join("sym/symmetry.json"));
    assert_eq!(sym["symmetry"], s["symmetry"]);
}

#[test]
fn assemble_and_eigen_write_their_files() {
    let dir = setup();
    let p = dir.path();
    assert!(nlsym(p, &["--config", "small.ini", "--out", "o", "--seed", "8", "assemble"]).status.success());
    assert!(nlsym(p, &["--config", "small.ini", "--out", "o", "--seed", "8", "eigen"]).status.success());
    for f in ["operator.bin", "assemble.json", "grid.json", "grid_mask.bin", "eigen.json", "phi1.bin", "phi1.json", "phi1.csv"] {
        assert!(p.join("o").join(f).is_file(), "{f} missing");
    }
    let (op, header) = nlsym::io::read_operator(&p.join("o/operator.bin")).unwrap();
    assert_eq!(header.seed, 8);
    let e = json(&p.join("o/eigen.json"));
    let lambda = nlsym_core::spectral::lambda1(&op, 1e-10, 5000).unwrap().lambda1;
    assert_eq!(e["lambda1"].as_f64().unwrap(), lambda);
    assert_eq!(json(&p.join("o/grid.json"))["seed"], 8);
}

#[test]
fn config_errors_exit_2_with_the_key() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("bad.ini"), "[solver]\nmax_iters = 10\n").unwrap();
    let o = nlsym(p, &["--config", "bad.ini", "--out", "o", "solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solver.max_iters"));

    let o = nlsym(p, &["--config", "missing.ini", "--out", "o", "eigen"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_1_with_diagnostics() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("short.ini"), format!("{SMALL}\n[solver]\nmax_iter = 2\n").replace("[solver]\nseeds = 2\n", "")).unwrap();
    let o = nlsym(p, &["--config", "short.ini", "--out", "o", "--seed", "4", "solve"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&p.join("o/diagnostics.json"));
    assert_eq!(d["seed"], 4);
    assert_eq!(d["command"], "solve");
    assert!(d["message"].as_str().unwrap().contains("iteration cap"));

    let o = nlsym(p, &["--out", "o", "symmetry", "--u", "nope.bin", "--v", "nope.bin"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_and_constants() {
    let dir = setup();
    let p = dir.path();
    let o = nlsym(p, &["--config", "small.ini", "--out", "o", "--seed", "3", "verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&p.join("o/verify.json"));
    assert_eq!(v["seed"], 3);
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"].as_array().unwrap().len(), 8);

    let o = nlsym(p, &["--out", "c", "constants", "--N", "1,2", "--s", "0.2,0.6"]);
    assert!(o.status.success());
    let c = json(&p.join("c/constants.json"));
    assert_eq!(c["rows"].as_array().unwrap().len(), 4);
    let text = std::fs::read_to_string(p.join("c/constants.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("dim,s,"), "{}", lines[0]);
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.ends_with("true")));
}
