use nlsym_core::linalg::*;

fn spd(n: usize) -> Vec<f64> {
    // tridiagonal (−1, 2.5, −1)
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 2.5;
        if i + 1 < n {
            a[i * n + i + 1] = -1.0;
            a[(i + 1) * n + i] = -1.0;
        }
    }
    a
}

#[test]
fn cholesky_and_lu_solve() {
    let n = 12;
    let a = spd(n);
    let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
    let x = Cholesky::factor(&a, n).unwrap().solve(&b);
    let y = Lu::factor(&a, n).unwrap().solve(&b);
    let r = matvec(&a, n, &x);
    for i in 0..n {
        assert!((r[i] - b[i]).abs() < 1e-12);
        assert!((x[i] - y[i]).abs() < 1e-12);
    }
    assert!(Cholesky::factor(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
    assert!(Lu::factor(&[1.0, 2.0, 2.0, 4.0], 2).is_err());
}

#[test]
fn tridiagonal_spectrum() {
    let n = 20;
    let a = spd(n);
    let e = inverse_iteration(&a, n, 1e-12, 10_000).unwrap();
    assert!(e.converged);
    // eigenvalues 2.5 − 2cos(kπ/(n+1))
    let exact = 2.5 - 2.0 * (core::f64::consts::PI / (n as f64 + 1.0)).cos();
    assert!((e.value - exact).abs() < 1e-12);
    assert!(e.vector.iter().all(|&v| v > 0.0));
}
