//! Bessel functions against a 30-digit reference table (generated offline
//! with mpmath) over x ∈ [1e-4, 50], ν ∈ [0, 10].

use grushin_core::bessel::*;

const TABLE: &str = include_str!("data/bessel_reference.csv");

struct Row {
    x: f64,
    nu: f64,
    v: [f64; 8],
}

fn rows() -> Vec<Row> {
    TABLE
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            Row { x: f[0], nu: f[1], v: [f[2], f[3], f[4], f[5], f[6], f[7], f[8], f[9]] }
        })
        .collect()
}

/// Error scale for oscillating functions: the local amplitude
/// `sqrt(f² + (x f'/ν)²)`, which never vanishes.
fn envelope(x: f64, nu: f64, f: f64, df: f64) -> f64 {
    if nu > 0.0 {
        (f * f + (x * df / nu).powi(2)).sqrt().max(f.abs())
    } else {
        f.abs()
    }
}

type Eval = fn(f64, f64) -> grushin_core::Result<(f64, f64)>;

fn check(name: &str, idx: usize, eval: Eval, oscillating: bool, tol: f64) {
    let mut worst = (0.0f64, 0.0, 0.0);
    for r in rows() {
        let (f, df) = (r.v[idx], r.v[idx + 1]);
        let (v, d) = eval(r.x, r.nu).unwrap();
        let scale_v = if oscillating { envelope(r.x, r.nu, f, df) } else { f.abs() };
        let scale_d = if oscillating { envelope(r.x, r.nu, f, df) * (r.nu.max(1.0) / r.x + 1.0) } else { df.abs() };
        let e = ((v - f).abs() / scale_v).max((d - df).abs() / scale_d);
        if e > worst.0 {
            worst = (e, r.x, r.nu);
        }
    }
    println!("{name}: worst relative error {:.3e} at x={}, nu={}", worst.0, worst.1, worst.2);
    assert!(worst.0 < tol, "{name}: {:?}", worst);
}

#[test]
fn real_order_i() {
    check("I", 0, bessel_i_with_derivative, false, 1e-10);
}

#[test]
fn real_order_k() {
    check("K", 2, bessel_k_with_derivative, false, 1e-10);
}

#[test]
fn imaginary_order_i() {
    check("I~", 4, bessel_i_tilde_with_derivative, true, 1e-10);
}

#[test]
fn imaginary_order_k() {
    check("K~", 6, bessel_k_tilde_with_derivative, true, 1e-10);
}

#[test]
fn wronskians() {
    for r in rows() {
        let (i, di) = bessel_i_with_derivative(r.x, r.nu).unwrap();
        let (k, dk) = bessel_k_with_derivative(r.x, r.nu).unwrap();
        let w = i * dk - di * k;
        let scale = (i * dk).abs() + (di * k).abs();
        assert!((w + 1.0 / r.x).abs() < 1e-10 * scale, "real x={} nu={}", r.x, r.nu);
        let (i, di) = bessel_i_tilde_with_derivative(r.x, r.nu).unwrap();
        let (k, dk) = bessel_k_tilde_with_derivative(r.x, r.nu).unwrap();
        let w = i * dk - di * k;
        let scale = (i * dk).abs() + (di * k).abs();
        assert!((w + 1.0 / r.x).abs() < 1e-10 * scale.max(1.0 / r.x), "imag x={} nu={}", r.x, r.nu);
    }
}
