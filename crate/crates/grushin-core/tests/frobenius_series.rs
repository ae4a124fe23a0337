use grushin_core::frobenius::*;
use grushin_core::params::{theta_lattice, GrushinParams, Root};
use grushin_core::Complex64;
use proptest::prelude::*;

/// Ascending-series coefficients of `x^{(1+αn)/2} I_{±ν}(k x^{1+α}/(1+α))`,
/// normalised to a unit leading coefficient: the `m`-th one multiplies
/// `x^{λ + 2m(1+α)}`.
fn bessel_series_coefficients(alpha: f64, nu: Complex64, k: f64, terms: usize) -> Vec<Complex64> {
    let q = k / (2.0 * (1.0 + alpha));
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for m in 1..terms {
        let prev = out[m - 1];
        out.push(prev * q * q / ((m as f64) * (nu + m as f64)));
    }
    out
}

fn check_against_bessel(alpha: f64, n: u32, c: f64, root: Root) {
    let params = GrushinParams::new(alpha, n, c).unwrap();
    let data = flat_model_series_data(&params, 3);
    let step = 2.0 * (1.0 + alpha);
    let sqrt_mu = data.indicial.sqrt_mu();
    let nu = match root {
        Root::Plus => sqrt_mu / step,
        Root::Minus => -sqrt_mu / step,
    };
    for k in 1..=3i64 {
        let mut mode = vec![0i64; n as usize];
        mode[0] = k;
        let idx = data.modes.iter().position(|m| *m == mode).unwrap();
        let seed = data.mode_seed(&mode).unwrap();
        let e = expand(&data, root, &seed, 9.0 * step).unwrap();
        let want = bessel_series_coefficients(alpha, nu, k as f64, 10);
        for (m, w) in want.iter().enumerate() {
            let got = e.coefficient(m as f64 * step, 0).map_or(Complex64::new(0.0, 0.0), |v| v[idx]);
            assert!(
                (got - w).norm() <= 1e-10 * w.norm(),
                "alpha={alpha} n={n} c={c} {root:?} k={k} m={m}: {got} vs {w}"
            );
        }
    }
}

#[test]
fn matches_bessel_series_on_examples() {
    check_against_bessel(1.0, 1, 0.0, Root::Plus);
    check_against_bessel(0.5, 1, 0.0, Root::Plus);
    check_against_bessel(0.5, 1, 0.0, Root::Minus);
    check_against_bessel(1.0, 1, 1.0, Root::Plus);
    check_against_bessel(1.0, 1, 1.0, Root::Minus);
    check_against_bessel(2.0, 2, 0.3, Root::Plus);
}

fn arb_params() -> impl Strategy<Value = (f64, u32, f64)> {
    (-0.6..3.0f64, 1u32..4, -0.5..2.0f64)
}

fn near_integer(v: f64) -> bool {
    (v - v.round()).abs() < 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bessel_oracle_random((alpha, n, c) in arb_params()) {
        let params = GrushinParams::new(alpha, n, c).unwrap();
        let data = flat_model_series_data(&params, 0);
        let mu = data.indicial.mu;
        check_against_bessel(alpha, n, c, Root::Plus);
        if (mu <= 0.0 || !near_integer(mu.sqrt() / (2.0 * (1.0 + alpha)))) && mu != 0.0 {
            check_against_bessel(alpha, n, c, Root::Minus);
        }
    }

    #[test]
    fn linear_in_seed(
        (alpha, n, c) in arb_params(),
        s1 in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5),
        s2 in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5),
        t in -2.0..2.0f64,
    ) {
        let params = GrushinParams::new(alpha, n.min(1), c).unwrap();
        let data = flat_model_series_data(&params, 2);
        let u: Vec<Complex64> = s1.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let v: Vec<Complex64> = s2.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let w: Vec<Complex64> = u.iter().zip(&v).map(|(a, b)| a + b * t).collect();
        prop_assume!(w.iter().any(|z| z.norm() > 1e-3));
        let cutoff = 6.0;
        let eu = expand(&data, Root::Plus, &u, cutoff).unwrap();
        let ev = expand(&data, Root::Plus, &v, cutoff).unwrap();
        let ew = expand(&data, Root::Plus, &w, cutoff).unwrap();
        for term in &ew.terms {
            let cu = eu.coefficient(term.grade, term.log_power).map(<[_]>::to_vec).unwrap_or(vec![Complex64::new(0.0, 0.0); 5]);
            let cv = ev.coefficient(term.grade, term.log_power).map(<[_]>::to_vec).unwrap_or(vec![Complex64::new(0.0, 0.0); 5]);
            for i in 0..5 {
                let expect = cu[i] + cv[i] * t;
                prop_assert!((term.coefficients[i] - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
            }
        }
    }

    #[test]
    fn single_mode_stays_single((alpha, n, c) in arb_params(), pick in 0usize..13) {
        let params = GrushinParams::new(alpha, n.min(2), c).unwrap();
        let data = flat_model_series_data(&params, 2);
        let pick = pick % data.dim;
        let mut seed = vec![Complex64::new(0.0, 0.0); data.dim];
        seed[pick] = Complex64::new(1.0, 0.0);
        let e = expand(&data, Root::Plus, &seed, 8.0).unwrap();
        for term in &e.terms {
            for (i, v) in term.coefficients.iter().enumerate() {
                if i != pick {
                    prop_assert_eq!(*v, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn exponents_lie_in_lambda_plus_theta((alpha, n, c) in arb_params(), minus in any::<bool>()) {
        let params = GrushinParams::new(alpha, n, c).unwrap();
        let data = flat_model_series_data(&params, 1);
        let root = if minus { Root::Minus } else { Root::Plus };
        let seed = data.mode_seed(&{ let mut m = vec![0i64; n as usize]; m[0] = 1; m }).unwrap();
        let cutoff = 7.0;
        let e = expand(&data, root, &seed, cutoff).unwrap();
        let lattice = theta_lattice(alpha, cutoff).unwrap();
        for x in e.exponents() {
            let grade = x - e.lambda;
            prop_assert!(grade.im.abs() < 1e-12);
            prop_assert!(lattice.contains(grade.re, 1e-9).is_some(), "grade {} not in Θ", grade.re);
        }
    }

    #[test]
    fn certificate_meets_contract((alpha, n, c) in arb_params(), k in 1i64..4) {
        let params = GrushinParams::new(alpha, n, c).unwrap();
        let data = flat_model_series_data(&params, 3);
        let mut mode = vec![0i64; n as usize];
        mode[0] = k;
        let seed = data.mode_seed(&mode).unwrap();
        let e = expand(&data, Root::Plus, &seed, 3.0 * (1.0 + alpha)).unwrap();
        let cert = residual_certificate(&e, &data, &log_grid(0.005, 0.05, 12)).unwrap();
        prop_assert!(cert.exponent >= cert.predicted - 0.05, "{:?}", cert);
        prop_assert!((cert.exponent - cert.predicted).abs() <= 0.05 * cert.predicted.abs().max(1.0), "{:?}", cert);
    }
}
