//! Small numerical kernels shared by the modules: log-Γ, Gauss–Legendre
//! rules, an embedded Runge–Kutta 5(4) integrator, least-squares line fits and
//! Richardson extrapolation.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const PI: f64 = core::f64::consts::PI;

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln Γ(z)` for complex `z` off the non-positive real axis.
///
/// Stirling series after shifting `Re z` up to at least 15. The imaginary
/// part is only defined modulo 2π, which is all callers need.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    const B: [f64; 7] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0];
    let mut w = z;
    let mut prod = Complex64::new(1.0, 0.0);
    let mut shift_log = Complex64::new(0.0, 0.0);
    while w.norm() < 15.0 || w.re < 15.0 {
        prod *= w;
        if prod.norm() > 1e200 {
            shift_log += prod.ln();
            prod = Complex64::new(1.0, 0.0);
        }
        w += 1.0;
    }
    shift_log += prod.ln();
    let half_ln_2pi = 0.918_938_533_204_672_8;
    let mut s = (w - 0.5) * w.ln() - w + half_ln_2pi;
    let w2 = w * w;
    let mut wp = w;
    for (k, b) in B.iter().enumerate() {
        let k = (k + 1) as f64;
        s += *b / (2.0 * k * (2.0 * k - 1.0)) / wp;
        wp *= w2;
    }
    s - shift_log
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Least-squares fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - intercept - slope * x;
        ss += r * r;
    }
    let dof = if n > 2 { nf - 2.0 } else { 1.0 };
    Some(LineFit { slope, intercept, slope_stderr: libm::sqrt(ss / dof / sxx), rms: libm::sqrt(ss / nf) })
}

/// Richardson extrapolation to `h → 0` of values `f(h_k)` whose error
/// expands in powers `h^{p_1}, h^{p_2}, …` given by `powers`.
///
/// Returns the extrapolated value and the spread of the last two table
/// diagonals as an error estimate.
pub fn richardson(hs: &[f64], fs: &[Complex64], powers: &[f64]) -> (Complex64, f64) {
    let m = hs.len().min(fs.len());
    let mut table: Vec<Complex64> = fs[..m].to_vec();
    let mut prev_best = table[m - 1];
    let mut best = table[m - 1];
    for p in powers {
        if table.len() < 2 {
            break;
        }
        let mut next = Vec::with_capacity(table.len() - 1);
        for k in 0..table.len() - 1 {
            let r = libm::pow(hs[k + 1] / hs[k], *p);
            next.push((table[k + 1] - table[k] * r) / (1.0 - r));
        }
        prev_best = best;
        best = *next.last().unwrap();
        table = next;
    }
    (best, (best - prev_best).norm())
}

/// Embedded Dormand–Prince 5(4) integrator for real systems of fixed size.
#[derive(Debug, Clone, Copy)]
pub struct Rk45 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Treat components `(2j, 2j+1)` as the real and imaginary parts of one
    /// complex unknown when scaling the error.
    pub complex_pairs: bool,
}

impl Default for Rk45 {
    fn default() -> Self {
        Rk45 { rtol: 1e-10, atol: 1e-300, max_steps: 2_000_000, complex_pairs: false }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Rk45 {
    /// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
    ///
    /// After every accepted step `observe(x, &mut y)` is called; it may
    /// rescale `y` (the system is assumed linear by callers that do so).
    pub fn integrate<const N: usize>(
        &self,
        mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
        x0: f64,
        y0: [f64; N],
        x1: f64,
        h0: f64,
        mut observe: impl FnMut(f64, &mut [f64; N]),
    ) -> Result<[f64; N]> {
        let dir = if x1 >= x0 { 1.0 } else { -1.0 };
        let span = (x1 - x0).abs();
        let mut h = h0.abs().min(span).max(span * 1e-14) * dir;
        let mut x = x0;
        let mut y = y0;
        let mut k1 = f(x, &y);
        let mut steps = 0;
        while (x1 - x) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(Error::NonConvergence(alloc::format!("Runge–Kutta step budget exhausted at x = {x}")));
            }
            steps += 1;
            if (x + h - x1) * dir > 0.0 {
                h = x1 - x;
            }
            let add = |y: &[f64; N], terms: &[(f64, &[f64; N])]| {
                let mut out = *y;
                for i in 0..N {
                    let mut s = 0.0;
                    for (c, k) in terms {
                        s += c * k[i];
                    }
                    out[i] += h * s;
                }
                out
            };
            let k2 = f(x + h / 5.0, &add(&y, &[(A21, &k1)]));
            let k3 = f(x + 0.3 * h, &add(&y, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + 0.8 * h, &add(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(x + 8.0 / 9.0 * h, &add(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(x + h, &add(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y5 = add(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(x + h, &y5);
            let mut err = 0.0f64;
            for i in 0..N {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let mag = |v: &[f64; N]| {
                    if self.complex_pairs && (i ^ 1) < N {
                        libm::hypot(v[i], v[i ^ 1])
                    } else {
                        v[i].abs()
                    }
                };
                let sc = self.atol + self.rtol * mag(&y).max(mag(&y5));
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                h *= 0.1;
                continue;
            }
            if err <= 1.0 {
                x += h;
                y = y5;
                k1 = k7;
                let before = y;
                observe(x, &mut y);
                if y != before {
                    k1 = f(x, &y);
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
            h *= fac;
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_ln_gamma_matches_real_on_axis() {
        for &x in &[0.3, 1.0, 2.5, 7.25, 30.0] {
            let z = ln_gamma_complex(Complex64::new(x, 0.0));
            assert!((z.re - ln_gamma(x)).abs() < 1e-13 * ln_gamma(x).abs().max(1.0));
        }
    }

    #[test]
    fn complex_gamma_modulus_on_imaginary_axis() {
        // |Γ(1 + iy)|² = πy / sinh(πy)
        for &y in &[0.1, 1.0, 3.0, 10.0] {
            let g = ln_gamma_complex(Complex64::new(1.0, y)).exp();
            let exact = PI * y / libm::sinh(PI * y);
            assert!((g.norm_sqr() / exact - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, 14.0)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn rk45_exponential() {
        let rk = Rk45::default();
        let y = rk.integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, 0.1, |_, _| {}).unwrap();
        assert!((y[0] / libm::exp(2.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn richardson_removes_leading_orders() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let fs: Vec<Complex64> = hs.iter().map(|h| Complex64::new(1.0 + 3.0 * h + 2.0 * h * h, 0.0)).collect();
        let (v, _) = richardson(&hs, &fs, &[1.0, 2.0]);
        assert!((v.re - 1.0).abs() < 1e-12);
    }
}
