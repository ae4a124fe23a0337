//! Graded Frobenius series for kernel elements near the singular set.
//!
//! After multiplying by `x²`, the operator on a truncated Fourier basis reads
//! `p(x∂ₓ) + Σ_θ x^θ R_θ(x∂ₓ)`, with `p` the indicial polynomial and each
//! `R_θ` a matrix coupling. The ansatz `u = Σ_φ (a_φ + b_φ log x) x^{λ+φ}`
//! turns this into a grade-by-grade recursion for the vectors `a_φ`, `b_φ`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::matrix::CMatrix;
use crate::numerics::fit_line;
use crate::params::{indicial_data, theta_lattice, GrushinParams, IndicialData, Root};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const GRADE_TOL: f64 = 1e-9;

/// How a coupling acts on `x^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// First-order term: `R(s) = s·M`.
    Divergence,
    /// Curvature term: `R(s) = −c·M`.
    Curvature,
    /// Tangential Laplacian term: `R(s) = M`.
    Laplacian,
}

/// One graded coefficient operator `x^θ R_θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub grade: f64,
    pub kind: CouplingKind,
    pub matrix: CMatrix,
}

impl Coupling {
    fn symbol(&self, s: Complex64, c: f64) -> Complex64 {
        match self.kind {
            CouplingKind::Divergence => s,
            CouplingKind::Curvature => Complex64::new(-c, 0.0),
            CouplingKind::Laplacian => Complex64::new(1.0, 0.0),
        }
    }

    fn symbol_derivative(&self) -> Complex64 {
        match self.kind {
            CouplingKind::Divergence => Complex64::new(1.0, 0.0),
            _ => ZERO,
        }
    }
}

/// Graded coefficients of the operator on a finite Fourier basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSeriesData {
    pub params: Option<GrushinParams>,
    /// Sets the grade lattice `(1+α)ℕ₀ + ℕ₀`.
    pub alpha: f64,
    /// Multiplies curvature couplings.
    pub c: f64,
    pub indicial: IndicialData,
    /// Fourier modes labelling the basis, when the basis is a torus basis.
    pub modes: Vec<Vec<i64>>,
    pub dim: usize,
    pub couplings: Vec<Coupling>,
    pub mode_cutoff: u32,
}

impl OperatorSeriesData {
    /// Operator data with a user-supplied indicial polynomial and couplings.
    pub fn new(alpha: f64, c: f64, indicial: IndicialData, dim: usize, couplings: Vec<Coupling>) -> Result<Self> {
        if !(alpha > -1.0) {
            return Err(Error::domain("alpha must exceed -1"));
        }
        for cp in &couplings {
            if !(cp.grade > 0.0) || !cp.grade.is_finite() {
                return Err(Error::domain(format!("coupling grade must be positive, got {}", cp.grade)));
            }
            if cp.matrix.rows() != dim || cp.matrix.cols() != dim {
                return Err(Error::domain("coupling matrix does not match the basis dimension"));
            }
        }
        Ok(OperatorSeriesData { params: None, alpha, c, indicial, modes: Vec::new(), dim, couplings, mode_cutoff: 0 })
    }

    /// Unit vector on the given torus mode.
    pub fn mode_seed(&self, k: &[i64]) -> Result<Vec<Complex64>> {
        let idx = self
            .modes
            .iter()
            .position(|m| m.as_slice() == k)
            .ok_or_else(|| Error::domain(format!("mode {k:?} is not in the basis")))?;
        let mut v = vec![ZERO; self.dim];
        v[idx] = Complex64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Torus modes with `|k| ≤ K`, ordered by `|k|²` and then as `0, 1, −1, 2, −2, …`
/// coordinatewise.
pub fn torus_modes(n: u32, k_max: u32) -> Vec<Vec<i64>> {
    let k = k_max as i64;
    let rank = |v: i64| if v > 0 { 2 * v - 1 } else { -2 * v };
    let mut out: Vec<Vec<i64>> = Vec::new();
    let mut cur = vec![-k; n as usize];
    if n == 0 {
        return vec![Vec::new()];
    }
    loop {
        if cur.iter().map(|v| v * v).sum::<i64>() <= k * k {
            out.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == cur.len() {
                out.sort_by_key(|m| {
                    (m.iter().map(|v| v * v).sum::<i64>(), m.iter().map(|&v| rank(v)).collect::<Vec<_>>())
                });
                return out;
            }
            if cur[i] < k {
                cur[i] += 1;
                break;
            }
            cur[i] = -k;
            i += 1;
        }
    }
}

/// Flat torus model: one Laplacian coupling at grade `2(1+α)` with symbol
/// `diag(−|k|²)`. The exact curvature term sits in the indicial polynomial.
pub fn flat_model_series_data(params: &GrushinParams, k_max: u32) -> OperatorSeriesData {
    let modes = torus_modes(params.n(), k_max);
    let diag: Vec<f64> = modes.iter().map(|m| -(m.iter().map(|v| v * v).sum::<i64>() as f64)).collect();
    OperatorSeriesData {
        params: Some(*params),
        alpha: params.alpha(),
        c: params.c(),
        indicial: indicial_data(params),
        dim: modes.len(),
        modes,
        couplings: vec![Coupling {
            grade: 2.0 * (1.0 + params.alpha()),
            kind: CouplingKind::Laplacian,
            matrix: CMatrix::from_real_diag(&diag),
        }],
        mode_cutoff: k_max,
    }
}

/// One term `coefficients · x^{λ+grade} (log x)^{log_power}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub grade: f64,
    pub log_power: u8,
    pub coefficients: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusExpansion {
    pub lambda: Complex64,
    pub root: Root,
    /// Sorted by `(grade, log_power)`; zero vectors are omitted except the seed.
    pub terms: Vec<Term>,
    pub order_cutoff: f64,
    /// Ratio of the first log coefficient to the seed, when log terms occur.
    pub log_constant: Option<Complex64>,
}

impl FrobeniusExpansion {
    /// Distinct exponents `λ + grade`, ascending.
    pub fn exponents(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::new();
        for t in &self.terms {
            let e = self.lambda + t.grade;
            if out.last().map_or(true, |l: &Complex64| (l - e).norm() > GRADE_TOL) {
                out.push(e);
            }
        }
        out
    }

    pub fn has_log_terms(&self) -> bool {
        self.terms.iter().any(|t| t.log_power > 0)
    }

    /// Coefficient vector at a grade, or `None` when absent.
    pub fn coefficient(&self, grade: f64, log_power: u8) -> Option<&[Complex64]> {
        self.terms
            .iter()
            .find(|t| t.log_power == log_power && (t.grade - grade).abs() <= GRADE_TOL * grade.max(1.0))
            .map(|t| t.coefficients.as_slice())
    }

    /// Evaluates the truncated series at `x > 0`.
    pub fn eval(&self, x: f64) -> Vec<Complex64> {
        let lx = libm::log(x);
        let dim = self.terms.first().map_or(0, |t| t.coefficients.len());
        let mut out = vec![ZERO; dim];
        for t in &self.terms {
            let w = ((self.lambda + t.grade) * lx).exp() * libm::pow(lx, t.log_power as f64);
            for (o, c) in out.iter_mut().zip(&t.coefficients) {
                *o += c * w;
            }
        }
        out
    }

    /// Value and `x`-derivative of the truncated series at `x > 0`.
    pub fn eval_with_derivative(&self, x: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let lx = libm::log(x);
        let dim = self.terms.first().map_or(0, |t| t.coefficients.len());
        let mut val = vec![ZERO; dim];
        let mut der = vec![ZERO; dim];
        for t in &self.terms {
            let s = self.lambda + t.grade;
            let w = (s * lx).exp();
            // d/dx [x^s log^p x] = x^{s−1}(s log^p x + p log^{p−1} x).
            let (v, d) = if t.log_power == 0 { (w, s * w / x) } else { (w * lx, (s * lx + 1.0) * w / x) };
            for i in 0..dim {
                val[i] += t.coefficients[i] * v;
                der[i] += t.coefficients[i] * d;
            }
        }
        (val, der)
    }
}

/// Options for [`expand_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandOptions {
    /// Enables the `log x` ansatz when a grade hits the other indicial root.
    pub log_handling: bool,
    /// The undetermined coefficient at the resonant grade; zero when `None`.
    pub resonant_coefficient: Option<Vec<Complex64>>,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        ExpandOptions { log_handling: true, resonant_coefficient: None }
    }
}

fn merge_grades(mut g: Vec<f64>) -> Vec<f64> {
    g.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(g.len());
    for v in g {
        match out.last() {
            Some(l) if (v - l).abs() <= GRADE_TOL * v.max(1.0) => {}
            _ => out.push(v),
        }
    }
    out
}

/// Grades up to `cutoff`: the lattice `Θ` together with every sum of coupling grades.
pub fn expansion_grades(data: &OperatorSeriesData, cutoff: f64) -> Result<Vec<f64>> {
    let mut reachable = vec![0.0];
    let mut queue = vec![0.0];
    while let Some(v) = queue.pop() {
        for cp in &data.couplings {
            let w = v + cp.grade;
            if w <= cutoff + GRADE_TOL * cutoff.max(1.0)
                && !reachable.iter().any(|x: &f64| (x - w).abs() <= GRADE_TOL * w.max(1.0))
            {
                reachable.push(w);
                queue.push(w);
            }
        }
        if reachable.len() > 100_000 {
            return Err(Error::domain("too many grades below the cutoff"));
        }
    }
    reachable.extend(theta_lattice(data.alpha, cutoff)?.values());
    Ok(merge_grades(reachable))
}

pub fn expand(data: &OperatorSeriesData, root: Root, seed: &[Complex64], cutoff: f64) -> Result<FrobeniusExpansion> {
    expand_with(data, root, seed, cutoff, &ExpandOptions::default())
}

/// Forcing `(F_a, F_b)` from lower grades onto grade `phi`.
fn forcing(
    data: &OperatorSeriesData,
    lambda: Complex64,
    grades: &[f64],
    a: &[Vec<Complex64>],
    b: &[Vec<Complex64>],
    upto: usize,
    phi: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut fa = vec![ZERO; data.dim];
    let mut fb = vec![ZERO; data.dim];
    for h in 0..upto {
        for cp in &data.couplings {
            if (grades[h] + cp.grade - phi).abs() > GRADE_TOL * phi.max(1.0) {
                continue;
            }
            let s = lambda + grades[h];
            let r = cp.symbol(s, data.c);
            let rd = cp.symbol_derivative();
            let ma = cp.matrix.mul_vec(&a[h]);
            let mb = cp.matrix.mul_vec(&b[h]);
            for i in 0..data.dim {
                fa[i] -= r * ma[i] + rd * mb[i];
                fb[i] -= r * mb[i];
            }
        }
    }
    (fa, fb)
}

fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// Solves `p(λ+φ)a_φ + p'(λ+φ)b_φ = F_a`, `p(λ+φ)b_φ = F_b` grade by grade.
pub fn expand_with(
    data: &OperatorSeriesData,
    root: Root,
    seed: &[Complex64],
    cutoff: f64,
    opts: &ExpandOptions,
) -> Result<FrobeniusExpansion> {
    if seed.len() != data.dim {
        return Err(Error::domain("seed does not match the basis dimension"));
    }
    if norm(seed) == 0.0 {
        return Err(Error::domain("seed must be nonzero"));
    }
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::domain("cutoff must be finite and >= 0"));
    }
    if let Some(v) = &opts.resonant_coefficient {
        if v.len() != data.dim {
            return Err(Error::domain("resonant coefficient does not match the basis dimension"));
        }
    }
    let ind = &data.indicial;
    let lambda = ind.root(root);
    let gap = ind.lambda_plus - ind.lambda_minus;
    // Grade at which λ₋ + φ meets λ₊; only real gaps can be hit.
    let resonant_grade = (root == Root::Minus && gap.im.abs() <= GRADE_TOL).then_some(gap.re);
    let grades = expansion_grades(data, cutoff)?;
    let mut a: Vec<Vec<Complex64>> = Vec::with_capacity(grades.len());
    let mut b: Vec<Vec<Complex64>> = Vec::with_capacity(grades.len());
    let mut log_constant = None;
    let resonant_choice = || opts.resonant_coefficient.clone().unwrap_or_else(|| vec![ZERO; data.dim]);

    for (g, &phi) in grades.iter().enumerate() {
        let s = lambda + phi;
        let p = ind.eval(s);
        let dp = ind.eval_derivative(s);
        let hits_root = resonant_grade.is_some_and(|r| (phi - r).abs() <= GRADE_TOL * r.max(1.0));
        if g == 0 {
            if hits_root {
                // Double root: u₋ = u₊ log x + Σ a_φ x^{λ+φ}.
                if !opts.log_handling {
                    return Err(Error::Resonant("double indicial root".into()));
                }
                log_constant = Some(Complex64::new(1.0, 0.0));
                a.push(resonant_choice());
                b.push(seed.to_vec());
            } else {
                a.push(seed.to_vec());
                b.push(vec![ZERO; data.dim]);
            }
            continue;
        }
        let (fa, fb) = forcing(data, lambda, &grades, &a, &b, g, phi);
        if hits_root {
            if !opts.log_handling {
                return Err(Error::Resonant(format!(
                    "grade {phi} reaches the other indicial root; enable log handling"
                )));
            }
            if norm(&fb) > 1e-10 * (1.0 + norm(&fa)) {
                return Err(Error::InternalConsistency("log forcing below the resonant grade".into()));
            }
            let bv: Vec<Complex64> = fa.iter().map(|v| v / dp).collect();
            log_constant = Some(seed_ratio(seed, &bv));
            a.push(resonant_choice());
            b.push(bv);
            continue;
        }
        if p.norm() <= 1e-12 * (1.0 + s.norm_sqr()) {
            return Err(Error::InternalConsistency(format!(
                "indicial polynomial vanishes at grade {phi} away from resonance"
            )));
        }
        let bv: Vec<Complex64> = fb.iter().map(|v| v / p).collect();
        let av: Vec<Complex64> = fa.iter().zip(&bv).map(|(f, bb)| (f - dp * bb) / p).collect();
        a.push(av);
        b.push(bv);
    }

    let mut terms = Vec::new();
    for (g, &phi) in grades.iter().enumerate() {
        if g == 0 || norm(&a[g]) > 0.0 {
            terms.push(Term { grade: phi, log_power: 0, coefficients: a[g].clone() });
        }
        if norm(&b[g]) > 0.0 {
            terms.push(Term { grade: phi, log_power: 1, coefficients: b[g].clone() });
        }
    }
    Ok(FrobeniusExpansion { lambda, root, terms, order_cutoff: cutoff, log_constant })
}

/// `b = C·seed`, read off at the largest seed entry.
fn seed_ratio(seed: &[Complex64], b: &[Complex64]) -> Complex64 {
    let idx = (0..seed.len()).max_by(|&i, &j| seed[i].norm().total_cmp(&seed[j].norm())).unwrap();
    b[idx] / seed[idx]
}

/// Grade-collected residual `L u_trunc = Σ_g x^{λ+g}(r_a + r_b log x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub lambda: Complex64,
    /// `(grade, r_a, r_b, scale)` where `scale` bounds the cancelling contributions.
    pub grades: Vec<(f64, Vec<Complex64>, Vec<Complex64>, f64)>,
}

impl ResidualSeries {
    pub fn norm_at(&self, x: f64) -> f64 {
        let lx = libm::log(x);
        let dim = self.grades.first().map_or(0, |g| g.1.len());
        let mut v = vec![ZERO; dim];
        for (g, ra, rb, _) in &self.grades {
            let w = ((self.lambda + g) * lx).exp();
            for i in 0..dim {
                v[i] += (ra[i] + rb[i] * lx) * w;
            }
        }
        norm(&v)
    }
}

/// Applies `p(x∂ₓ) + Σ x^θ R_θ(x∂ₓ)` to the truncated series term by term.
pub fn residual_series(exp: &FrobeniusExpansion, data: &OperatorSeriesData) -> ResidualSeries {
    let dim = data.dim;
    let mut out: Vec<(f64, Vec<Complex64>, Vec<Complex64>, f64)> = Vec::new();
    let mut add = |grade: f64, ra: Vec<Complex64>, rb: Vec<Complex64>, scale: f64| {
        if let Some(e) = out.iter_mut().find(|e| (e.0 - grade).abs() <= GRADE_TOL * grade.max(1.0)) {
            for i in 0..dim {
                e.1[i] += ra[i];
                e.2[i] += rb[i];
            }
            e.3 += scale;
        } else {
            out.push((grade, ra, rb, scale));
        }
    };
    for t in &exp.terms {
        let s = exp.lambda + t.grade;
        let p = data.indicial.eval(s);
        let dp = data.indicial.eval_derivative(s);
        let c = &t.coefficients;
        let mag = norm(c) * (p.norm() + dp.norm());
        if t.log_power == 0 {
            add(t.grade, c.iter().map(|v| v * p).collect(), vec![ZERO; dim], mag);
        } else {
            add(t.grade, c.iter().map(|v| v * dp).collect(), c.iter().map(|v| v * p).collect(), mag);
        }
        for cp in &data.couplings {
            let r = cp.symbol(s, data.c);
            let rd = cp.symbol_derivative();
            let mc = cp.matrix.mul_vec(c);
            let mag = norm(&mc) * (r.norm() + rd.norm());
            if t.log_power == 0 {
                add(t.grade + cp.grade, mc.iter().map(|v| v * r).collect(), vec![ZERO; dim], mag);
            } else {
                add(t.grade + cp.grade, mc.iter().map(|v| v * rd).collect(), mc.iter().map(|v| v * r).collect(), mag);
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    ResidualSeries { lambda: exp.lambda, grades: out }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCertificate {
    /// Fitted exponent `e` in `‖L u_trunc‖ ≈ x^e`; `+∞` for a vanishing residual.
    pub exponent: f64,
    /// Smallest grade above the cutoff carrying a nonzero residual coefficient.
    pub theta_next: Option<f64>,
    /// `Re λ + θ_next`.
    pub predicted: f64,
    pub log_corrected: bool,
    pub fit_rms: f64,
    /// Largest relative leftover at grades the recursion should cancel.
    pub cancellation_defect: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Log-spaced grid on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..n).map(|i| libm::exp(a + (b - a) * i as f64 / (n.max(2) - 1) as f64)).collect()
}

/// Fits the decay exponent of the operator residual of a truncated series and
/// checks it against `Re λ + θ_next`.
pub fn residual_certificate(
    exp: &FrobeniusExpansion,
    data: &OperatorSeriesData,
    x_grid: &[f64],
) -> Result<ResidualCertificate> {
    if x_grid.len() < 3 || x_grid.iter().any(|&x| !(x > 0.0 && x <= 0.5)) {
        return Err(Error::domain("x_grid needs at least 3 points in (0, 0.5]"));
    }
    let mut res = residual_series(exp, data);
    let cutoff = exp.order_cutoff + GRADE_TOL * exp.order_cutoff.max(1.0);
    // Grades up to the cutoff cancel exactly in exact arithmetic; drop what is
    // left at rounding level and keep anything larger so a wrong recursion
    // still shows up in the fit.
    let mut cancellation_defect: f64 = 0.0;
    for (g, ra, rb, scale) in res.grades.iter_mut() {
        if *g > cutoff {
            continue;
        }
        let rel = if *scale > 0.0 { (norm(ra) + norm(rb)) / *scale } else { 0.0 };
        cancellation_defect = cancellation_defect.max(rel);
        if rel <= 1e-12 {
            ra.iter_mut().chain(rb.iter_mut()).for_each(|v| *v = ZERO);
        }
    }
    let next = res.grades.iter().find(|(g, ra, rb, _)| *g > cutoff && (norm(ra) > 0.0 || norm(rb) > 0.0));
    let low_is_rounding = cancellation_defect <= 1e-12;
    let samples: Vec<(f64, f64)> = x_grid.iter().map(|&x| (x, res.norm_at(x))).collect();
    let Some((theta_next, _, rb_next, _)) = next else {
        if low_is_rounding {
            return Ok(ResidualCertificate {
                exponent: f64::INFINITY,
                theta_next: None,
                predicted: f64::INFINITY,
                log_corrected: false,
                fit_rms: 0.0,
                cancellation_defect,
                samples,
            });
        }
        return Err(Error::CertificateFailed(
            "residual does not cancel below the cutoff and has no higher grades".into(),
        ));
    };
    let theta_next = *theta_next;
    let log_corrected = norm(rb_next) > 0.0;
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(x, r) in &samples {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::CertificateFailed(format!("residual {r} at x = {x} is not a positive finite number")));
        }
        let lx = libm::log(x);
        xs.push(lx);
        ys.push(libm::log(r) - if log_corrected { libm::log(lx.abs()) } else { 0.0 });
    }
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::CertificateFailed("degenerate grid".into()))?;
    let predicted = exp.lambda.re + theta_next;
    if fit.rms > 0.25 {
        return Err(Error::CertificateFailed(format!(
            "residual is not a power law on the grid (rms {:.3}, slope {:.4}, predicted {predicted:.4})",
            fit.rms, fit.slope
        )));
    }
    if fit.slope < predicted - 0.05 {
        return Err(Error::CertificateFailed(format!(
            "fitted exponent {:.4} below predicted {predicted:.4}",
            fit.slope
        )));
    }
    Ok(ResidualCertificate {
        exponent: fit.slope,
        theta_next: Some(theta_next),
        predicted,
        log_corrected,
        fit_rms: fit.rms,
        cancellation_defect,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, n: u32, c: f64) -> GrushinParams {
        GrushinParams::new(a, n, c).unwrap()
    }

    fn close(a: Complex64, b: f64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn flat_data_examples() {
        let d = flat_model_series_data(&p(1.0, 1, 0.0), 3);
        assert_eq!(d.couplings.len(), 1);
        assert_eq!(d.couplings[0].grade, 4.0);
        let diag: Vec<f64> = (0..d.dim).map(|i| d.couplings[0].matrix[(i, i)].re).collect();
        assert_eq!(diag, [0.0, -1.0, -1.0, -4.0, -4.0, -9.0, -9.0]);
        assert_eq!(d.modes[1], [1]);
        assert_eq!(d.modes[2], [-1]);

        let d = flat_model_series_data(&p(0.5, 1, 0.0), 1);
        assert_eq!(d.couplings[0].grade, 3.0);

        let d = flat_model_series_data(&p(1.0, 2, 1.0), 1);
        assert_eq!(d.couplings.len(), 1);
        assert!(d.couplings[0].matrix.is_diagonal());
        assert_eq!(d.dim, 5);
    }

    #[test]
    fn plus_root_example() {
        let d = flat_model_series_data(&p(1.0, 1, 0.0), 3);
        for k in 1..=3i64 {
            let seed = d.mode_seed(&[k]).unwrap();
            let e = expand(&d, Root::Plus, &seed, 10.0).unwrap();
            let i = d.modes.iter().position(|m| m[0] == k).unwrap();
            let k2 = (k * k) as f64;
            assert!(close(e.coefficient(0.0, 0).unwrap()[i], 1.0, 1e-15));
            assert!(close(e.coefficient(4.0, 0).unwrap()[i], k2 / 24.0, 1e-14));
            // p(10) = 80.
            assert!(close(e.coefficient(8.0, 0).unwrap()[i], k2 * k2 / (24.0 * 80.0), 1e-14));
            assert!(!e.has_log_terms());
        }
    }

    #[test]
    fn minus_root_engages_log_branch() {
        let d = flat_model_series_data(&p(1.0, 1, 0.0), 1);
        let seed = d.mode_seed(&[1]).unwrap();
        let e = expand(&d, Root::Minus, &seed, 10.0).unwrap();
        assert_eq!(e.lambda, Complex64::new(0.0, 0.0));
        // The forcing at grade 2 vanishes, so C = 0 and no log term survives.
        assert_eq!(e.log_constant, Some(Complex64::new(0.0, 0.0)));
        assert!(close(e.coefficient(4.0, 0).unwrap()[1], 1.0 / 8.0, 1e-15));
        let strict = ExpandOptions { log_handling: false, ..ExpandOptions::default() };
        assert!(matches!(expand_with(&d, Root::Minus, &seed, 10.0, &strict), Err(Error::Resonant(_))));
    }

    #[test]
    fn zero_coupling_is_single_term() {
        let d = flat_model_series_data(&p(1.0, 1, 0.0), 0);
        let e = expand(&d, Root::Plus, &[Complex64::new(1.0, 0.0)], 10.0).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.lambda, Complex64::new(2.0, 0.0));
        let cert = residual_certificate(&e, &d, &log_grid(0.01, 0.1, 8)).unwrap();
        assert_eq!(cert.exponent, f64::INFINITY);
    }

    #[test]
    fn certificate_through_x6() {
        let d = flat_model_series_data(&p(1.0, 1, 0.0), 1);
        let seed = d.mode_seed(&[1]).unwrap();
        let e = expand(&d, Root::Plus, &seed, 6.0).unwrap();
        let cert = residual_certificate(&e, &d, &log_grid(0.01, 0.2, 12)).unwrap();
        assert_eq!(cert.theta_next, Some(8.0));
        assert!((cert.exponent - 10.0).abs() < 0.01, "{cert:?}");
    }

    #[test]
    fn double_root_uses_unit_log_constant() {
        // α = n = 1, c = 1/4: μ = 0, λ = 1 twice.
        let d = flat_model_series_data(&p(1.0, 1, 0.25), 1);
        let seed = d.mode_seed(&[1]).unwrap();
        let e = expand(&d, Root::Minus, &seed, 8.0).unwrap();
        assert_eq!(e.log_constant, Some(Complex64::new(1.0, 0.0)));
        assert_eq!(e.coefficient(0.0, 1).unwrap(), seed.as_slice());
        let cert = residual_certificate(&e, &d, &log_grid(0.01, 0.2, 12)).unwrap();
        assert!(cert.log_corrected);
        assert!((cert.exponent - cert.predicted).abs() < 0.05 * cert.predicted, "{cert:?}");
    }

    #[test]
    fn genuine_log_term_for_integer_order() {
        // α = n = 1: μ = 4 − 16c, so c = −3/4 gives √μ = 4 and λ± = 3, −1.
        let d = flat_model_series_data(&p(1.0, 1, -0.75), 1);
        let seed = d.mode_seed(&[1]).unwrap();
        let e = expand(&d, Root::Minus, &seed, 9.0).unwrap();
        let c = e.log_constant.unwrap();
        // b₄ = k²·a₀ / p'(λ₊) with λ₊ = 3: p'(3) = 2·3 − 2 = 4.
        assert!(close(c, 0.25, 1e-14), "{c}");
        let cert = residual_certificate(&e, &d, &log_grid(0.01, 0.2, 12)).unwrap();
        assert!(cert.exponent >= cert.predicted - 0.05);
    }

    #[test]
    fn torus_mode_order() {
        let m = torus_modes(2, 1);
        assert_eq!(m, vec![vec![0, 0], vec![0, 1], vec![0, -1], vec![1, 0], vec![-1, 0]]);
    }
}
