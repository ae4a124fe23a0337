//! Per-mode half-line operators of the flat model and their deficiency
//! indices.
//!
//! After a Fourier transform in `y` and the unitary `u ↦ |x|^{αn/2}u`, each
//! mode of `Δ − cS` becomes `∂² − m²x^{2α} − A/x²` on `x > 0` with
//! `A = αn(αn+2)/4 − cαn(αn+α+2)`, and `A + 1/4 = μ/4`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::frobenius::{expand, Coupling, CouplingKind, FrobeniusExpansion, OperatorSeriesData};
use crate::matrix::CMatrix;
use crate::numerics::Rk45;
use crate::params::{is_critical_mu, GrushinParams, IndicialData, Root};
use crate::{Error, Result};

/// `∂² − m²x^{2α} − A/x²` on the half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOperator {
    pub params: GrushinParams,
    /// `|k|`.
    pub mode_strength: f64,
    /// Inverse-square coefficient `A`.
    pub inverse_square: f64,
}

impl ModeOperator {
    /// `ν² = A + 1/4`.
    pub fn nu_squared(&self) -> f64 {
        self.inverse_square + 0.25
    }

    /// `m²x^{2α} + A/x²`.
    pub fn potential(&self, x: f64) -> f64 {
        let m = self.mode_strength;
        m * m * libm::pow(x, 2.0 * self.params.alpha()) + self.inverse_square / (x * x)
    }

    /// Frobenius exponents `1/2 ± ν` at zero, larger real part first.
    pub fn exponents(&self) -> (Complex64, Complex64) {
        let ind = IndicialData::from_monic(-1.0, -self.inverse_square);
        (ind.lambda_plus, ind.lambda_minus)
    }
}

pub fn mode_operator(params: &GrushinParams, k: f64) -> ModeOperator {
    let an = params.alpha_n();
    ModeOperator {
        params: *params,
        mode_strength: k.abs(),
        inverse_square: an * (an + 2.0) / 4.0 - params.c() * params.curvature_weight(),
    }
}

/// Weyl alternative at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointClass {
    LimitCircle,
    /// `critical` marks `ν = 1`, i.e. `μ = 4`.
    LimitPoint {
        critical: bool,
    },
}

impl EndpointClass {
    pub fn is_limit_circle(&self) -> bool {
        matches!(self, EndpointClass::LimitCircle)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EndpointClass::LimitCircle => "limit_circle",
            EndpointClass::LimitPoint { critical: false } => "limit_point",
            EndpointClass::LimitPoint { critical: true } => "limit_point(critical)",
        }
    }
}

/// Limit circle iff `ν² < 1`; `ν² = 1` is limit point and flagged critical.
pub fn classify_endpoint_zero(op: &ModeOperator) -> EndpointClass {
    let mu = 4.0 * op.nu_squared();
    if is_critical_mu(mu) {
        EndpointClass::LimitPoint { critical: true }
    } else if mu < 4.0 {
        EndpointClass::LimitCircle
    } else {
        EndpointClass::LimitPoint { critical: false }
    }
}

/// Which deficiency space: `Plus` solves `(op − i)u = 0`, `Minus` solves `(op + i)u = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn i(self) -> Complex64 {
        match self {
            Sign::Plus => Complex64::new(0.0, 1.0),
            Sign::Minus => Complex64::new(0.0, -1.0),
        }
    }
}

/// Tunables of the shooting count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Frobenius start near the singular endpoint.
    pub x0: f64,
    /// Grade cutoff of the Frobenius starts.
    pub series_cutoff: f64,
    /// WKB action from the turning point at which integration starts.
    pub action: f64,
    pub rtol: f64,
    /// Relative size below which a Frobenius component counts as absent.
    pub negligible: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions { x0: 1e-3, series_cutoff: 10.0, action: 40.0, rtol: 1e-10, negligible: 1e-6 }
    }
}

/// Details of one shooting run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingReport {
    pub count: u32,
    /// Where the decaying solution was launched.
    pub x_start: f64,
    /// Components of the decaying solution along `x^{1/2+ν}` and `x^{1/2−ν}` at `x0`.
    pub components: (Complex64, Complex64),
    /// Relative size of the second component at `x0`.
    pub minus_weight: f64,
    /// Largest relative deviation of `u'/u` from the WKB prediction near the start.
    pub wkb_deviation: f64,
}

fn frobenius_data(op: &ModeOperator, sign: Sign) -> Result<OperatorSeriesData> {
    let alpha = op.params.alpha();
    let m2 = op.mode_strength * op.mode_strength;
    let mut couplings =
        vec![Coupling { grade: 2.0, kind: CouplingKind::Laplacian, matrix: CMatrix::from_diag(&[-sign.i()]) }];
    if m2 > 0.0 {
        couplings.push(Coupling {
            grade: 2.0 + 2.0 * alpha,
            kind: CouplingKind::Laplacian,
            matrix: CMatrix::from_real_diag(&[-m2]),
        });
    }
    OperatorSeriesData::new(alpha, 0.0, IndicialData::from_monic(-1.0, -op.inverse_square), 1, couplings)
}

/// Frobenius solutions of `(op ∓ i)u = 0` at zero, plus root first.
pub fn frobenius_starts(
    op: &ModeOperator,
    sign: Sign,
    cutoff: f64,
) -> Result<(FrobeniusExpansion, FrobeniusExpansion)> {
    let data = frobenius_data(op, sign)?;
    let one = [Complex64::new(1.0, 0.0)];
    Ok((expand(&data, Root::Plus, &one, cutoff)?, expand(&data, Root::Minus, &one, cutoff)?))
}

fn check_confining(op: &ModeOperator) -> Result<()> {
    if op.mode_strength == 0.0 && !(op.params.alpha() > 0.0) {
        return Err(Error::Unsupported(format!("mode strength 0 with alpha = {} is not confining", op.params.alpha())));
    }
    Ok(())
}

/// Point where `m²x^{2α} = 1`, or 1 when there is no such point.
fn turning_point(op: &ModeOperator) -> f64 {
    let (m, alpha) = (op.mode_strength, op.params.alpha());
    if m > 0.0 && alpha != 0.0 {
        libm::pow(m, -1.0 / alpha)
    } else {
        1.0
    }
}

/// Dimension of the solutions of `(op ∓ i)u = 0` on one half-line that decay
/// at infinity and are square integrable at zero: 0 or 1.
pub fn numeric_deficiency_count(op: &ModeOperator, sign: Sign) -> Result<u32> {
    Ok(shoot(op, sign, &ShootingOptions::default())?.count)
}

/// Launches the decaying solution from WKB data far out, integrates it back to
/// `x0` and splits it along the two Frobenius solutions there.
pub fn shoot(op: &ModeOperator, sign: Sign, opts: &ShootingOptions) -> Result<ShootingReport> {
    check_confining(op)?;
    let q = |x: f64| Complex64::new(op.potential(x), 0.0) + sign.i();
    let x_tp = turning_point(op);
    let x_max = (2.0 * x_tp).max(20.0);
    // Stop once the WKB action past the turning point reaches `opts.action`:
    // the growing solution is then suppressed by e^{−2·action}.
    let mut x_start = x_max;
    {
        let mut x = x_tp.max(opts.x0);
        let mut acc = 0.0;
        let dx = (x_max - x) / 4000.0;
        while x < x_max {
            acc += q(x + 0.5 * dx).sqrt().re * dx;
            x += dx;
            if acc >= opts.action {
                x_start = x;
                break;
            }
        }
    }
    let q0 = q(x_start);
    let h = 1e-6 * x_start;
    let dq = (q(x_start + h) - q(x_start - h)) / (2.0 * h);
    let slope0 = -q0.sqrt() - dq / (4.0 * q0);
    let y0 = [1.0, 0.0, slope0.re, slope0.im];
    let rhs = |x: f64, y: &[f64; 4]| {
        let qq = q(x);
        let u = Complex64::new(y[0], y[1]);
        let d2 = qq * u;
        [y[2], y[3], d2.re, d2.im]
    };
    let rk = Rk45 { rtol: opts.rtol, complex_pairs: true, ..Rk45::default() };
    let check_from = x_start - 0.1 * (x_start - opts.x0);
    let mut wkb_deviation: f64 = 0.0;
    let y = rk.integrate(rhs, x_start, y0, opts.x0, 1e-3 * x_start, |x, y| {
        if x >= check_from {
            let u = Complex64::new(y[0], y[1]);
            let du = Complex64::new(y[2], y[3]);
            let qq = q(x);
            let dq = (q(x * (1.0 + 1e-6)) - q(x * (1.0 - 1e-6))) / (2e-6 * x);
            let want = -qq.sqrt() - dq / (4.0 * qq);
            wkb_deviation = wkb_deviation.max(((du / u) - want).norm() / want.norm());
        }
        let size = libm::hypot(y[0], y[1]);
        if size > 1e100 {
            y.iter_mut().for_each(|v| *v /= size);
        }
    })?;
    if wkb_deviation > 0.05 {
        return Err(Error::NonConvergence(format!(
            "decaying solution left the WKB regime near x = {x_start} (deviation {wkb_deviation:.3})"
        )));
    }
    let u = Complex64::new(y[0], y[1]);
    let du = Complex64::new(y[2], y[3]);
    let (fp, fm) = frobenius_starts(op, sign, opts.series_cutoff)?;
    let (vp, dp) = fp.eval_with_derivative(opts.x0);
    let (vm, dm) = fm.eval_with_derivative(opts.x0);
    let (vp, dp, vm, dm) = (vp[0], dp[0], vm[0], dm[0]);
    let w = vp * dm - dp * vm;
    if w.norm() == 0.0 {
        return Err(Error::InternalConsistency("Frobenius starts are dependent".into()));
    }
    let c_plus = (u * dm - du * vm) / w;
    let c_minus = (vp * du - dp * u) / w;
    let minus_weight = (c_minus * vm).norm() / ((c_plus * vp).norm() + (c_minus * vm).norm());
    let (_, lm) = op.exponents();
    let minus_admissible = lm.re > -0.5;
    let count = if minus_admissible || minus_weight <= opts.negligible { 1 } else { 0 };
    Ok(ShootingReport { count, x_start, components: (c_plus, c_minus), minus_weight, wkb_deviation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeCount {
    pub k: u32,
    /// Totals over both half-lines.
    pub count_plus: u32,
    pub count_minus: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Zero,
    Finite(u64),
    Infinite,
}

impl Aggregate {
    pub fn as_str(&self) -> &'static str {
        match self {
            Aggregate::Zero => "zero",
            Aggregate::Finite(_) => "finite",
            Aggregate::Infinite => "infinite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyReport {
    pub per_mode: Vec<ModeCount>,
    pub classification_at_zero: EndpointClass,
    pub aggregate: Aggregate,
}

/// Modes sampled by [`aggregate_deficiency`]: `0..=k_max`, dropping `k = 0`
/// when it is not confining.
pub fn sampled_modes(params: &GrushinParams, k_max: u32) -> Vec<u32> {
    let first = if params.alpha() > 0.0 { 0 } else { 1 };
    (first..=k_max).collect()
}

/// Counts for one mode over both half-lines; the operator is even in `x`.
pub fn mode_count(params: &GrushinParams, k: u32) -> Result<ModeCount> {
    let op = mode_operator(params, k as f64);
    let plus = numeric_deficiency_count(&op, Sign::Plus)?;
    let minus = numeric_deficiency_count(&op, Sign::Minus)?;
    Ok(ModeCount { k, count_plus: 2 * plus, count_minus: 2 * minus })
}

/// Combines per-mode counts: infinite when every sampled mode contributes and
/// the endpoint is limit circle, zero when none does.
pub fn combine(per_mode: Vec<ModeCount>, class: EndpointClass) -> DeficiencyReport {
    let all = per_mode.iter().all(|m| m.count_plus > 0 && m.count_minus > 0);
    let none = per_mode.iter().all(|m| m.count_plus == 0 && m.count_minus == 0);
    let aggregate = if all && class.is_limit_circle() {
        Aggregate::Infinite
    } else if none {
        Aggregate::Zero
    } else {
        Aggregate::Finite(per_mode.iter().map(|m| m.count_plus as u64).sum())
    };
    DeficiencyReport { per_mode, classification_at_zero: class, aggregate }
}

pub fn aggregate_deficiency(params: &GrushinParams, k_max: u32) -> Result<DeficiencyReport> {
    if k_max < 1 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    let per_mode =
        sampled_modes(params, k_max).into_iter().map(|k| mode_count(params, k)).collect::<Result<Vec<_>>>()?;
    Ok(combine(per_mode, classify_endpoint_zero(&mode_operator(params, 1.0))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, n: u32, c: f64) -> GrushinParams {
        GrushinParams::new(a, n, c).unwrap()
    }

    #[test]
    fn mode_operator_examples() {
        let op = mode_operator(&p(1.0, 1, 0.0), 0.0);
        assert_eq!(op.inverse_square, 0.75);
        assert_eq!(op.mode_strength, 0.0);
        let op = mode_operator(&p(1.0, 1, 0.25), 1.0);
        assert_eq!(op.inverse_square, -0.25);
        assert_eq!(op.nu_squared(), 0.0);
        let op = mode_operator(&p(0.5, 1, 0.0), 2.0);
        assert_eq!(op.inverse_square, 5.0 / 16.0);
        assert_eq!(op.potential(1.0), 4.0 + 5.0 / 16.0);
    }

    #[test]
    fn endpoint_examples() {
        let c = |a| classify_endpoint_zero(&mode_operator(&p(a, 1, 0.0), 1.0));
        assert_eq!(c(1.0), EndpointClass::LimitPoint { critical: true });
        assert_eq!(c(0.5), EndpointClass::LimitCircle);
        assert_eq!(c(2.0), EndpointClass::LimitPoint { critical: false });
    }

    #[test]
    fn shooting_examples() {
        let count = |a, c| numeric_deficiency_count(&mode_operator(&p(a, 1, c), 1.0), Sign::Plus).unwrap();
        assert_eq!(count(0.5, 0.0), 1);
        assert_eq!(count(2.0, 0.0), 0);
        assert_eq!(count(1.0, 1.0), 1);
    }

    #[test]
    fn zero_mode_needs_confinement() {
        let op = mode_operator(&p(-0.5, 1, 0.0), 0.0);
        assert!(matches!(numeric_deficiency_count(&op, Sign::Plus), Err(Error::Unsupported(_))));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_deficiency(&p(0.5, 1, 0.0), 8).unwrap().aggregate, Aggregate::Infinite);
        assert_eq!(aggregate_deficiency(&p(2.0, 1, 0.0), 8).unwrap().aggregate, Aggregate::Zero);
        assert_eq!(aggregate_deficiency(&p(1.0, 1, 1.0 / 3.0), 8).unwrap().aggregate, Aggregate::Infinite);
    }
}
