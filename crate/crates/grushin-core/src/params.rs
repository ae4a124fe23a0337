//! Grushin parameters, indicial data, the Θ lattice and the classifier.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance used to decide `μ = 4`.
pub const MU4_REL_TOL: f64 = 1e-9;
/// Absolute tolerance below which two Θ values are identified.
pub const THETA_MERGE_TOL: f64 = 1e-12;

/// The triple `(α, n, c)`: degeneration order, dimension of the singular set
/// and curvature coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrushinParams {
    alpha: f64,
    n: u32,
    c: f64,
}

impl GrushinParams {
    pub fn new(alpha: f64, n: u32, c: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= -1.0 {
            return Err(Error::domain(format!("alpha must be finite and > -1, got {alpha}")));
        }
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !c.is_finite() {
            return Err(Error::domain("c must be finite"));
        }
        Ok(GrushinParams { alpha, n, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `αn`, the exponent of the volume density `|x|^{-αn}`.
    pub fn alpha_n(&self) -> f64 {
        self.alpha * self.n as f64
    }

    /// `αn(αn + α + 2)`, minus the coefficient of `x^{-2}` in the flat-model
    /// scalar curvature.
    pub fn curvature_weight(&self) -> f64 {
        let an = self.alpha_n();
        an * (an + self.alpha + 2.0)
    }
}

/// Which formula for the discriminant to use.
///
/// `Derived` is `(1+αn)² − 4cαn(αn+α+2)`, the discriminant of the indicial
/// polynomial. `FlippedCoupling` is `(1+αn)² + 4cαn(αn+α+2)`, a sign
/// variant that circulates in the literature; it is kept for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuConvention {
    #[default]
    Derived,
    FlippedCoupling,
}

/// Coefficients, discriminant and roots of the indicial polynomial
/// `p(λ) = λ² − (1+αn)λ + cαn(αn+α+2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicialData {
    /// Monic coefficients `(1, p₁, p₀)` of `λ² + p₁λ + p₀`.
    pub p_coeffs: [f64; 3],
    pub mu: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
}

impl IndicialData {
    /// Roots and discriminant of `λ² + p₁λ + p₀`.
    pub fn from_monic(p1: f64, p0: f64) -> IndicialData {
        let (b, q) = (-p1, p0);
        let mu = b * b - 4.0 * q;
        if mu < 0.0 {
            let im = 0.5 * libm::sqrt(-mu);
            return IndicialData {
                p_coeffs: [1.0, p1, p0],
                mu,
                lambda_plus: Complex64::new(0.5 * b, im),
                lambda_minus: Complex64::new(0.5 * b, -im),
            };
        }
        let s = libm::sqrt(mu);
        // Stable quadratic formula: form the larger-magnitude root directly
        // and recover the other from the product.
        let big = 0.5 * (b + libm::copysign(s, b));
        let small = if big != 0.0 { q / big } else { 0.5 * (b - s) };
        let (plus, minus) = if big >= small { (big, small) } else { (small, big) };
        IndicialData {
            p_coeffs: [1.0, p1, p0],
            mu,
            lambda_plus: Complex64::new(plus, 0.0),
            lambda_minus: Complex64::new(minus, 0.0),
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        s * s + s * self.p_coeffs[1] + self.p_coeffs[2]
    }

    pub fn eval_derivative(&self, s: Complex64) -> Complex64 {
        s * 2.0 + self.p_coeffs[1]
    }

    /// Principal square root of μ (imaginary for μ < 0).
    pub fn sqrt_mu(&self) -> Complex64 {
        Complex64::new(self.mu, 0.0).sqrt()
    }

    pub fn root(&self, which: Root) -> Complex64 {
        match which {
            Root::Plus => self.lambda_plus,
            Root::Minus => self.lambda_minus,
        }
    }
}

/// Selects one of the two indicial roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Root {
    Plus,
    Minus,
}

pub fn indicial_data(params: &GrushinParams) -> IndicialData {
    indicial_data_with(params, MuConvention::Derived)
}

pub fn indicial_data_with(params: &GrushinParams, convention: MuConvention) -> IndicialData {
    let b = 1.0 + params.alpha_n();
    let q = match convention {
        MuConvention::Derived => params.c * params.curvature_weight(),
        MuConvention::FlippedCoupling => -params.c * params.curvature_weight(),
    };
    IndicialData::from_monic(-b, q)
}

pub fn is_critical_mu(mu: f64) -> bool {
    (mu - 4.0).abs() < MU4_REL_TOL * mu.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    EssentiallySelfAdjoint,
    NotEsaInfiniteDeficiency,
    CriticalMu4Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::EssentiallySelfAdjoint => "EssentiallySelfAdjoint",
            Verdict::NotEsaInfiniteDeficiency => "NotESA_InfiniteDeficiency",
            Verdict::CriticalMu4Indeterminate => "Critical_Mu4_Indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    MuNeg,
    MuIn0To4,
    MuEq4,
    MuGt4,
}

impl Regime {
    pub fn of(mu: f64) -> Regime {
        if is_critical_mu(mu) {
            Regime::MuEq4
        } else if mu > 4.0 {
            Regime::MuGt4
        } else if mu >= 0.0 {
            Regime::MuIn0To4
        } else {
            Regime::MuNeg
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::MuNeg => "mu_neg",
            Regime::MuIn0To4 => "mu_in_0_4",
            Regime::MuEq4 => "mu_eq_4",
            Regime::MuGt4 => "mu_gt_4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfAdjointnessVerdict {
    pub verdict: Verdict,
    pub mu: f64,
    pub regime: Regime,
    /// Whether `λ₊ − λ₋ = √μ` lies in Θ.
    pub resonant: bool,
}

/// Essential self-adjointness holds iff `μ > 4`; `μ = 4` is left undecided.
pub fn classify(params: &GrushinParams) -> SelfAdjointnessVerdict {
    let data = indicial_data(params);
    let regime = Regime::of(data.mu);
    let verdict = match regime {
        Regime::MuEq4 => Verdict::CriticalMu4Indeterminate,
        Regime::MuGt4 => Verdict::EssentiallySelfAdjoint,
        Regime::MuNeg | Regime::MuIn0To4 => Verdict::NotEsaInfiniteDeficiency,
    };
    let resonant = if data.mu >= 0.0 {
        let cutoff = libm::sqrt(data.mu) + 1.0;
        resonance(params, cutoff).is_some()
    } else {
        false
    };
    SelfAdjointnessVerdict { verdict, mu: data.mu, regime, resonant }
}

/// The coupling `c₀(α, n)` at which `μ = 4`.
pub fn forbidden_c(alpha: f64, n: u32) -> Result<f64> {
    if alpha == 0.0 {
        return Err(Error::SingularFormula("c0 is undefined for alpha = 0: there is no curvature coupling".into()));
    }
    if alpha <= -1.0 || n == 0 {
        return Err(Error::domain("forbidden_c requires alpha > -1 and n >= 1"));
    }
    let nf = n as f64;
    let an = alpha * nf;
    let denom = 4.0 * nf * alpha * (2.0 + alpha + an);
    if denom == 0.0 {
        return Err(Error::SingularFormula(format!("denominator 4nα(2+α+αn) vanishes at alpha = {alpha}, n = {n}")));
    }
    Ok((-3.0 + 2.0 * an + an * an) / denom)
}

/// One element of the Θ lattice with its minimal witness `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaElement {
    pub value: f64,
    pub i: u32,
    pub j: u32,
}

/// `Θ = {(1+α)i + j : i, j ∈ ℕ₀}` truncated at `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaLattice {
    pub alpha: f64,
    pub cutoff: f64,
    pub elements: Vec<ThetaElement>,
}

fn witness_order(a: &ThetaElement, b: &ThetaElement) -> core::cmp::Ordering {
    (a.i + a.j, a.i).cmp(&(b.i + b.j, b.i))
}

pub fn theta_lattice(alpha: f64, cutoff: f64) -> Result<ThetaLattice> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(Error::domain("theta_lattice requires alpha > -1"));
    }
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::domain(format!("cutoff must be finite and >= 0, got {cutoff}")));
    }
    let step = 1.0 + alpha;
    let imax = libm::ceil(cutoff / step) as u32;
    let jmax = libm::ceil(cutoff) as u32;
    let mut raw = Vec::new();
    for i in 0..=imax {
        for j in 0..=jmax {
            let value = step * i as f64 + j as f64;
            if value <= cutoff + THETA_MERGE_TOL {
                raw.push(ThetaElement { value, i, j });
            }
        }
    }
    raw.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| witness_order(a, b)));
    let mut elements: Vec<ThetaElement> = Vec::with_capacity(raw.len());
    for e in raw {
        match elements.last_mut() {
            Some(last) if (e.value - last.value).abs() <= THETA_MERGE_TOL => {
                if witness_order(&e, last).is_lt() {
                    last.i = e.i;
                    last.j = e.j;
                }
            }
            _ => elements.push(e),
        }
    }
    Ok(ThetaLattice { alpha, cutoff, elements })
}

/// Θ for rational `α = num/den`, merged by exact integer comparison.
pub fn theta_lattice_rational(num: i64, den: u64, cutoff: f64) -> Result<ThetaLattice> {
    if den == 0 {
        return Err(Error::domain("zero denominator"));
    }
    let d = den as i64;
    let step_num = num + d;
    if step_num <= 0 {
        return Err(Error::domain("theta_lattice requires alpha > -1"));
    }
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::domain(format!("cutoff must be finite and >= 0, got {cutoff}")));
    }
    let alpha = num as f64 / den as f64;
    // Numerators over the common denominator `den`.
    let limit = libm::floor(cutoff * den as f64 + 1e-9) as i64;
    let mut raw: Vec<(i64, ThetaElement)> = Vec::new();
    let mut i: i64 = 0;
    while i * step_num <= limit {
        let mut j: i64 = 0;
        while i * step_num + j * d <= limit {
            let key = i * step_num + j * d;
            raw.push((key, ThetaElement { value: key as f64 / den as f64, i: i as u32, j: j as u32 }));
            j += 1;
        }
        i += 1;
    }
    raw.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| witness_order(&a.1, &b.1)));
    let mut elements: Vec<ThetaElement> = Vec::new();
    let mut last_key = None;
    for (key, e) in raw {
        if last_key != Some(key) {
            elements.push(e);
            last_key = Some(key);
        }
    }
    Ok(ThetaLattice { alpha, cutoff, elements })
}

impl ThetaLattice {
    pub fn values(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.value).collect()
    }

    /// Index of the element equal to `value` within `tol`.
    pub fn position(&self, value: f64, tol: f64) -> Option<usize> {
        let idx = self.elements.partition_point(|e| e.value < value - tol);
        let e = self.elements.get(idx)?;
        ((e.value - value).abs() <= tol).then_some(idx)
    }

    pub fn contains(&self, value: f64, tol: f64) -> Option<(u32, u32)> {
        self.position(value, tol).map(|k| (self.elements[k].i, self.elements[k].j))
    }
}

/// Checks whether `√μ ∈ Θ`, returning the witness. Always `None` for `μ < 0`.
pub fn resonance(params: &GrushinParams, cutoff: f64) -> Option<(u32, u32)> {
    let data = indicial_data(params);
    if data.mu < 0.0 {
        return None;
    }
    let gap = libm::sqrt(data.mu);
    let lattice = theta_lattice(params.alpha, cutoff.max(gap) + 1.0).ok()?;
    lattice.contains(gap, 1e-9 * gap.max(1.0))
}

/// Hypotheses attached to the `0 < μ < 4` extension construction, reported
/// side by side: the excluded value `μ = 2` as stated, and the resonance
/// condition `√μ ∈ Θ` that the series construction actually depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositiveRegimeHypotheses {
    pub mu_in_open_0_4: bool,
    pub mu_not_two: bool,
    pub resonant: bool,
}

pub fn positive_regime_hypotheses(params: &GrushinParams) -> PositiveRegimeHypotheses {
    let mu = indicial_data(params).mu;
    PositiveRegimeHypotheses {
        mu_in_open_0_4: mu > 0.0 && mu < 4.0 && !is_critical_mu(mu),
        mu_not_two: (mu - 2.0).abs() > 1e-12 * mu.abs().max(1.0),
        resonant: resonance(params, 4.0).is_some(),
    }
}
