//! Boundary jets, asymmetry forms and self-adjoint extensions defined by
//! 2×2 unitaries acting on the right/left boundary coefficients of each mode.
//!
//! Inner products are linear in the first argument, `⟨a, b⟩ = Σ a·b̄`, and
//! the asymmetry form is `ω(u, v) = (u, A*v) − (A*u, v)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::frobenius::{expand, Coupling, CouplingKind, FrobeniusExpansion, OperatorSeriesData};
use crate::matrix::CMatrix;
use crate::numerics::richardson;
use crate::params::{indicial_data, theta_lattice, GrushinParams, Root};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const RIGHT: usize = 0;
const LEFT: usize = 1;

/// Leading boundary coefficients of one Fourier mode, indexed `[right, left]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeJet {
    pub mode: Vec<i64>,
    pub a_plus: [Complex64; 2],
    pub a_minus: [Complex64; 2],
}

impl ModeJet {
    pub fn new(mode: Vec<i64>, a_plus: [Complex64; 2], a_minus: [Complex64; 2]) -> Self {
        ModeJet { mode, a_plus, a_minus }
    }

    /// `A₁ = a₊ + i a₋`.
    pub fn a1(&self) -> [Complex64; 2] {
        [self.a_plus[0] + I * self.a_minus[0], self.a_plus[1] + I * self.a_minus[1]]
    }

    /// `A₂ = a₊ − i a₋`.
    pub fn a2(&self) -> [Complex64; 2] {
        [self.a_plus[0] - I * self.a_minus[0], self.a_plus[1] - I * self.a_minus[1]]
    }

    /// Inverse of `(a₊, a₋) ↦ (A₁, A₂)`.
    pub fn from_a_variables(mode: Vec<i64>, a1: [Complex64; 2], a2: [Complex64; 2]) -> Self {
        let plus = [(a1[0] + a2[0]) * 0.5, (a1[1] + a2[1]) * 0.5];
        let minus = [(a1[0] - a2[0]) / (2.0 * I), (a1[1] - a2[1]) / (2.0 * I)];
        ModeJet::new(mode, plus, minus)
    }

    fn scale(&self) -> f64 {
        libm::sqrt(self.a_plus.iter().chain(&self.a_minus).map(|z| z.norm_sqr()).sum::<f64>())
    }
}

/// Boundary data of an element of `D_max/D_min`, truncated to finitely many modes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryJet {
    pub modes: Vec<ModeJet>,
}

impl BoundaryJet {
    pub fn new(modes: Vec<ModeJet>) -> Self {
        BoundaryJet { modes }
    }

    pub fn single(jet: ModeJet) -> Self {
        BoundaryJet { modes: vec![jet] }
    }

    pub fn mode_cutoff(&self) -> i64 {
        self.modes.iter().flat_map(|m| m.mode.iter().map(|v| v.abs())).max().unwrap_or(0)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.modes.iter().map(|m| m.scale() * m.scale()).sum::<f64>())
    }
}

/// Which closed form of the asymmetry form applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormRegime {
    /// `μ < 0`: oscillating exponents.
    MuNeg,
    /// `0 < μ < 4`: two real exponents, both square integrable.
    MuPos,
}

impl FormRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormRegime::MuNeg => "mu_neg",
            FormRegime::MuPos => "mu_pos",
        }
    }
}

pub fn form_regime(params: &GrushinParams) -> Result<FormRegime> {
    let mu = indicial_data(params).mu;
    if mu < 0.0 {
        Ok(FormRegime::MuNeg)
    } else if mu > 0.0 && mu < 4.0 && !crate::params::is_critical_mu(mu) {
        Ok(FormRegime::MuPos)
    } else {
        Err(Error::domain(format!("no boundary form for mu = {mu}: need mu < 0 or 0 < mu < 4")))
    }
}

fn inner(a: &[Complex64; 2], b: &[Complex64; 2]) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj()
}

fn paired<'a>(u: &'a BoundaryJet, v: &'a BoundaryJet) -> Result<Vec<(&'a ModeJet, &'a ModeJet)>> {
    if u.modes.len() != v.modes.len() || u.modes.iter().zip(&v.modes).any(|(a, b)| a.mode != b.mode) {
        return Err(Error::domain("jets must carry the same modes in the same order"));
    }
    Ok(u.modes.iter().zip(&v.modes).collect())
}

/// Closed form of `ω(u, v)`.
///
/// `MuNeg`: `i√|μ| Σ_k (⟨a₊,b₊⟩ − ⟨a₋,b₋⟩)` with `a₊` the coefficient of
/// `x^{λ₊}`, `Im λ₊ > 0`. `MuPos`: `Σ_k (⟨a₊,b₋⟩ − ⟨a₋,b₊⟩)` in coefficients
/// normalised by `√h`.
pub fn asymmetry_form_in(u: &BoundaryJet, v: &BoundaryJet, regime: FormRegime, sqrt_abs_mu: f64) -> Result<Complex64> {
    let mut acc = ZERO;
    for (a, b) in paired(u, v)? {
        acc += match regime {
            FormRegime::MuNeg => inner(&a.a_plus, &b.a_plus) - inner(&a.a_minus, &b.a_minus),
            FormRegime::MuPos => inner(&a.a_plus, &b.a_minus) - inner(&a.a_minus, &b.a_plus),
        };
    }
    Ok(match regime {
        FormRegime::MuNeg => I * sqrt_abs_mu * acc,
        FormRegime::MuPos => acc,
    })
}

pub fn asymmetry_form(u: &BoundaryJet, v: &BoundaryJet, params: &GrushinParams) -> Result<Complex64> {
    let regime = form_regime(params)?;
    asymmetry_form_in(u, v, regime, libm::sqrt(indicial_data(params).mu.abs()))
}

/// Named extension families with their parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `a⁻ ≡ 0` on both sides.
    Friedrichs,
    /// `a^l_− = 0`, `a^r_+ = γ a^r_−`.
    RightRobin { gamma: f64 },
    /// `a^r_− = 0`, `a^l_+ = γ a^l_−`.
    LeftRobin { gamma: f64 },
    /// `a^r_− = b a^l_−`, `a^l_+ + b̄ a^r_+ = γ a^l_−`.
    Transmission { b: Complex64, gamma: f64 },
    /// `a₊ = Γ a₋` for Hermitian `Γ`.
    Cayley { gamma: CMatrix },
}

impl Family {
    pub fn kind(&self) -> u8 {
        match self {
            Family::Friedrichs => 1,
            Family::RightRobin { .. } => 2,
            Family::LeftRobin { .. } => 3,
            Family::Transmission { .. } => 4,
            Family::Cayley { .. } => 5,
        }
    }

    /// Residuals of the listed boundary relations at one mode.
    pub fn relations(&self, j: &ModeJet) -> Vec<Complex64> {
        let (p, m) = (&j.a_plus, &j.a_minus);
        match self {
            Family::Friedrichs => vec![m[RIGHT], m[LEFT]],
            Family::RightRobin { gamma } => vec![m[LEFT], p[RIGHT] - m[RIGHT] * gamma],
            Family::LeftRobin { gamma } => vec![m[RIGHT], p[LEFT] - m[LEFT] * gamma],
            Family::Transmission { b, gamma } => {
                vec![m[RIGHT] - b * m[LEFT], p[LEFT] + b.conj() * p[RIGHT] - m[LEFT] * gamma]
            }
            Family::Cayley { gamma } => {
                let gm = gamma.mul_vec(m);
                vec![p[0] - gm[0], p[1] - gm[1]]
            }
        }
    }
}

/// A self-adjoint extension: `a₊ = U a₋` (μ < 0) or `A₂ = U A₁` (0 < μ < 4) per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub regime: FormRegime,
    pub u: CMatrix,
    pub origin: Option<Family>,
}

const UNITARY_TOL: f64 = 1e-12;

impl ExtensionSpec {
    pub fn new(regime: FormRegime, u: CMatrix) -> Result<Self> {
        if u.rows() != 2 || u.cols() != 2 {
            return Err(Error::domain("U must be 2x2"));
        }
        let defect = u.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(Error::domain(format!("U is not unitary (defect {defect:.3e})")));
        }
        Ok(ExtensionSpec { regime, u, origin: None })
    }

    /// Errors when the regime does not match the sign of μ.
    pub fn check_against(&self, params: &GrushinParams) -> Result<()> {
        let actual = form_regime(params)?;
        if actual != self.regime {
            return Err(Error::domain(format!(
                "extension is for {} but the parameters give {}",
                self.regime.as_str(),
                actual.as_str()
            )));
        }
        Ok(())
    }

    /// `(input, output)` of the graph relation at one mode.
    fn graph_pair(&self, j: &ModeJet) -> ([Complex64; 2], [Complex64; 2]) {
        match self.regime {
            FormRegime::MuNeg => (j.a_minus, j.a_plus),
            FormRegime::MuPos => (j.a1(), j.a2()),
        }
    }

    /// Per-mode residual `‖output − U·input‖`, relative to the jet size.
    pub fn constraint_residuals(&self, jet: &BoundaryJet) -> Vec<f64> {
        jet.modes
            .iter()
            .map(|j| {
                let (input, output) = self.graph_pair(j);
                let ui = self.u.mul_vec(&input);
                let r = libm::sqrt((output[0] - ui[0]).norm_sqr() + (output[1] - ui[1]).norm_sqr());
                r / j.scale().max(f64::MIN_POSITIVE)
            })
            .collect()
    }

    pub fn admits(&self, jet: &BoundaryJet, tol: f64) -> bool {
        self.constraint_residuals(jet).iter().all(|&r| r <= tol)
    }

    /// The admitted mode jet with free data `w`: `a₋ = w` (μ < 0) or `A₁ = w` (0 < μ < 4).
    pub fn admissible_mode(&self, mode: Vec<i64>, w: [Complex64; 2]) -> ModeJet {
        let uw = self.u.mul_vec(&w);
        let uw = [uw[0], uw[1]];
        match self.regime {
            FormRegime::MuNeg => ModeJet::new(mode, uw, w),
            FormRegime::MuPos => ModeJet::from_a_variables(mode, w, uw),
        }
    }
}

/// Per-mode predicate for the Lagrangian subspace of `spec`.
pub fn lagrangian_from_unitary(spec: &ExtensionSpec) -> impl Fn(&BoundaryJet) -> bool + '_ {
    move |jet| spec.admits(jet, 1e-10)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Builds `U` for one of the five named families (regime `MuPos`).
pub fn named_family(family: Family) -> Result<ExtensionSpec> {
    let u = match &family {
        Family::Friedrichs => CMatrix::identity(2),
        Family::RightRobin { gamma } | Family::LeftRobin { gamma } => {
            if !gamma.is_finite() {
                return Err(Error::domain("gamma must be finite"));
            }
            let z = (c(*gamma) - I) / (c(*gamma) + I);
            if matches!(family, Family::RightRobin { .. }) {
                CMatrix::from_diag(&[z, c(1.0)])
            } else {
                CMatrix::from_diag(&[c(1.0), z])
            }
        }
        Family::Transmission { b, gamma } => {
            if !gamma.is_finite() || !b.re.is_finite() || !b.im.is_finite() {
                return Err(Error::domain("b and gamma must be finite"));
            }
            let b2 = b.norm_sqr();
            let d = c(1.0 + b2) - I * gamma;
            CMatrix::from_rows(&[
                vec![(c(1.0 - b2) - I * gamma) / d, -2.0 * b / d],
                vec![-2.0 * b.conj() / d, (c(-1.0 + b2) - I * gamma) / d],
            ])?
        }
        Family::Cayley { gamma } => {
            if gamma.rows() != 2 || gamma.cols() != 2 {
                return Err(Error::domain("Gamma must be 2x2"));
            }
            if gamma.hermiticity_defect() > 1e-12 * gamma.max_abs().max(1.0) {
                return Err(Error::domain("Gamma must be Hermitian"));
            }
            cayley(gamma)?
        }
    };
    let mut spec = ExtensionSpec::new(FormRegime::MuPos, u)?;
    spec.origin = Some(family);
    Ok(spec)
}

/// `(Γ − i)(Γ + i)^{−1}`.
pub fn cayley(gamma: &CMatrix) -> Result<CMatrix> {
    let n = gamma.rows();
    let shift = CMatrix::identity(n).scale(I);
    let plus = gamma + &shift;
    let minus = gamma - &shift;
    // Γ − i and (Γ + i)^{−1} commute, so this equals (Γ + i)^{−1}(Γ − i).
    plus.solve(&minus)
}

/// A constraint-satisfying jet supported on one mode that pairs nontrivially
/// with `v`, or an error when `v` already satisfies the constraint there.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalityWitness {
    pub u: BoundaryJet,
    pub pairing: Complex64,
}

pub fn maximality_witness(
    spec: &ExtensionSpec,
    v: &BoundaryJet,
    mode_index: usize,
    sqrt_abs_mu: f64,
) -> Result<MaximalityWitness> {
    let vj = v.modes.get(mode_index).ok_or_else(|| Error::domain("mode index out of range"))?;
    if spec.constraint_residuals(&BoundaryJet::single(vj.clone()))[0] <= 1e-10 {
        return Err(Error::domain("v satisfies the constraint at this mode"));
    }
    let mut best: Option<MaximalityWitness> = None;
    for w in [[c(1.0), ZERO], [ZERO, c(1.0)]] {
        let mut modes: Vec<ModeJet> =
            v.modes.iter().map(|m| ModeJet::new(m.mode.clone(), [ZERO; 2], [ZERO; 2])).collect();
        modes[mode_index] = spec.admissible_mode(vj.mode.clone(), w);
        let u = BoundaryJet::new(modes);
        let pairing = asymmetry_form_in(&u, v, spec.regime, sqrt_abs_mu)?;
        if best.as_ref().map_or(true, |b| pairing.norm() > b.pairing.norm()) {
            best = Some(MaximalityWitness { u, pairing });
        }
    }
    Ok(best.unwrap())
}

/// Which `h` to use in the 0 < μ < 4 construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HFormula {
    /// Flat model: no divergence or curvature correction, `h = √μ`.
    Flat,
    /// `√μ + (div(∂ₓ)λ₋ − c∂ₓ(x²S)) / p(λ₋)` with user-supplied values on `Z`.
    General { divergence: f64, curvature_derivative: f64 },
}

pub fn h_function(params: &GrushinParams, formula: HFormula) -> Result<f64> {
    let ind = indicial_data(params);
    if form_regime(params)? != FormRegime::MuPos {
        return Err(Error::domain("h is defined for 0 < mu < 4"));
    }
    let root = libm::sqrt(ind.mu);
    match formula {
        HFormula::Flat => Ok(root),
        HFormula::General { divergence, curvature_derivative } => {
            let p = ind.eval(ind.lambda_minus);
            let scale =
                ind.lambda_minus.norm_sqr() + ind.p_coeffs[1].abs() * ind.lambda_minus.norm() + ind.p_coeffs[2].abs();
            if p.norm() <= 1e-12 * scale.max(1.0) {
                return Err(Error::DegenerateDenominator(format!(
                    "p(lambda_minus) = {} vanishes at the indicial root",
                    p.re
                )));
            }
            let num = divergence * ind.lambda_minus.re - params.c() * curvature_derivative;
            Ok(root + num / p.re)
        }
    }
}

/// Outcome of [`greens_identity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GreensCheck {
    pub numeric: Complex64,
    pub closed_form: Complex64,
    pub relative_error: f64,
    /// Estimated extrapolation error.
    pub extrapolation_error: f64,
    /// `(ε, ω(ε))`.
    pub table: Vec<(f64, Complex64)>,
}

impl GreensCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.relative_error < tol
    }
}

/// Tunables of [`greens_identity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GreensOptions {
    pub eps: Vec<f64>,
    pub series_cutoff: f64,
}

impl Default for GreensOptions {
    fn default() -> Self {
        GreensOptions { eps: vec![0.2, 0.1, 0.05, 0.025], series_cutoff: 10.0 }
    }
}

fn mode_expansions(
    params: &GrushinParams,
    mode: &[i64],
    cutoff: f64,
) -> Result<(FrobeniusExpansion, FrobeniusExpansion)> {
    let k2 = mode.iter().map(|v| v * v).sum::<i64>() as f64;
    let data = OperatorSeriesData::new(
        params.alpha(),
        params.c(),
        indicial_data(params),
        1,
        vec![Coupling {
            grade: 2.0 * (1.0 + params.alpha()),
            kind: CouplingKind::Laplacian,
            matrix: CMatrix::from_real_diag(&[-k2]),
        }],
    )?;
    let one = [c(1.0)];
    Ok((expand(&data, Root::Plus, &one, cutoff)?, expand(&data, Root::Minus, &one, cutoff)?))
}

/// Evaluates the boundary integral of Green's identity on `|x| = ε` for the
/// flat model, extrapolates `ε → 0` and compares with [`asymmetry_form`].
///
/// For `0 < μ < 4` the jets are read in `√h`-normalised coefficients with
/// `h = √μ`, so the plain series coefficients are `a/√h`.
pub fn greens_identity_check(
    params: &GrushinParams,
    u: &BoundaryJet,
    v: &BoundaryJet,
    opts: &GreensOptions,
) -> Result<GreensCheck> {
    let regime = form_regime(params)?;
    let ind = indicial_data(params);
    let closed_form = asymmetry_form(u, v, params)?;
    let norm = match regime {
        FormRegime::MuNeg => 1.0,
        FormRegime::MuPos => 1.0 / libm::sqrt(h_function(params, HFormula::Flat)?),
    };
    if opts.eps.len() < 2 || opts.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::domain("need at least two eps values in (0, 1)"));
    }
    let pairs = paired(u, v)?;
    let mut cache: Vec<(Vec<i64>, (FrobeniusExpansion, FrobeniusExpansion))> = Vec::new();
    for (a, _) in &pairs {
        if !cache.iter().any(|(m, _)| *m == a.mode) {
            cache.push((a.mode.clone(), mode_expansions(params, &a.mode, opts.series_cutoff)?));
        }
    }
    let an = params.alpha_n();
    let omega_at = |eps: f64| -> Complex64 {
        let mut acc = ZERO;
        for (a, b) in &pairs {
            let (up, um) = &cache.iter().find(|(m, _)| *m == a.mode).unwrap().1;
            let (vp, dp) = up.eval_with_derivative(eps);
            let (vm, dm) = um.eval_with_derivative(eps);
            for side in [RIGHT, LEFT] {
                let f = (a.a_plus[side] * vp[0] + a.a_minus[side] * vm[0]) * norm;
                let df = (a.a_plus[side] * dp[0] + a.a_minus[side] * dm[0]) * norm;
                let g = (b.a_plus[side] * vp[0] + b.a_minus[side] * vm[0]) * norm;
                let dg = (b.a_plus[side] * dp[0] + b.a_minus[side] * dm[0]) * norm;
                acc += f * dg.conj() - df * g.conj();
            }
        }
        -acc * libm::pow(eps, -an)
    };
    let table: Vec<(f64, Complex64)> = opts.eps.iter().map(|&e| (e, omega_at(e))).collect();
    // Truncation errors sit at grades beyond the series cutoff.
    let lattice = theta_lattice(params.alpha(), opts.series_cutoff + 4.0)?;
    let powers: Vec<f64> =
        lattice.values().into_iter().filter(|&g| g > opts.series_cutoff).take(table.len() - 1).collect();
    let hs: Vec<f64> = table.iter().map(|t| t.0).collect();
    let fs: Vec<Complex64> = table.iter().map(|t| t.1).collect();
    let (numeric, extrapolation_error) = richardson(&hs, &fs, &powers);
    let scale = libm::sqrt(ind.mu.abs()).max(1.0) * u.norm() * v.norm();
    if !(extrapolation_error <= 1e-6 * scale.max(f64::MIN_POSITIVE)) {
        let mut msg = String::from("extrapolation did not converge; eps table:");
        for (e, w) in &table {
            msg.push_str(&format!(" ({e}, {w})"));
        }
        return Err(Error::CheckFailed(msg));
    }
    // A vanishing closed form is compared on the scale of the jets instead.
    let denom = if closed_form.norm() > 0.0 { closed_form.norm() } else { scale.max(f64::MIN_POSITIVE) };
    let relative_error = (numeric - closed_form).norm() / denom;
    Ok(GreensCheck { numeric, closed_form, relative_error, extrapolation_error, table })
}
