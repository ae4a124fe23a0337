//! Scalar curvature of warped α-Grushin metrics.
//!
//! Two independent routes: the moving-frame formula in an orthonormal frame
//! (Christoffel symbols `∇_{X_i} X_j = Γ^k_{ij} X_k`, obtained from frame
//! brackets by Koszul's formula), and a coordinate finite-difference oracle
//! contracting the Riemann tensor of the full metric `dx² + x^{−2α} g_{x,Z}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::params::GrushinParams;
use crate::{Error, Result};

/// Christoffel symbols `Γ^i_{jk}` in an orthonormal frame at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameChristoffel {
    dim: usize,
    data: Vec<f64>,
}

impl FrameChristoffel {
    pub fn zeros(dim: usize) -> Self {
        FrameChristoffel { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^i_{jk}`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    /// `max |Γ^i_{jk} + Γ^k_{ji}|`.
    pub fn compatibility_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((self.get(i, j, k) + self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Structure constants `[X_A, X_B] = c^C_{AB} X_C` of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<f64>,
}

impl StructureConstants {
    pub fn zeros(dim: usize) -> Self {
        StructureConstants { dim, data: vec![0.0; dim * dim * dim] }
    }

    /// `c^c_{ab}`.
    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.data[(c * self.dim + a) * self.dim + b]
    }

    pub fn set(&mut self, c: usize, a: usize, b: usize, v: f64) {
        self.data[(c * self.dim + a) * self.dim + b] = v;
    }

    /// Sets `c^c_{ab} = v` and `c^c_{ba} = −v`.
    pub fn set_bracket(&mut self, c: usize, a: usize, b: usize, v: f64) {
        self.set(c, a, b, v);
        self.set(c, b, a, -v);
    }
}

/// Levi-Civita connection of an orthonormal frame from its brackets:
/// `Γ^C_{AB} = ½(c^C_{AB} − c^A_{BC} + c^B_{CA})`.
pub fn christoffel_from_brackets(c: &StructureConstants) -> FrameChristoffel {
    let d = c.dim;
    let mut g = FrameChristoffel::zeros(d);
    for cc in 0..d {
        for a in 0..d {
            for b in 0..d {
                g.set(cc, a, b, 0.5 * (c.get(cc, a, b) - c.get(a, b, cc) + c.get(b, cc, a)));
            }
        }
    }
    g
}

/// Frame derivatives `X_j[Γ^j_{ii}]`, indexed `(j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDerivatives {
    dim: usize,
    data: Vec<f64>,
}

impl FrameDerivatives {
    pub fn zeros(dim: usize) -> Self {
        FrameDerivatives { dim, data: vec![0.0; dim * dim] }
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.dim + i]
    }

    pub fn set(&mut self, j: usize, i: usize, v: f64) {
        self.data[j * self.dim + i] = v;
    }
}

/// `S = Σ_i 2X_j[Γ^j_{ii}] + Γ^j_{ki}Γ^k_{ij} + Γ^j_{jk}Γ^k_{ii} − Γ^j_{ki}Γ^k_{ji} − Γ^j_{ik}Γ^k_{ji}`.
pub fn scalar_from_christoffel(gamma: &FrameChristoffel, derivatives: &FrameDerivatives) -> Result<f64> {
    let d = gamma.dim;
    if derivatives.dim != d {
        return Err(Error::domain("frame derivatives and Christoffel symbols differ in dimension"));
    }
    let defect = gamma.compatibility_defect();
    if defect > 1e-10 * gamma.max_abs().max(1.0) {
        return Err(Error::InvalidConnection(format!("metric compatibility violated by {defect:e}")));
    }
    let g = |i, j, k| gamma.get(i, j, k);
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += 2.0 * derivatives.get(j, i);
            for k in 0..d {
                s += g(j, k, i) * g(k, i, j) + g(j, j, k) * g(k, i, i)
                    - g(j, k, i) * g(k, j, i)
                    - g(j, i, k) * g(k, j, i);
            }
        }
    }
    Ok(s)
}

/// Connection of the flat α-Grushin frame `X_0 = ∂_x`, `X_i = |x|^α ∂_{y_i}`
/// at `x > 0`: `Γ^i_{i0} = −α/x`, `Γ^0_{ii} = α/x`, and `X_0[Γ^0_{ii}] = −α/x²`.
pub fn flat_grushin_frame(alpha: f64, n: u32, x: f64) -> (FrameChristoffel, FrameDerivatives) {
    let d = n as usize + 1;
    let mut g = FrameChristoffel::zeros(d);
    let mut dg = FrameDerivatives::zeros(d);
    for i in 1..d {
        g.set(i, i, 0, -alpha / x);
        g.set(0, i, i, alpha / x);
        dg.set(0, i, -alpha / (x * x));
    }
    (g, dg)
}

/// Coefficient of `x^{−2}` in the flat-model scalar curvature, `−αn(αn+α+2)`.
pub fn flat_model_scalar(params: &GrushinParams) -> f64 {
    flat_scalar_factored(params.alpha(), params.n())
}

pub fn flat_scalar_factored(alpha: f64, n: u32) -> f64 {
    let an = alpha * n as f64;
    -an * (an + alpha + 2.0)
}

/// The same coefficient written as `−(2αn + α²n + α²n²)`.
pub fn flat_scalar_expanded(alpha: f64, n: u32) -> f64 {
    let n = n as f64;
    -(2.0 * alpha * n + alpha * alpha * n + alpha * alpha * n * n)
}

/// A Riemannian metric on a coordinate patch, as a callable returning the
/// row-major `dim × dim` matrix `g_{μν}` at a point.
pub trait CoordinateMetric {
    fn dim(&self) -> usize;
    fn metric(&self, point: &[f64]) -> Vec<f64>;
}

/// A family of metrics `g_{x,Z}` on the torus `Tⁿ`.
pub trait LeafMetric {
    fn n(&self) -> usize;
    /// Row-major `n × n` matrix at `(x, y)`.
    fn eval(&self, x: f64, y: &[f64]) -> Vec<f64>;
}

/// Leaf metric given by a closure.
pub struct FnLeafMetric<F> {
    n: usize,
    f: F,
}

impl<F: Fn(f64, &[f64]) -> Vec<f64>> FnLeafMetric<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnLeafMetric { n, f }
    }
}

impl<F: Fn(f64, &[f64]) -> Vec<f64>> LeafMetric for FnLeafMetric<F> {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, x: f64, y: &[f64]) -> Vec<f64> {
        (self.f)(x, y)
    }
}

/// Trigonometric factor of a metric term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Cos,
    Sin,
}

/// `coeff · x^power · wave(k·y)` added to entries `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTerm {
    pub row: usize,
    pub col: usize,
    pub power: u32,
    pub coeff: f64,
    pub k: Vec<i64>,
    pub wave: Wave,
}

/// `g_{x,Z} = Id + Σ terms`: polynomial in x, Fourier data on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFourierMetric {
    n: usize,
    terms: Vec<MetricTerm>,
}

impl PolynomialFourierMetric {
    pub fn new(n: usize, terms: Vec<MetricTerm>) -> Result<Self> {
        for t in &terms {
            if t.row >= n || t.col >= n {
                return Err(Error::domain(format!("metric term entry ({}, {}) outside {n}×{n}", t.row, t.col)));
            }
            if t.k.len() != n && !t.k.is_empty() {
                return Err(Error::domain(format!("wave vector must have {n} components")));
            }
            if !t.coeff.is_finite() {
                return Err(Error::domain("metric coefficient is not finite"));
            }
        }
        Ok(PolynomialFourierMetric { n, terms })
    }

    pub fn flat(n: usize) -> Self {
        PolynomialFourierMetric { n, terms: Vec::new() }
    }

    pub fn terms(&self) -> &[MetricTerm] {
        &self.terms
    }
}

impl LeafMetric for PolynomialFourierMetric {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, x: f64, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            g[i * n + i] = 1.0;
        }
        for t in &self.terms {
            let phase: f64 = t.k.iter().zip(y).map(|(k, y)| *k as f64 * y).sum();
            let w = match t.wave {
                Wave::Cos => libm::cos(phase),
                Wave::Sin => libm::sin(phase),
            };
            let v = t.coeff * libm::pow(x, t.power as f64) * w;
            g[t.row * n + t.col] += v;
            if t.row != t.col {
                g[t.col * n + t.row] += v;
            }
        }
        g
    }
}

/// `g_α = dx² + |x|^{−2α} g_{x,Z}` on `(0, ∞) × Tⁿ`.
pub struct WarpedMetric<L> {
    pub alpha: f64,
    pub leaf: L,
}

impl<L: LeafMetric> WarpedMetric<L> {
    pub fn new(alpha: f64, leaf: L) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::domain("alpha must exceed -1"));
        }
        if leaf.n() == 0 {
            return Err(Error::domain("the singular set needs dimension n >= 1"));
        }
        Ok(WarpedMetric { alpha, leaf })
    }

    pub fn n(&self) -> usize {
        self.leaf.n()
    }
}

impl<L: LeafMetric> CoordinateMetric for WarpedMetric<L> {
    fn dim(&self) -> usize {
        self.leaf.n() + 1
    }

    fn metric(&self, p: &[f64]) -> Vec<f64> {
        let n = self.leaf.n();
        let d = n + 1;
        let w = libm::pow(libm::fabs(p[0]), -2.0 * self.alpha);
        let gz = self.leaf.eval(p[0], &p[1..]);
        let mut g = vec![0.0; d * d];
        g[0] = 1.0;
        for a in 0..n {
            for b in 0..n {
                g[(a + 1) * d + b + 1] = w * gz[a * n + b];
            }
        }
        g
    }
}

/// Metric given by a closure in coordinates.
pub struct FnMetric<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> FnMetric<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnMetric { dim, f }
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> CoordinateMetric for FnMetric<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, point: &[f64]) -> Vec<f64> {
        (self.f)(point)
    }
}

/// Relative step of the finite-difference stencils.
pub const FD_STEP: f64 = 1e-4;

/// Step along coordinate `c` at `p`: relative to the coordinate magnitude,
/// except that the x coordinate (index 0) is never stepped across 0.
fn coordinate_step(p: &[f64], c: usize, rel: f64) -> f64 {
    if c == 0 {
        rel * p[0].abs().max(1e-300)
    } else {
        rel * p[c].abs().max(1.0)
    }
}

/// Fourth-order central first derivative of a vector-valued function.
fn d1<F: Fn(&[f64]) -> Vec<f64>>(f: &F, p: &[f64], c: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    let mut at = |t: f64| {
        q[c] = p[c] + t;
        f(&q)
    };
    let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
    (0..m1.len()).map(|k| (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * h)).collect()
}

/// Fourth-order central second derivative `∂_a ∂_b`.
fn d2<F: Fn(&[f64]) -> Vec<f64>>(f: &F, p: &[f64], a: usize, b: usize, ha: f64, hb: f64) -> Vec<f64> {
    if a == b {
        let mut q = p.to_vec();
        let mut at = |t: f64| {
            q[a] = p[a] + t;
            f(&q)
        };
        let (m2, m1, z, p1, p2) = (at(-2.0 * ha), at(-ha), at(0.0), at(ha), at(2.0 * ha));
        (0..z.len()).map(|k| (-m2[k] + 16.0 * m1[k] - 30.0 * z[k] + 16.0 * p1[k] - p2[k]) / (12.0 * ha * ha)).collect()
    } else {
        let inner = |q: &[f64]| d1(f, q, b, hb);
        d1(&inner, p, a, ha)
    }
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
fn spd_inverse(g: &[f64], d: usize) -> Option<Vec<f64>> {
    let l = cholesky(g, d)?;
    let mut inv = vec![0.0; d * d];
    for col in 0..d {
        // Solve L Lᵀ x = e_col.
        let mut z = vec![0.0; d];
        for i in 0..d {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                acc -= l[i * d + k] * z[k];
            }
            z[i] = acc / l[i * d + i];
        }
        for i in (0..d).rev() {
            let mut acc = z[i];
            for k in i + 1..d {
                acc -= l[k * d + i] * inv[k * d + col];
            }
            inv[i * d + col] = acc / l[i * d + i];
        }
    }
    Some(inv)
}

/// Lower-triangular `L` with `g = L Lᵀ`.
fn cholesky(g: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut acc = g[i * d + j];
            for k in 0..j {
                acc -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(acc > 0.0) {
                    return None;
                }
                l[i * d + i] = libm::sqrt(acc);
            } else {
                l[i * d + j] = acc / l[j * d + j];
            }
        }
    }
    Some(l)
}

fn not_positive(p: &[f64]) -> Error {
    Error::domain(format!("metric is not positive-definite at {p:?}"))
}

/// Scalar curvature from the coordinate Riemann tensor,
/// `R_{abcd} = ½(g_{ad,bc} + g_{bc,ad} − g_{ac,bd} − g_{bd,ac}) + g_{ef}(Γ^e_{bc}Γ^f_{ad} − Γ^e_{bd}Γ^f_{ac})`,
/// `S = g^{ac} g^{bd} R_{abcd}`, with fourth-order central differences of relative step `rel`.
pub fn scalar_coordinate_oracle<M: CoordinateMetric>(metric: &M, p: &[f64], rel: f64) -> Result<f64> {
    let d = metric.dim();
    if p.len() != d {
        return Err(Error::domain("point has the wrong dimension"));
    }
    let f = |q: &[f64]| metric.metric(q);
    let g = f(p);
    let gi = spd_inverse(&g, d).ok_or_else(|| not_positive(p))?;
    let h: Vec<f64> = (0..d).map(|c| coordinate_step(p, c, rel)).collect();
    let dg: Vec<Vec<f64>> = (0..d).map(|c| d1(&f, p, c, h[c])).collect();
    let mut ddg = vec![Vec::new(); d * d];
    for a in 0..d {
        for b in a..d {
            let v = d2(&f, p, a, b, h[a], h[b]);
            ddg[b * d + a] = v.clone();
            ddg[a * d + b] = v;
        }
    }
    let gij = |i: usize, j: usize| g[i * d + j];
    let dgij = |c: usize, i: usize, j: usize| dg[c][i * d + j];
    let ddgij = |a: usize, b: usize, i: usize, j: usize| ddg[a * d + b][i * d + j];
    // Γ^e_{bc} = g^{el} Γ_{lbc}.
    let mut gamma = vec![0.0; d * d * d];
    for e in 0..d {
        for b in 0..d {
            for c in 0..d {
                let mut acc = 0.0;
                for l in 0..d {
                    acc += gi[e * d + l] * 0.5 * (dgij(b, l, c) + dgij(c, l, b) - dgij(l, b, c));
                }
                gamma[(e * d + b) * d + c] = acc;
            }
        }
    }
    let gm = |e: usize, b: usize, c: usize| gamma[(e * d + b) * d + c];
    let mut s = 0.0;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let wac = gi[a * d + c];
                if wac == 0.0 {
                    continue;
                }
                for dd in 0..d {
                    let wbd = gi[b * d + dd];
                    if wbd == 0.0 {
                        continue;
                    }
                    let mut r =
                        0.5 * (ddgij(b, c, a, dd) + ddgij(a, dd, b, c) - ddgij(b, dd, a, c) - ddgij(a, c, b, dd));
                    for e in 0..d {
                        for ff in 0..d {
                            r += gij(e, ff) * (gm(e, b, c) * gm(ff, a, dd) - gm(e, b, dd) * gm(ff, a, c));
                        }
                    }
                    s += wac * wbd * r;
                }
            }
        }
    }
    Ok(s)
}

/// Orthonormal frame `X_A` (columns of `L^{−T}` with `g = L Lᵀ`) and its
/// coframe `θ^A` (rows of `Lᵀ`), both row-major.
fn frame_and_coframe(g: &[f64], d: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let l = cholesky(g, d)?;
    // X = L^{−T}: solve Lᵀ X = I.
    let mut x = vec![0.0; d * d];
    for col in 0..d {
        for i in (0..d).rev() {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in i + 1..d {
                acc -= l[k * d + i] * x[k * d + col];
            }
            x[i * d + col] = acc / l[i * d + i];
        }
    }
    let mut theta = vec![0.0; d * d];
    for a in 0..d {
        for mu in 0..d {
            theta[a * d + mu] = l[mu * d + a];
        }
    }
    Some((x, theta))
}

/// Christoffel symbols of the Cholesky frame at `p`, from numerically
/// differentiated brackets.
fn frame_christoffel_at<M: CoordinateMetric>(metric: &M, p: &[f64], rel: f64) -> Result<FrameChristoffel> {
    let d = metric.dim();
    let frame = |q: &[f64]| -> Vec<f64> {
        frame_and_coframe(&metric.metric(q), d).map(|(x, _)| x).unwrap_or_else(|| vec![f64::NAN; d * d])
    };
    let (x, theta) = frame_and_coframe(&metric.metric(p), d).ok_or_else(|| not_positive(p))?;
    let dx: Vec<Vec<f64>> = (0..d).map(|c| d1(&frame, p, c, coordinate_step(p, c, rel))).collect();
    // X_A^μ = x[μ, A]; ∂_ν X_A^μ = dx[ν][μ, A].
    let mut c = StructureConstants::zeros(d);
    for a in 0..d {
        for b in a + 1..d {
            let mut bracket = vec![0.0; d];
            for (mu, br) in bracket.iter_mut().enumerate() {
                for nu in 0..d {
                    *br += x[nu * d + a] * dx[nu][mu * d + b] - x[nu * d + b] * dx[nu][mu * d + a];
                }
            }
            for cc in 0..d {
                let v: f64 = (0..d).map(|mu| theta[cc * d + mu] * bracket[mu]).sum();
                c.set_bracket(cc, a, b, v);
            }
        }
    }
    Ok(christoffel_from_brackets(&c))
}

/// Scalar curvature by the moving-frame formula on the Cholesky frame of a
/// coordinate metric; brackets and `X_j[Γ^j_{ii}]` by finite differences.
pub fn scalar_frame_numeric<M: CoordinateMetric>(metric: &M, p: &[f64], rel: f64) -> Result<f64> {
    let d = metric.dim();
    let gamma = frame_christoffel_at(metric, p, rel)?;
    let (x, _) = frame_and_coframe(&metric.metric(p), d).ok_or_else(|| not_positive(p))?;
    // Γ^j_{ii} for all (j, i) as a vector-valued function of position.
    let diag = |q: &[f64]| -> Vec<f64> {
        match frame_christoffel_at(metric, q, rel) {
            Ok(g) => (0..d * d).map(|k| g.get(k / d, k % d, k % d)).collect(),
            Err(_) => vec![f64::NAN; d * d],
        }
    };
    let outer = rel * 10.0;
    let grads: Vec<Vec<f64>> = (0..d).map(|c| d1(&diag, p, c, coordinate_step(p, c, outer))).collect();
    let mut der = FrameDerivatives::zeros(d);
    for j in 0..d {
        for i in 0..d {
            let v: f64 = (0..d).map(|nu| x[nu * d + j] * grads[nu][j * d + i]).sum();
            der.set(j, i, v);
        }
    }
    scalar_from_christoffel(&gamma, &der)
}

/// Fit of `x² S(x, y)` on one `y` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub y: Vec<f64>,
    /// Extrapolated limit of `x² S` as `x → 0`.
    pub limit: f64,
    /// Exponent ρ of the remainder `x² S − limit ≈ B x^ρ`; `∞` when the samples are constant.
    pub remainder_exponent: f64,
    /// `(x, x² S)` in grid order.
    pub table: Vec<(f64, f64)>,
}

/// Result of [`asymptotic_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCheck {
    pub predicted: f64,
    pub fits: Vec<AsymptoticFit>,
}

impl AsymptoticCheck {
    /// Worst relative deviation of the fitted limits from `−αn(αn+α+2)`
    /// (absolute when the prediction is 0).
    pub fn limit_error(&self) -> f64 {
        let scale = self.predicted.abs().max(1.0);
        self.fits.iter().map(|f| (f.limit - self.predicted).abs() / scale).fold(0.0, f64::max)
    }

    pub fn remainder_decays(&self) -> bool {
        self.fits.iter().all(|f| f.remainder_exponent > 0.0)
    }

    pub fn passed(&self, rel_tol: f64) -> bool {
        self.limit_error() <= rel_tol && self.remainder_decays()
    }

    /// Limit with the largest deviation.
    pub fn worst_limit(&self) -> f64 {
        let scale = self.predicted.abs().max(1.0);
        self.fits
            .iter()
            .map(|f| f.limit)
            .max_by(|a, b| ((a - self.predicted).abs() / scale).total_cmp(&((b - self.predicted).abs() / scale)))
            .unwrap_or(f64::NAN)
    }
}

/// Relative size below which differences of `x² S` are finite-difference noise.
const FIT_NOISE: f64 = 1e-6;

fn fit_limit(table: &[(f64, f64)]) -> (f64, f64) {
    let mut pts = table.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let k = pts.len();
    let scale = pts.iter().map(|p| p.1.abs()).fold(1.0, f64::max);
    let noise = FIT_NOISE * scale;
    let innermost = pts[k - 1].1;
    // Innermost triple whose successive differences stand above the noise
    // and share a sign: the remainder there is a clean power law.
    for t in (0..k - 2).rev() {
        let (x1, v1) = pts[t];
        let (x2, v2) = pts[t + 1];
        let v3 = pts[t + 2].1;
        let (d1, d2) = (v1 - v2, v2 - v3);
        if d1.abs() <= noise || d2.abs() <= noise || d1.signum() != d2.signum() {
            continue;
        }
        let r = x1 / x2;
        let rho = libm::log(d1 / d2) / libm::log(r);
        if !(rho > 0.0) {
            return (innermost, rho);
        }
        // Geometric tail of the remainder below x3.
        let limit = v3 - d2 / (libm::pow(r, rho) - 1.0);
        return (limit, rho);
    }
    let spread = pts.iter().map(|p| (p.1 - innermost).abs()).fold(0.0, f64::max);
    if spread <= noise {
        (innermost, f64::INFINITY)
    } else {
        (innermost, 0.0)
    }
}

/// Default `y` samples used by [`asymptotic_check`].
pub fn default_y_samples(n: usize) -> Vec<Vec<f64>> {
    vec![vec![0.7; n], (0..n).map(|k| 2.3 + 0.4 * k as f64).collect()]
}

/// Evaluates `x² S` on `x_grid` with the coordinate oracle and extrapolates
/// `x → 0` assuming a power-law remainder.
pub fn asymptotic_check<L: LeafMetric>(metric: &WarpedMetric<L>, x_grid: &[f64]) -> Result<AsymptoticCheck> {
    asymptotic_check_at(metric, x_grid, &default_y_samples(metric.n()))
}

pub fn asymptotic_check_at<L: LeafMetric>(
    metric: &WarpedMetric<L>,
    x_grid: &[f64],
    ys: &[Vec<f64>],
) -> Result<AsymptoticCheck> {
    if x_grid.len() < 3 || x_grid.iter().any(|&x| !(x > 0.0 && x <= 0.5)) {
        return Err(Error::domain("x grid needs at least 3 points in (0, 0.5]"));
    }
    let n = metric.n();
    let mut fits = Vec::with_capacity(ys.len());
    for y in ys {
        if y.len() != n {
            return Err(Error::domain("y sample has the wrong dimension"));
        }
        let mut table = Vec::with_capacity(x_grid.len());
        for &x in x_grid {
            let mut p = vec![x];
            p.extend_from_slice(y);
            let s = scalar_coordinate_oracle(metric, &p, FD_STEP)?;
            table.push((x, x * x * s));
        }
        if table.iter().any(|t| !t.1.is_finite()) {
            return Err(Error::NonConvergence(format!("non-finite curvature samples: {}", fmt_table(&table))));
        }
        let (limit, remainder_exponent) = fit_limit(&table);
        fits.push(AsymptoticFit { y: y.clone(), limit, remainder_exponent, table });
    }
    Ok(AsymptoticCheck { predicted: flat_scalar_factored(metric.alpha, n as u32), fits })
}

fn fmt_table(t: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for (x, v) in t {
        s.push_str(&format!("[{x:e}, {v:e}] "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_agree() {
        for &(a, n, v) in &[(1.0, 1, -4.0), (1.0, 2, -10.0), (0.0, 3, 0.0)] {
            assert_eq!(flat_scalar_factored(a, n), v);
            assert_eq!(flat_scalar_expanded(a, n), v);
        }
        let p = GrushinParams::new(1.0, 2, 0.0).unwrap();
        assert_eq!(flat_model_scalar(&p), -10.0);
    }

    #[test]
    fn flat_frame_formula() {
        for &(a, n) in &[(1.0, 1u32), (1.0, 2), (0.5, 3), (-0.4, 2)] {
            let x = 0.37;
            let (g, dg) = flat_grushin_frame(a, n, x);
            let s = scalar_from_christoffel(&g, &dg).unwrap();
            let expect = flat_scalar_factored(a, n) / (x * x);
            assert!((s - expect).abs() <= 1e-12 * expect.abs().max(1.0), "{s} {expect}");
        }
    }

    #[test]
    fn zero_connection_is_flat() {
        let s = scalar_from_christoffel(&FrameChristoffel::zeros(3), &FrameDerivatives::zeros(3)).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn incompatible_connection_is_rejected() {
        let mut g = FrameChristoffel::zeros(2);
        g.set(1, 1, 0, 1.0);
        assert!(matches!(scalar_from_christoffel(&g, &FrameDerivatives::zeros(2)), Err(Error::InvalidConnection(_))));
    }

    #[test]
    fn koszul_reproduces_flat_frame() {
        let (a, x) = (0.8, 0.3);
        let mut c = StructureConstants::zeros(3);
        for i in 1..3 {
            c.set_bracket(i, 0, i, a / x);
        }
        let (expect, _) = flat_grushin_frame(a, 2, x);
        let got = christoffel_from_brackets(&c);
        for k in 0..27 {
            assert!((got.data[k] - expect.data[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn round_sphere() {
        // X_0 = ∂_θ, X_1 = ∂_φ / sin θ: [X_0, X_1] = −cot θ X_1.
        let th: f64 = 0.9;
        let cot = libm::cos(th) / libm::sin(th);
        let mut c = StructureConstants::zeros(2);
        c.set_bracket(1, 0, 1, -cot);
        let g = christoffel_from_brackets(&c);
        let mut dg = FrameDerivatives::zeros(2);
        // X_0[Γ^0_{11}] = ∂_θ(−cot θ).
        dg.set(0, 1, 1.0 / (libm::sin(th) * libm::sin(th)));
        assert!((scalar_from_christoffel(&g, &dg).unwrap() - 2.0).abs() < 1e-12);

        let sphere = FnMetric::new(2, |p: &[f64]| vec![1.0, 0.0, 0.0, libm::sin(p[0]) * libm::sin(p[0])]);
        let s = scalar_coordinate_oracle(&sphere, &[th, 0.4], FD_STEP).unwrap();
        assert!((s - 2.0).abs() < 1e-6, "{s}");
        let s = scalar_frame_numeric(&sphere, &[th, 0.4], 1e-3).unwrap();
        assert!((s - 2.0).abs() < 1e-6, "{s}");
    }

    #[test]
    fn oracle_on_flat_grushin() {
        let m = WarpedMetric::new(1.0, PolynomialFourierMetric::flat(2)).unwrap();
        let x = 0.2;
        let s = scalar_coordinate_oracle(&m, &[x, 0.3, 1.1], FD_STEP).unwrap();
        let expect = -10.0 / (x * x);
        assert!((s - expect).abs() < 1e-6 * expect.abs(), "{s}");
    }
}
