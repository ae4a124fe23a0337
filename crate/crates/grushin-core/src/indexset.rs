//! Index sets of polyhomogeneous expansions and their b-map bookkeeping.
//!
//! An index set is a discrete subset of `ℂ × ℕ₀`. Finite sets and sets of the
//! form `bases + L` for a lattice `L ∈ {ℕ₀, Θ(α)}` are stored exactly. When an
//! operation cannot stay within that description (an extended union of two
//! infinite sets, a non-unit rescaling of a lattice), the result is enumerated
//! up to a truncation height and carries that height with it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_complex::Complex64;

use crate::params::{indicial_data, theta_lattice, GrushinParams};
use crate::{Error, Result};

/// Truncation height used by the operations that do not take one explicitly.
pub const DEFAULT_HEIGHT: f64 = 24.0;

const TOL: f64 = 1e-12;

/// One exponent `(s, p)`: a term `x^s (log x)^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    pub s: Complex64,
    pub p: u32,
}

impl Exponent {
    pub fn new(s: Complex64, p: u32) -> Self {
        Exponent { s, p }
    }

    pub fn real(s: f64, p: u32) -> Self {
        Exponent::new(Complex64::new(s, 0.0), p)
    }

    /// Canonical order: real part, imaginary part, log power.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.s.re.total_cmp(&other.s.re).then(self.s.im.total_cmp(&other.s.im)).then(self.p.cmp(&other.p))
    }

    fn same_point(&self, other: &Self) -> bool {
        same_s(self.s, other.s) && self.p == other.p
    }
}

fn same_s(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= TOL * (1.0 + a.norm().max(b.norm()))
}

/// Additive generator of an infinite index set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lattice {
    /// `{0}`: the set is exactly its bases.
    Trivial,
    /// `ℕ₀`.
    Naturals,
    /// `Θ(α) = {(1+α)i + j}`.
    Theta(f64),
}

impl Lattice {
    /// Smallest lattice containing `self + other`, when it is one of ours.
    fn join(self, other: Lattice) -> Option<Lattice> {
        use Lattice::*;
        match (self, other) {
            (Trivial, l) | (l, Trivial) => Some(l),
            (Naturals, Naturals) => Some(Naturals),
            (Naturals, Theta(a)) | (Theta(a), Naturals) => Some(Theta(a)),
            (Theta(a), Theta(b)) if (a - b).abs() <= TOL => Some(Theta(a)),
            _ => None,
        }
    }

    fn same(self, other: Lattice) -> bool {
        match (self, other) {
            (Lattice::Theta(a), Lattice::Theta(b)) => (a - b).abs() <= TOL,
            (a, b) => a == b,
        }
    }

    /// Lattice points in `[0, height]`.
    fn points(self, height: f64) -> Vec<f64> {
        if height < 0.0 {
            return Vec::new();
        }
        match self {
            Lattice::Trivial => vec![0.0],
            Lattice::Naturals => (0..=libm::floor(height + TOL) as u64).map(|k| k as f64).collect(),
            Lattice::Theta(a) => theta_lattice(a, height).map(|t| t.values()).unwrap_or_default(),
        }
    }
}

/// A polyhomogeneous index set.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexSet {
    /// The empty set: vanishing to infinite order (`∞`).
    Empty,
    /// `{(b.s + l, b.p) : b ∈ bases, l ∈ lattice}`.
    Generated { bases: Vec<Exponent>, lattice: Lattice },
    /// Every element with `Re s ≤ height`; nothing is known above it.
    Truncated { entries: Vec<Exponent>, height: f64 },
}

fn canonicalize(mut v: Vec<Exponent>) -> Vec<Exponent> {
    for e in v.iter_mut() {
        // Normalise signed zeros so printing and ordering are stable.
        e.s = Complex64::new(e.s.re + 0.0, e.s.im + 0.0);
    }
    v.sort_by(Exponent::canonical_cmp);
    let mut out: Vec<Exponent> = Vec::with_capacity(v.len());
    for e in v {
        if !out.iter().rev().take_while(|o| o.s.re >= e.s.re - 1e-9).any(|o| o.same_point(&e)) {
            out.push(e);
        }
    }
    out
}

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet::Empty
    }

    pub fn finite(entries: impl IntoIterator<Item = Exponent>) -> Self {
        Self::generated(entries.into_iter().collect(), Lattice::Trivial)
    }

    /// Finite set of real exponents.
    pub fn from_real(entries: &[(f64, u32)]) -> Self {
        Self::finite(entries.iter().map(|&(s, p)| Exponent::real(s, p)))
    }

    /// `ℕ₀ = {(k, 0)}`, the index set of smooth functions.
    pub fn smooth() -> Self {
        Self::generated(vec![Exponent::real(0.0, 0)], Lattice::Naturals)
    }

    pub fn generated(bases: Vec<Exponent>, lattice: Lattice) -> Self {
        let bases = canonicalize(bases);
        if bases.is_empty() {
            IndexSet::Empty
        } else {
            IndexSet::Generated { bases, lattice }
        }
    }

    pub fn truncated(entries: Vec<Exponent>, height: f64) -> Self {
        let entries: Vec<Exponent> = canonicalize(entries).into_iter().filter(|e| e.s.re <= height + TOL).collect();
        IndexSet::Truncated { entries, height }
    }

    fn from_listing(entries: Vec<Exponent>, valid: f64) -> Self {
        if valid == f64::INFINITY {
            Self::finite(entries)
        } else {
            Self::truncated(entries, valid)
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            IndexSet::Empty => true,
            IndexSet::Generated { .. } => false,
            IndexSet::Truncated { entries, .. } => entries.is_empty(),
        }
    }

    /// True when the set is finite and stored exactly.
    pub fn is_exact_finite(&self) -> bool {
        matches!(self, IndexSet::Empty | IndexSet::Generated { lattice: Lattice::Trivial, .. })
    }

    /// Height below which the description is complete (`∞` unless truncated).
    pub fn valid_height(&self) -> f64 {
        match self {
            IndexSet::Truncated { height, .. } => *height,
            _ => f64::INFINITY,
        }
    }

    /// `Re(E)`: the infimum of real parts, `+∞` for the empty set.
    pub fn min_re(&self) -> f64 {
        match self {
            IndexSet::Empty => f64::INFINITY,
            IndexSet::Generated { bases, .. } => bases.iter().map(|b| b.s.re).fold(f64::INFINITY, f64::min),
            IndexSet::Truncated { entries, height } => entries
                .iter()
                .map(|b| b.s.re)
                .fold(f64::INFINITY, f64::min)
                .min(if entries.is_empty() { *height } else { f64::INFINITY }),
        }
    }

    /// Enumeration together with the height up to which it is complete.
    fn listing(&self, height: f64) -> (Vec<Exponent>, f64) {
        match self {
            IndexSet::Empty => (Vec::new(), f64::INFINITY),
            IndexSet::Generated { bases, lattice: Lattice::Trivial } => (bases.clone(), f64::INFINITY),
            IndexSet::Generated { bases, lattice } => {
                let mut out = Vec::new();
                for b in bases {
                    for l in lattice.points(height - b.s.re) {
                        out.push(Exponent::new(b.s + l, b.p));
                    }
                }
                (canonicalize(out), height)
            }
            IndexSet::Truncated { entries, height: h } => {
                let valid = h.min(height);
                (entries.iter().copied().filter(|e| e.s.re <= valid + TOL).collect(), valid)
            }
        }
    }

    /// Every element with `Re s ≤ height`, in canonical order. Elements above a
    /// truncation height are never reported.
    pub fn entries_up_to(&self, height: f64) -> Vec<Exponent> {
        let (v, _) = self.listing(height);
        v.into_iter().filter(|e| e.s.re <= height + TOL).collect()
    }

    pub fn contains(&self, s: Complex64, p: u32) -> bool {
        let probe = Exponent::new(s, p);
        self.entries_up_to(s.re + 1.0).iter().any(|e| e.same_point(&probe))
    }

    /// `E + c = {(s + c, p)}`. Exact.
    pub fn shift(&self, c: Complex64) -> Self {
        match self {
            IndexSet::Empty => IndexSet::Empty,
            IndexSet::Generated { bases, lattice } => {
                Self::generated(bases.iter().map(|b| Exponent::new(b.s + c, b.p)).collect(), *lattice)
            }
            IndexSet::Truncated { entries, height } => {
                Self::truncated(entries.iter().map(|b| Exponent::new(b.s + c, b.p)).collect(), height + c.re)
            }
        }
    }

    pub fn shift_real(&self, c: f64) -> Self {
        self.shift(Complex64::new(c, 0.0))
    }

    /// `{(e·s, p)}` for `e > 0`, enumerated to `height` when not exact.
    pub fn scale(&self, e: f64, height: f64) -> Self {
        assert!(e > 0.0, "scale factor must be positive");
        if e == 1.0 {
            return self.clone();
        }
        let (v, valid) = self.listing(height / e);
        Self::from_listing(v.into_iter().map(|x| Exponent::new(x.s * e, x.p)).collect(), valid * e)
    }

    /// Elements satisfying `keep`, enumerated to `height` when not exact.
    pub fn filter(&self, height: f64, keep: impl Fn(&Exponent) -> bool) -> Self {
        let (v, valid) = self.listing(height);
        Self::from_listing(v.into_iter().filter(|x| keep(x)).collect(), valid)
    }

    /// Checks `(s, p) ∈ E ⇒ (s + k, p − l) ∈ E` on the part of the set that is
    /// complete below `height`.
    pub fn is_smooth_closed(&self, height: f64) -> bool {
        let h = height.min(self.valid_height());
        let entries = self.entries_up_to(h);
        let has = |s: Complex64, p: u32| entries.iter().any(|e| e.p == p && same_s(e.s, s));
        entries.iter().all(|e| (e.s.re + 1.0 > h + TOL || has(e.s + 1.0, e.p)) && (e.p == 0 || has(e.s, e.p - 1)))
    }

    /// Finite-tail condition up to `height`: finitely many elements with
    /// `Re s ≤ N` for every `N ≤ height`, all exponents finite, and log powers
    /// bounded on each vertical strip.
    pub fn satisfies_finite_tail(&self, height: f64) -> bool {
        let lattice_ok = match self {
            IndexSet::Generated { lattice: Lattice::Theta(a), .. } => *a > -1.0,
            _ => true,
        };
        let (v, _) = self.listing(height);
        lattice_ok && v.iter().all(|e| e.s.re.is_finite() && e.s.im.is_finite())
    }

    /// Set equality on the region where both descriptions are complete.
    pub fn equivalent(&self, other: &Self, height: f64) -> bool {
        let h = height.min(self.valid_height()).min(other.valid_height());
        let a = self.entries_up_to(h);
        let b = other.entries_up_to(h);
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.same_point(y))
    }
}

/// Plain union `E ∪ F`.
pub fn union(e: &IndexSet, f: &IndexSet) -> IndexSet {
    union_to(e, f, DEFAULT_HEIGHT)
}

pub fn union_to(e: &IndexSet, f: &IndexSet, height: f64) -> IndexSet {
    match (e, f) {
        (IndexSet::Empty, x) | (x, IndexSet::Empty) => x.clone(),
        (IndexSet::Generated { bases: a, lattice: la }, IndexSet::Generated { bases: b, lattice: lb })
            if la.same(*lb) =>
        {
            IndexSet::generated(a.iter().chain(b).copied().collect(), *la)
        }
        _ => {
            let (mut a, ha) = e.listing(height);
            let (b, hb) = f.listing(height);
            a.extend(b);
            IndexSet::from_listing(a, ha.min(hb))
        }
    }
}

/// Extended union `E ∪̄ F = E ∪ F ∪ {(s, p+q+1) : (s,p) ∈ E, (s,q) ∈ F}`.
pub fn extended_union(e: &IndexSet, f: &IndexSet) -> IndexSet {
    extended_union_to(e, f, DEFAULT_HEIGHT)
}

pub fn extended_union_to(e: &IndexSet, f: &IndexSet, height: f64) -> IndexSet {
    if e.is_empty() {
        return f.clone();
    }
    if f.is_empty() {
        return e.clone();
    }
    let (a, ha) = e.listing(height);
    let (b, hb) = f.listing(height);
    let mut out: Vec<Exponent> = a.iter().chain(&b).copied().collect();
    for x in &a {
        for y in &b {
            if same_s(x.s, y.s) {
                out.push(Exponent::new(x.s, x.p + y.p + 1));
            }
        }
    }
    IndexSet::from_listing(out, ha.min(hb))
}

/// Minkowski sum `E + F = {(s+t, p+q)}`.
pub fn sum(e: &IndexSet, f: &IndexSet) -> IndexSet {
    sum_to(e, f, DEFAULT_HEIGHT)
}

pub fn sum_to(e: &IndexSet, f: &IndexSet, height: f64) -> IndexSet {
    if e.is_empty() || f.is_empty() {
        return IndexSet::Empty;
    }
    if let (IndexSet::Generated { bases: a, lattice: la }, IndexSet::Generated { bases: b, lattice: lb }) = (e, f) {
        if let Some(l) = la.join(*lb) {
            let bases = a.iter().flat_map(|x| b.iter().map(move |y| Exponent::new(x.s + y.s, x.p + y.p))).collect();
            return IndexSet::generated(bases, l);
        }
    }
    let (re_e, re_f) = (e.min_re(), f.min_re());
    let (a, ha) = e.listing(height - re_f);
    let (b, hb) = f.listing(height - re_e);
    let valid = (ha + re_f).min(hb + re_e);
    let out = a.iter().flat_map(|x| b.iter().map(move |y| Exponent::new(x.s + y.s, x.p + y.p))).collect();
    IndexSet::from_listing(out, valid)
}

fn fmt_real(v: f64) -> String {
    format!("{}", v + 0.0)
}

fn fmt_s(s: Complex64) -> String {
    if s.im == 0.0 {
        fmt_real(s.re)
    } else if s.im > 0.0 {
        format!("{}+{}i", fmt_real(s.re), fmt_real(s.im))
    } else {
        format!("{}-{}i", fmt_real(s.re), fmt_real(-s.im))
    }
}

fn fmt_entries(f: &mut fmt::Formatter<'_>, entries: &[Exponent]) -> fmt::Result {
    f.write_str("{")?;
    for (k, e) in entries.iter().enumerate() {
        if k > 0 {
            f.write_str(",")?;
        }
        write!(f, "({},{})", fmt_s(e.s), e.p)?;
    }
    f.write_str("}")
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", fmt_s(self.s), self.p)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::Empty => f.write_str("inf"),
            IndexSet::Generated { bases, lattice } => {
                fmt_entries(f, bases)?;
                match lattice {
                    Lattice::Trivial => Ok(()),
                    Lattice::Naturals => f.write_str(" + N0"),
                    Lattice::Theta(a) => write!(f, " + Theta({})", fmt_real(*a)),
                }
            }
            IndexSet::Truncated { entries, height } => {
                f.write_str("trunc(")?;
                fmt_entries(f, entries)?;
                write!(f, "; {})", fmt_real(*height))
            }
        }
    }
}

/// Index sets attached to the boundary hypersurfaces of a manifold with corners.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexFamily {
    faces: Vec<(String, IndexSet)>,
}

/// Face labels of the double space: left, right, front.
pub const DOUBLE_SPACE_FACES: [&str; 3] = ["B10", "B01", "B11"];

impl IndexFamily {
    pub fn new(faces: Vec<(String, IndexSet)>) -> Self {
        IndexFamily { faces }
    }

    /// Faces labelled `0, 1, …`.
    pub fn unlabelled(sets: Vec<IndexSet>) -> Self {
        Self::new(sets.into_iter().enumerate().map(|(k, s)| (k.to_string(), s)).collect())
    }

    pub fn double_space(e10: IndexSet, e01: IndexSet, e11: IndexSet) -> Self {
        let [a, b, c] = DOUBLE_SPACE_FACES;
        Self::new(vec![(a.into(), e10), (b.into(), e01), (c.into(), e11)])
    }

    /// The small calculus: infinite-order vanishing at the side faces, smooth at the front face.
    pub fn small_calculus() -> Self {
        Self::double_space(IndexSet::Empty, IndexSet::Empty, IndexSet::smooth())
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn faces(&self) -> &[(String, IndexSet)] {
        &self.faces
    }

    pub fn set(&self, k: usize) -> &IndexSet {
        &self.faces[k].1
    }

    pub fn get(&self, label: &str) -> Option<&IndexSet> {
        self.faces.iter().find(|(l, _)| l == label).map(|(_, s)| s)
    }

    fn require(&self, label: &str) -> Result<&IndexSet> {
        self.get(label).ok_or_else(|| Error::domain(format!("family has no face labelled {label}")))
    }

    pub fn equivalent(&self, other: &Self, height: f64) -> bool {
        self.len() == other.len()
            && self.faces.iter().zip(&other.faces).all(|((la, a), (lb, b))| la == lb && a.equivalent(b, height))
    }
}

impl fmt::Display for IndexFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, (_, s)) in self.faces.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

/// Exponents `e(i, j)` of a b-map: `f*ρ_i = h ∏_j r_j^{e(i,j)}`, rows indexed
/// by target faces and columns by source faces.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    target_labels: Vec<String>,
    source_labels: Vec<String>,
}

impl LiftingMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::domain("lifting matrix rows have different lengths"));
        }
        if rows.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain("lifting matrix entries must be finite and non-negative"));
        }
        Ok(LiftingMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
            target_labels: (0..r).map(|k| k.to_string()).collect(),
            source_labels: (0..c).map(|k| k.to_string()).collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(&rows).expect("identity is valid")
    }

    pub fn with_labels(mut self, target: &[&str], source: &[&str]) -> Result<Self> {
        if target.len() != self.rows || source.len() != self.cols {
            return Err(Error::domain("label count does not match the matrix shape"));
        }
        self.target_labels = target.iter().map(|s| s.to_string()).collect();
        self.source_labels = source.iter().map(|s| s.to_string()).collect();
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn target_labels(&self) -> &[String] {
        &self.target_labels
    }

    pub fn source_labels(&self) -> &[String] {
        &self.source_labels
    }
}

/// Pullback `f#(F)`: `E_j = {(Σᵢ e(i,j) sᵢ, Σᵢ pᵢ)}` over the target faces with
/// `e(i, j) ≠ 0`. A source face hit by no target face gets `ℕ₀`.
pub fn pullback_indexset(family: &IndexFamily, e: &LiftingMatrix, height: f64) -> Result<IndexFamily> {
    if family.len() != e.rows {
        return Err(Error::domain(format!(
            "family has {} faces but the lifting matrix has {} target faces",
            family.len(),
            e.rows
        )));
    }
    let mut faces = Vec::with_capacity(e.cols);
    for j in 0..e.cols {
        let mut acc: Option<IndexSet> = None;
        for i in 0..e.rows {
            let w = e.get(i, j);
            if w == 0.0 {
                continue;
            }
            let term = family.set(i).scale(w, height);
            acc = Some(match acc {
                None => term,
                Some(a) => sum_to(&a, &term, height),
            });
        }
        faces.push((e.source_labels[j].clone(), acc.unwrap_or_else(IndexSet::smooth)));
    }
    Ok(IndexFamily::new(faces))
}

/// Pushforward `f#(E)`: `Fᵢ = ∪̄_j {(s / e(i,j), p) : (s,p) ∈ E_j}` over the
/// source faces with `e(i, j) ≠ 0`.
///
/// Faces mapped into the interior (zero column) must satisfy `Re(E_j) > 0`.
/// With `check_fibration`, a source face hitting two target faces (mapped to a
/// corner) is rejected.
pub fn pushforward_indexset(
    family: &IndexFamily,
    e: &LiftingMatrix,
    check_fibration: bool,
    height: f64,
) -> Result<IndexFamily> {
    if family.len() != e.cols {
        return Err(Error::domain(format!(
            "family has {} faces but the lifting matrix has {} source faces",
            family.len(),
            e.cols
        )));
    }
    for j in 0..e.cols {
        let hits = (0..e.rows).filter(|&i| e.get(i, j) != 0.0).count();
        if check_fibration && hits > 1 {
            return Err(Error::domain(format!(
                "source face {} maps into a corner; the map is not a b-fibration",
                e.source_labels[j]
            )));
        }
        if hits == 0 {
            let re = family.set(j).min_re();
            if !(re > 0.0) {
                return Err(Error::IntegrabilityViolation {
                    face: j,
                    detail: format!(
                        "face {} maps into the interior but Re(E) = {} is not positive",
                        e.source_labels[j], re
                    ),
                });
            }
        }
    }
    let faces = (0..e.rows)
        .map(|i| {
            let mut acc = IndexSet::Empty;
            for j in 0..e.cols {
                let w = e.get(i, j);
                if w != 0.0 {
                    acc = extended_union_to(&acc, &family.set(j).scale(1.0 / w, height), height);
                }
            }
            (e.target_labels[i].clone(), acc)
        })
        .collect();
    Ok(IndexFamily::new(faces))
}

/// How a boundary hypersurface meets the blown-up centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceIncidence {
    pub meets_center: bool,
    /// First filtration level `l` (0-based) with `(Bᵢ)^⊥ ∩ V_l ≠ {0}`.
    pub level: Option<usize>,
}

impl FaceIncidence {
    pub fn disjoint() -> Self {
        FaceIncidence { meets_center: false, level: None }
    }

    pub fn at_level(level: usize) -> Self {
        FaceIncidence { meets_center: true, level: Some(level) }
    }
}

/// Lifting matrix of a quasi-homogeneous blow-down with filtration orders
/// `orders`. Column 0 is the front face, column `i + 1` the lift of face `i`:
/// `e(i, i+1) = 1`, `e(i, 0) = d(i)`, zero elsewhere.
pub fn blowdown_lifting_matrix(faces: &[FaceIncidence], orders: &[f64]) -> Result<LiftingMatrix> {
    if orders.iter().any(|o| !(o.is_finite() && *o > 0.0)) {
        return Err(Error::domain("filtration orders must be finite and positive"));
    }
    let q = faces.len();
    let mut rows = vec![vec![0.0; q + 1]; q];
    for (i, f) in faces.iter().enumerate() {
        rows[i][i + 1] = 1.0;
        rows[i][0] = match (f.meets_center, f.level) {
            (false, None) => 0.0,
            (true, Some(l)) if l < orders.len() => orders[l],
            (true, Some(l)) => {
                return Err(Error::domain(format!(
                    "face {i} sits at filtration level {l} but only {} orders were given",
                    orders.len()
                )))
            }
            (true, None) => {
                return Err(Error::domain(format!("face {i} meets the centre but has no filtration level")))
            }
            (false, Some(_)) => {
                return Err(Error::domain(format!(
                    "face {i} is disjoint from the centre but was given a filtration level"
                )))
            }
        };
    }
    LiftingMatrix::new(&rows)
}

/// Blow-down of the corner of `M²` defining the double space, with
/// filtration orders `(1, 1+α)`. Both side faces meet the centre at level 0.
pub fn double_space_blowdown(alpha: f64) -> Result<LiftingMatrix> {
    if !(alpha > -1.0) {
        return Err(Error::domain("alpha must exceed -1"));
    }
    blowdown_lifting_matrix(&[FaceIncidence::at_level(0), FaceIncidence::at_level(0)], &[1.0, 1.0 + alpha])?
        .with_labels(&["x", "x'"], &["B11", "B10", "B01"])
}

/// Index sets of a composition `A ∘ B` in the large calculus:
///
/// `G₁₀ = (E₁₁ + F₁₀) ∪̄ E₁₀`, `G₀₁ = (E₀₁ + F₁₁) ∪̄ F₀₁`,
/// `G₁₁ = (E₁₁ + F₁₁) ∪̄ (E₁₀ + F₀₁)`, provided `Re(E₀₁ + F₁₀) > (1+α)n`.
pub fn compose_indexsets(e: &IndexFamily, f: &IndexFamily, alpha: f64, n: u32) -> Result<IndexFamily> {
    compose_indexsets_to(e, f, alpha, n, DEFAULT_HEIGHT)
}

pub fn compose_indexsets_to(e: &IndexFamily, f: &IndexFamily, alpha: f64, n: u32, height: f64) -> Result<IndexFamily> {
    let [l10, l01, l11] = DOUBLE_SPACE_FACES;
    let (e10, e01, e11) = (e.require(l10)?, e.require(l01)?, e.require(l11)?);
    let (f10, f01, f11) = (f.require(l10)?, f.require(l01)?, f.require(l11)?);
    let bound = (1.0 + alpha) * n as f64;
    let re = e01.min_re() + f10.min_re();
    if !(re > bound) {
        return Err(Error::CompositionHypothesis {
            pair: "E01 + F10".into(),
            detail: format!("Re = {re} is not above (1+alpha)n = {bound}"),
        });
    }
    let g10 = extended_union_to(&sum_to(e11, f10, height), e10, height);
    let g01 = extended_union_to(&sum_to(e01, f11, height), f01, height);
    let g11 = extended_union_to(&sum_to(e11, f11, height), &sum_to(e10, f01, height), height);
    Ok(IndexFamily::double_space(g10, g01, g11))
}

/// What the mapping theorem licenses for `A : x^a H^t → x^{a'} H^{t'}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundedness {
    Bounded,
    BoundedAndCompact,
    NotGuaranteed,
}

impl Boundedness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundedness::Bounded => "bounded",
            Boundedness::BoundedAndCompact => "bounded_and_compact",
            Boundedness::NotGuaranteed => "not_guaranteed",
        }
    }
}

/// The individual inequalities behind [`boundedness_predicate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundednessConditions {
    pub orders: bool,
    pub orders_strict: bool,
    pub right_face: bool,
    pub left_face: bool,
    pub front_face: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn boundedness_conditions(
    e: &IndexFamily,
    a: Complex64,
    a_prime: Complex64,
    t: f64,
    t_prime: f64,
    s: f64,
    alpha: f64,
    n: u32,
) -> Result<BoundednessConditions> {
    let [l10, l01, l11] = DOUBLE_SPACE_FACES;
    let bound = (1.0 + alpha) * n as f64;
    Ok(BoundednessConditions {
        orders: t_prime <= t - s,
        orders_strict: t_prime < t - s,
        right_face: e.require(l01)?.min_re() + a.re > bound,
        left_face: e.require(l10)?.min_re() - a_prime.re > bound,
        front_face: e.require(l11)?.min_re() - a_prime.re + a.re > 0.0,
    })
}

/// Strongest verdict licensed by the mapping theorem for `A ∈ Ψ^{s,E}`.
#[allow(clippy::too_many_arguments)]
pub fn boundedness_predicate(
    e: &IndexFamily,
    a: Complex64,
    a_prime: Complex64,
    t: f64,
    t_prime: f64,
    s: f64,
    alpha: f64,
    n: u32,
) -> Result<Boundedness> {
    let c = boundedness_conditions(e, a, a_prime, t, t_prime, s, alpha, n)?;
    Ok(if !(c.orders && c.right_face && c.left_face && c.front_face) {
        Boundedness::NotGuaranteed
    } else if c.orders_strict {
        Boundedness::BoundedAndCompact
    } else {
        Boundedness::Bounded
    })
}

/// Index families of the generalized inverse and the projections at weight δ.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrixIndexSets {
    /// `Σ⁺(δ) = {(γ, p) ∈ Spec : Re γ > δ}`.
    pub sigma_plus: IndexSet,
    /// `Σ⁻(δ) = {(−γ, p) : (γ, p) ∈ Spec, Re γ < δ}`.
    pub sigma_minus: IndexSet,
    /// `H = {Σ(δ), Σ(δ), ℕ₀}`.
    pub inverse: IndexFamily,
    /// `H′ = {Σ(δ), Σ(δ), ∞}`.
    pub inverse_residual: IndexFamily,
    /// `{Σ⁺(δ), Σ⁺(δ) − 2δ, ∞}`.
    pub kernel: IndexFamily,
    /// `{Σ⁻(δ) + 2δ, Σ⁻(δ), ∞}`.
    pub cokernel: IndexFamily,
}

pub fn parametrix_indexsets(spectrum: &IndexSet, delta: f64) -> Result<ParametrixIndexSets> {
    parametrix_indexsets_to(spectrum, delta, DEFAULT_HEIGHT)
}

pub fn parametrix_indexsets_to(spectrum: &IndexSet, delta: f64, height: f64) -> Result<ParametrixIndexSets> {
    let height = height.max(delta + 1.0);
    for z in spectrum.entries_up_to(delta) {
        if (delta - (z.s.re + 0.5)).abs() <= TOL * (1.0 + delta.abs()) {
            return Err(Error::WeightOnSpectrum(format!("delta = {delta} equals Re({}) + 1/2", fmt_s(z.s))));
        }
    }
    let sigma_plus = spectrum.filter(height, |z| z.s.re > delta);
    let below = spectrum.filter(height, |z| z.s.re < delta);
    let sigma_minus = match below {
        IndexSet::Truncated { .. } => {
            return Err(Error::Unsupported("spectrum below delta is only known up to a truncation height".into()))
        }
        other => IndexSet::finite(other.entries_up_to(f64::INFINITY).iter().map(|z| Exponent::new(-z.s, z.p))),
    };
    let sigma = union_to(&sigma_plus, &sigma_minus, height);
    Ok(ParametrixIndexSets {
        inverse: IndexFamily::double_space(sigma.clone(), sigma.clone(), IndexSet::smooth()),
        inverse_residual: IndexFamily::double_space(sigma.clone(), sigma, IndexSet::Empty),
        kernel: IndexFamily::double_space(sigma_plus.clone(), sigma_plus.shift_real(-2.0 * delta), IndexSet::Empty),
        cokernel: IndexFamily::double_space(sigma_minus.shift_real(2.0 * delta), sigma_minus.clone(), IndexSet::Empty),
        sigma_plus,
        sigma_minus,
    })
}

/// Boundary spectrum of the flat model: the indicial roots, with a log
/// companion for a double root.
pub fn flat_boundary_spectrum(params: &GrushinParams) -> IndexSet {
    let d = indicial_data(params);
    let (lp, lm) = (d.lambda_plus, d.lambda_minus);
    if same_s(lp, lm) {
        IndexSet::finite([Exponent::new(lp, 0), Exponent::new(lp, 1)])
    } else {
        IndexSet::finite([Exponent::new(lm, 0), Exponent::new(lp, 0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[(f64, u32)]) -> IndexSet {
        IndexSet::from_real(v)
    }

    #[test]
    fn extended_union_examples() {
        let z = set(&[(0.0, 0)]);
        assert_eq!(extended_union(&z, &z), set(&[(0.0, 0), (0.0, 1)]));
        assert_eq!(extended_union(&set(&[(1.0, 0)]), &set(&[(2.0, 0)])), set(&[(1.0, 0), (2.0, 0)]));
        assert_eq!(extended_union(&z, &IndexSet::Empty), z);
    }

    #[test]
    fn generated_sum_stays_exact() {
        let s = sum(&IndexSet::smooth(), &IndexSet::smooth());
        assert_eq!(s, IndexSet::smooth());
        let t = sum(&IndexSet::smooth(), &IndexSet::generated(vec![Exponent::real(0.5, 0)], Lattice::Theta(0.5)));
        assert_eq!(t, IndexSet::generated(vec![Exponent::real(0.5, 0)], Lattice::Theta(0.5)));
    }

    #[test]
    fn truncation_height_is_tracked() {
        let a = IndexSet::smooth();
        let b = IndexSet::generated(vec![Exponent::real(0.0, 0)], Lattice::Theta(0.5));
        let u = extended_union_to(&a, &b, 5.0);
        assert_eq!(u.valid_height(), 5.0);
        assert!(u.contains(Complex64::new(3.0, 0.0), 1));
        assert!(u.contains(Complex64::new(1.5, 0.0), 0));
        assert!(!u.contains(Complex64::new(1.5, 0.0), 1));
    }

    #[test]
    fn smooth_closure() {
        assert!(IndexSet::smooth().is_smooth_closed(10.0));
        assert!(!set(&[(0.0, 0)]).is_smooth_closed(10.0));
        let log = IndexSet::generated(vec![Exponent::real(0.0, 0), Exponent::real(0.0, 1)], Lattice::Naturals);
        assert!(log.is_smooth_closed(10.0));
        let bad = IndexSet::generated(vec![Exponent::real(0.0, 1)], Lattice::Naturals);
        assert!(!bad.is_smooth_closed(10.0));
    }

    #[test]
    fn pullback_identity_and_logs() {
        let fam = IndexFamily::unlabelled(vec![set(&[(1.0, 2)]), IndexSet::smooth()]);
        let id = LiftingMatrix::identity(2);
        assert!(pullback_indexset(&fam, &id, 10.0).unwrap().equivalent(&fam, 10.0));
        // Log powers add only over faces with e(i, j) ≠ 0.
        let e = LiftingMatrix::new(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let fam = IndexFamily::unlabelled(vec![set(&[(1.0, 2)]), set(&[(0.5, 3)])]);
        let pulled = pullback_indexset(&fam, &e, 10.0).unwrap();
        assert_eq!(pulled.set(0), &set(&[(1.0, 2)]));
        assert_eq!(pulled.set(1), &set(&[(1.5, 5)]));
    }

    #[test]
    fn pullback_through_double_space_blowdown() {
        let e = double_space_blowdown(0.5).unwrap();
        let fam = IndexFamily::unlabelled(vec![set(&[(1.0, 0)]), IndexSet::smooth()]);
        let pulled = pullback_indexset(&fam, &e, 10.0).unwrap();
        assert_eq!(pulled.get("B10"), Some(&set(&[(1.0, 0)])));
        assert_eq!(pulled.get("B01"), Some(&IndexSet::smooth()));
        // Front face: 1·1 + 1·k.
        let front = pulled.get("B11").unwrap().entries_up_to(4.0);
        assert_eq!(
            front,
            vec![Exponent::real(1.0, 0), Exponent::real(2.0, 0), Exponent::real(3.0, 0), Exponent::real(4.0, 0)]
        );
    }

    #[test]
    fn pushforward_examples() {
        let one = set(&[(1.0, 0)]);
        let fam = IndexFamily::unlabelled(vec![one.clone()]);
        let id = LiftingMatrix::identity(1);
        assert_eq!(pushforward_indexset(&fam, &id, true, 10.0).unwrap(), fam);

        let fam = IndexFamily::unlabelled(vec![one.clone(), one.clone()]);
        let e = LiftingMatrix::new(&[vec![1.0, 1.0]]).unwrap();
        let pushed = pushforward_indexset(&fam, &e, true, 10.0).unwrap();
        assert_eq!(pushed.set(0), &set(&[(1.0, 0), (1.0, 1)]));

        let fam = IndexFamily::unlabelled(vec![one, set(&[(0.0, 0)])]);
        let e = LiftingMatrix::new(&[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            pushforward_indexset(&fam, &e, true, 10.0),
            Err(Error::IntegrabilityViolation { face: 1, .. })
        ));
    }

    #[test]
    fn pushforward_rejects_corner_maps() {
        let fam = IndexFamily::unlabelled(vec![set(&[(1.0, 0)])]);
        let e = LiftingMatrix::new(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(pushforward_indexset(&fam, &e, true, 10.0).is_err());
        assert!(pushforward_indexset(&fam, &e, false, 10.0).is_ok());
    }

    #[test]
    fn blowdown_matrices() {
        let e = double_space_blowdown(0.5).unwrap();
        assert_eq!(e.row(0), &[1.0, 1.0, 0.0]);
        assert_eq!(e.row(1), &[1.0, 0.0, 1.0]);

        let e = blowdown_lifting_matrix(&[FaceIncidence::at_level(1), FaceIncidence::disjoint()], &[1.0, 1.5]).unwrap();
        assert_eq!(e.row(0), &[1.5, 1.0, 0.0]);
        assert_eq!(e.row(1), &[0.0, 0.0, 1.0]);

        let zero = double_space_blowdown(0.0).unwrap();
        assert!((0..2).all(|i| zero.get(i, 0) == 1.0));

        let bad = FaceIncidence { meets_center: true, level: None };
        assert!(blowdown_lifting_matrix(&[bad], &[1.0]).is_err());
        assert!(blowdown_lifting_matrix(&[FaceIncidence::at_level(2)], &[1.0]).is_err());
    }

    #[test]
    fn composition_examples() {
        let small = IndexFamily::small_calculus();
        let g = compose_indexsets(&small, &small, 1.0, 1).unwrap();
        assert!(g.equivalent(&small, 20.0));

        let e = IndexFamily::double_space(set(&[(2.0, 0)]), set(&[(3.0, 0)]), set(&[(0.0, 0)]));
        let f = IndexFamily::double_space(set(&[(3.0, 0)]), set(&[(3.0, 0)]), set(&[(0.0, 0)]));
        let g = compose_indexsets(&e, &f, 1.0, 1).unwrap();
        assert_eq!(g.get("B11"), Some(&set(&[(0.0, 0), (5.0, 0)])));

        let e = IndexFamily::double_space(IndexSet::Empty, set(&[(0.5, 0)]), IndexSet::Empty);
        let f = IndexFamily::double_space(set(&[(1.0, 0)]), IndexSet::Empty, IndexSet::Empty);
        assert!(matches!(compose_indexsets(&e, &f, 1.0, 1), Err(Error::CompositionHypothesis { .. })));
    }

    #[test]
    fn boundedness_examples() {
        let c0 = Complex64::new(0.0, 0.0);
        let e = IndexFamily::double_space(set(&[(3.0, 0)]), set(&[(3.0, 0)]), set(&[(1.0, 0)]));
        let v = boundedness_predicate(&e, c0, c0, 2.0, 1.0, 1.0, 1.0, 1).unwrap();
        assert_eq!(v, Boundedness::Bounded);
        let v = boundedness_predicate(&e, c0, c0, 2.0, 0.5, 1.0, 1.0, 1).unwrap();
        assert_eq!(v, Boundedness::BoundedAndCompact);
        let e = IndexFamily::double_space(set(&[(3.0, 0)]), set(&[(3.0, 0)]), set(&[(0.0, 0)]));
        let v = boundedness_predicate(&e, c0, c0, 2.0, 0.5, 1.0, 1.0, 1).unwrap();
        assert_eq!(v, Boundedness::NotGuaranteed);
    }

    #[test]
    fn parametrix_examples() {
        let spec = flat_boundary_spectrum(&GrushinParams::new(2.0, 1, 0.0).unwrap());
        assert_eq!(spec, set(&[(0.0, 0), (3.0, 0)]));
        let p = parametrix_indexsets(&spec, 2.0).unwrap();
        assert_eq!(p.sigma_plus, set(&[(3.0, 0)]));
        assert_eq!(p.sigma_minus, set(&[(0.0, 0)]));
        assert_eq!(p.kernel.get("B01"), Some(&set(&[(-1.0, 0)])));
        assert_eq!(p.cokernel.get("B10"), Some(&set(&[(4.0, 0)])));

        let p = parametrix_indexsets(&spec, -1.0).unwrap();
        assert_eq!(p.sigma_plus, spec);
        assert!(p.sigma_minus.is_empty());

        assert!(matches!(parametrix_indexsets(&spec, 0.5), Err(Error::WeightOnSpectrum(_))));
        assert!(matches!(parametrix_indexsets(&spec, 3.5), Err(Error::WeightOnSpectrum(_))));
    }

    #[test]
    fn display_forms() {
        assert_eq!(IndexSet::Empty.to_string(), "inf");
        assert_eq!(IndexSet::smooth().to_string(), "{(0,0)} + N0");
        let c = IndexSet::finite([Exponent::new(Complex64::new(0.5, -2.0), 1)]);
        assert_eq!(c.to_string(), "{(0.5-2i,1)}");
        assert_eq!(
            IndexSet::generated(vec![Exponent::real(1.0, 0)], Lattice::Theta(0.5)).to_string(),
            "{(1,0)} + Theta(0.5)"
        );
        assert_eq!(IndexSet::truncated(vec![Exponent::real(1.0, 0)], 3.0).to_string(), "trunc({(1,0)}; 3)");
    }
}
