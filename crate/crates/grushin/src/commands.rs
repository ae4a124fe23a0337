//! Subcommand implementations.

use crate::cli::{
    BesselKindArg, BuildArgs, ClassifyArgs, CurvatureArgs, DeficiencyArgs, EvalArgs, Format, FrobeniusArgs, GreensArgs,
    IndexsetArgs, KernelArgs, PhaseArgs, RootArg, RunConfig, VerifyArgs, OUT_DIR_ENV,
};
use crate::expr::{evaluate, EvalContext, Value as ExprValue};
use crate::files::{parse_complex, parse_complex_list, ExtensionFile, MetricFile};
use crate::grid::{parse_grid, parse_int_grid};
use crate::output::{complex, document, fmt_f64, num, to_csv_text, to_json_text, to_table_text};
use crate::phase;
use crate::sweep::par_map;
use crate::{CliError, Exit};
use grushin_core::bessel::{self, has_kernel_in_weighted_l2, kernel_solutions, BesselModelOp, Membership, Which};
use grushin_core::curvature::{
    asymptotic_check, flat_grushin_frame, flat_scalar_expanded, flat_scalar_factored, scalar_from_christoffel,
    PolynomialFourierMetric, WarpedMetric,
};
use grushin_core::deficiency::{
    classify_endpoint_zero, combine, mode_count, mode_operator, sampled_modes, Aggregate, DeficiencyReport, ModeCount,
};
use grushin_core::extensions::{
    asymmetry_form_in, greens_identity_check, maximality_witness, named_family, BoundaryJet, ExtensionSpec, Family,
    GreensOptions, ModeJet,
};
use grushin_core::frobenius::{expand, flat_model_series_data, log_grid, residual_certificate};
use grushin_core::matrix::CMatrix;
use grushin_core::params::{classify as classify_point, forbidden_c, indicial_data, GrushinParams, Root};
use grushin_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::path::PathBuf;

/// Output of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub svg: Option<String>,
    pub status: Exit,
    /// Human-readable remarks for stderr.
    pub notes: Vec<String>,
}

impl Report {
    fn new(json: Map<String, Value>, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Report {
            json: Value::Object(json),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
            svg: None,
            status: Exit::Ok,
            notes: Vec::new(),
        }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        match format {
            Format::Json => Ok(to_json_text(&self.json)),
            Format::Csv => Ok(to_csv_text(&header, &self.rows)),
            Format::Table => Ok(to_table_text(&header, &self.rows)),
            Format::Svg => {
                self.svg.clone().ok_or_else(|| CliError::usage("SVG output is only available for phase-diagram"))
            }
        }
    }
}

fn params(alpha: f64, n: u32, c: f64) -> Result<GrushinParams, CliError> {
    GrushinParams::new(alpha, n, c).map_err(|e| CliError::usage(e.to_string()))
}

fn tol_or(cfg: &RunConfig, default: f64) -> f64 {
    cfg.tol.unwrap_or(default)
}

fn fail_if(report: &mut Report, failed: bool, note: impl Into<String>) {
    if failed {
        report.status = report.status.max(Exit::CheckFailed);
        report.notes.push(note.into());
    }
}

fn modes_arg(s: &str) -> Result<Vec<i64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| CliError::usage(format!("`{t}` is not an integer mode"))))
        .collect()
}

// ---------------------------------------------------------------- classify

/// One row of the classification table.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyRow {
    pub alpha: f64,
    pub n: u32,
    pub c: f64,
    pub mu: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub verdict: &'static str,
    pub regime: &'static str,
    pub resonant: bool,
    /// `c₀(α, n)` where defined.
    pub c0: Option<f64>,
}

/// Classifies every grid point, ordered by `alpha`, then `n`, then `c`.
pub fn classify_rows(alphas: &[f64], ns: &[u32], cs: &[f64]) -> Result<Vec<ClassifyRow>, CliError> {
    let mut rows = Vec::with_capacity(alphas.len() * ns.len() * cs.len());
    for &alpha in alphas {
        for &n in ns {
            let c0 = forbidden_c(alpha, n).ok();
            for &c in cs {
                let p = params(alpha, n, c)?;
                let v = classify_point(&p);
                let d = indicial_data(&p);
                rows.push(ClassifyRow {
                    alpha,
                    n,
                    c,
                    mu: v.mu,
                    lambda_plus: d.lambda_plus,
                    lambda_minus: d.lambda_minus,
                    verdict: v.verdict.as_str(),
                    regime: v.regime.as_str(),
                    resonant: v.resonant,
                    c0,
                });
            }
        }
    }
    Ok(rows)
}

pub fn classify(a: &ClassifyArgs, _cfg: &RunConfig) -> Result<Report, CliError> {
    let rows = classify_rows(&parse_grid(&a.alpha)?, &parse_int_grid(&a.n)?, &parse_grid(&a.c)?)?;
    let mut doc = document("classify");
    doc.insert(
        "rows".into(),
        rows.iter()
            .map(|r| {
                json!({
                    "alpha": num(r.alpha),
                    "n": r.n,
                    "c": num(r.c),
                    "mu": num(r.mu),
                    "lambda_plus": complex(r.lambda_plus),
                    "lambda_minus": complex(r.lambda_minus),
                    "verdict": r.verdict,
                    "regime": r.regime,
                    "resonant": r.resonant,
                    "c0": r.c0.map_or(Value::Null, num),
                })
            })
            .collect(),
    );
    let table = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.alpha),
                r.n.to_string(),
                fmt_f64(r.c),
                fmt_f64(r.mu),
                fmt_f64(r.lambda_plus.re),
                fmt_f64(r.lambda_plus.im),
                fmt_f64(r.lambda_minus.re),
                fmt_f64(r.lambda_minus.im),
                r.verdict.to_string(),
                r.regime.to_string(),
                r.resonant.to_string(),
                r.c0.map_or(String::new(), fmt_f64),
            ]
        })
        .collect();
    Ok(Report::new(
        doc,
        &[
            "alpha",
            "n",
            "c",
            "mu",
            "lambda_plus_re",
            "lambda_plus_im",
            "lambda_minus_re",
            "lambda_minus_im",
            "verdict",
            "regime",
            "resonant",
            "c0",
        ],
        table,
    ))
}

// ----------------------------------------------------------- phase diagram

fn out_dir(explicit: &Option<PathBuf>) -> PathBuf {
    explicit
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn phase_diagram(a: &PhaseArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let alphas = parse_grid(&a.alpha)?;
    let cs = parse_grid(&a.c)?;
    if a.n == 0 {
        return Err(CliError::usage("n must be at least 1"));
    }
    if a.scale == 0 {
        return Err(CliError::usage("--scale must be at least 1"));
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) || cs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::usage("phase-diagram grids must be increasing"));
    }
    let d = phase::sample(&alphas, &cs, a.n, cfg.threads).map_err(|e| CliError::usage(e.to_string()))?;
    let svg = phase::render_svg(&d, &cfg.command_line, a.scale);

    let header = ["alpha", "c", "n", "mu", "regime", "verdict"];
    let mut rows = Vec::with_capacity(alphas.len() * cs.len());
    for &alpha in &alphas {
        for &c in &cs {
            let v = classify_point(&params(alpha, a.n, c)?);
            rows.push(vec![
                fmt_f64(alpha),
                fmt_f64(c),
                a.n.to_string(),
                fmt_f64(v.mu),
                v.regime.as_str().to_string(),
                v.verdict.as_str().to_string(),
            ]);
        }
    }
    let csv = to_csv_text(&header, &rows);

    let dir = out_dir(&a.out_dir);
    std::fs::create_dir_all(&dir)?;
    let svg_path = dir.join(format!("{}.svg", a.stem));
    let csv_path = dir.join(format!("{}.csv", a.stem));
    std::fs::write(&svg_path, &svg)?;
    std::fs::write(&csv_path, &csv)?;

    let mut counts = Map::new();
    for r in &d.cells {
        let e = counts.entry(r.as_str()).or_insert(json!(0));
        *e = json!(e.as_u64().unwrap_or(0) + 1);
    }
    let (lo, hi) = (alphas[0], *alphas.last().unwrap());
    let zeros: Vec<Value> = if cs[0] <= 0.0 && 0.0 <= *cs.last().unwrap() {
        phase::curve_zeros(lo, hi, a.n).into_iter().map(num).collect()
    } else {
        Vec::new()
    };
    let mut doc = document("phase-diagram");
    doc.insert("n".into(), json!(a.n));
    doc.insert("alpha_points".into(), json!(alphas.len()));
    doc.insert("c_points".into(), json!(cs.len()));
    doc.insert("svg".into(), json!(svg_path.to_string_lossy()));
    doc.insert("csv".into(), json!(csv_path.to_string_lossy()));
    doc.insert("regime_counts".into(), Value::Object(counts));
    doc.insert("boundary_markers".into(), Value::Array(zeros));
    let mut report = Report::new(doc, &header, rows);
    report.svg = Some(svg);
    report.notes.push(format!("wrote {} and {}", svg_path.display(), csv_path.display()));
    Ok(report)
}

// --------------------------------------------------------------- deficiency

/// Deficiency data at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyPoint {
    pub alpha: f64,
    pub n: u32,
    pub c: f64,
    pub mu: f64,
    pub nu_squared: f64,
    pub verdict: &'static str,
    pub report: Result<DeficiencyReport, grushin_core::Error>,
}

/// Counts every sampled mode of every point in parallel and combines them per
/// point, in input order.
pub fn deficiency_sweep(
    points: &[GrushinParams],
    k_max: u32,
    threads: usize,
) -> Result<Vec<DeficiencyPoint>, CliError> {
    if k_max < 1 {
        return Err(CliError::usage("--kmax must be at least 1"));
    }
    let tasks: Vec<(usize, u32)> =
        points.iter().enumerate().flat_map(|(i, p)| sampled_modes(p, k_max).into_iter().map(move |k| (i, k))).collect();
    let counts = par_map(&tasks, threads, |&(i, k)| mode_count(&points[i], k));
    let mut per_point: Vec<Result<Vec<ModeCount>, grushin_core::Error>> = vec![Ok(Vec::new()); points.len()];
    for (&(i, _), r) in tasks.iter().zip(counts) {
        match (&mut per_point[i], r) {
            (Ok(v), Ok(m)) => v.push(m),
            (slot @ Ok(_), Err(e)) => *slot = Err(e),
            (Err(_), _) => {}
        }
    }
    Ok(points
        .iter()
        .zip(per_point)
        .map(|(p, counts)| {
            let op = mode_operator(p, 0.0);
            let class = classify_endpoint_zero(&op);
            DeficiencyPoint {
                alpha: p.alpha(),
                n: p.n(),
                c: p.c(),
                mu: indicial_data(p).mu,
                nu_squared: op.nu_squared(),
                verdict: classify_point(p).verdict.as_str(),
                report: counts.map(|c| combine(c, class)),
            }
        })
        .collect())
}

pub fn deficiency(a: &DeficiencyArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let mut points = Vec::new();
    for alpha in parse_grid(&a.alpha)? {
        for n in parse_int_grid(&a.n)? {
            for c in parse_grid(&a.c)? {
                points.push(params(alpha, n, c)?);
            }
        }
    }
    let results = deficiency_sweep(&points, a.kmax, cfg.threads)?;
    let mut status = Exit::Ok;
    let mut notes = Vec::new();
    let mut json_points = Vec::new();
    let mut rows = Vec::new();
    for p in &results {
        let mut o = Map::new();
        o.insert("alpha".into(), num(p.alpha));
        o.insert("n".into(), json!(p.n));
        o.insert("c".into(), num(p.c));
        o.insert("mu".into(), num(p.mu));
        o.insert("nu_squared".into(), num(p.nu_squared));
        o.insert("verdict".into(), json!(p.verdict));
        let mut row = vec![fmt_f64(p.alpha), p.n.to_string(), fmt_f64(p.c), fmt_f64(p.mu), p.verdict.to_string()];
        match &p.report {
            Ok(r) => {
                let total = match r.aggregate {
                    Aggregate::Zero => json!(0),
                    Aggregate::Finite(v) => json!(v),
                    Aggregate::Infinite => json!("inf"),
                };
                o.insert("classification_at_zero".into(), json!(r.classification_at_zero.as_str()));
                o.insert("aggregate".into(), json!(r.aggregate.as_str()));
                o.insert("deficiency".into(), total.clone());
                o.insert(
                    "per_mode".into(),
                    r.per_mode
                        .iter()
                        .map(|m| json!({"k": m.k, "count_plus": m.count_plus, "count_minus": m.count_minus}))
                        .collect(),
                );
                row.push(r.classification_at_zero.as_str().to_string());
                row.push(r.aggregate.as_str().to_string());
                row.push(match total {
                    Value::String(s) => s,
                    v => v.to_string(),
                });
                row.push(
                    r.per_mode
                        .iter()
                        .map(|m| format!("{}:{}/{}", m.k, m.count_plus, m.count_minus))
                        .collect::<Vec<_>>()
                        .join(" "),
                );
            }
            Err(e) => {
                status = status.max(Exit::of(e));
                notes.push(format!("alpha={} n={} c={}: {e}", p.alpha, p.n, p.c));
                o.insert("error".into(), json!(e.to_string()));
                row.extend([String::new(), "error".into(), String::new(), e.to_string()]);
            }
        }
        json_points.push(Value::Object(o));
        rows.push(row);
    }
    let mut doc = document("deficiency");
    doc.insert("kmax".into(), json!(a.kmax));
    doc.insert("points".into(), Value::Array(json_points));
    let mut report =
        Report::new(doc, &["alpha", "n", "c", "mu", "verdict", "endpoint", "aggregate", "deficiency", "modes"], rows);
    report.status = status;
    report.notes = notes;
    Ok(report)
}

// ---------------------------------------------------------------- frobenius

pub fn frobenius(a: &FrobeniusArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let p = params(a.alpha, a.n, a.c)?;
    if a.kmax < 1 {
        return Err(CliError::usage("--kmax must be at least 1"));
    }
    if !(a.cutoff >= 0.0 && a.cutoff.is_finite()) {
        return Err(CliError::usage("--cutoff must be finite and non-negative"));
    }
    let data = flat_model_series_data(&p, a.kmax);
    let mode = match &a.mode {
        Some(m) => modes_arg(m)?,
        None => (0..a.n).map(|i| i64::from(i == 0)).collect(),
    };
    let seed = data.mode_seed(&mode).map_err(|e| CliError::usage(e.to_string()))?;
    let root = match a.root {
        RootArg::Plus => Root::Plus,
        RootArg::Minus => Root::Minus,
    };
    let exp = expand(&data, root, &seed, a.cutoff)?;
    let mut terms = Vec::new();
    let mut rows = Vec::new();
    for t in &exp.terms {
        let mut coeffs = Vec::new();
        for (m, z) in data.modes.iter().zip(&t.coefficients) {
            if z.norm() == 0.0 {
                continue;
            }
            coeffs.push(json!({"mode": m, "value": complex(*z)}));
            rows.push(vec![
                fmt_f64(t.grade),
                t.log_power.to_string(),
                m.iter().map(i64::to_string).collect::<Vec<_>>().join(" "),
                fmt_f64(z.re),
                fmt_f64(z.im),
            ]);
        }
        terms.push(json!({"grade": num(t.grade), "log_power": t.log_power, "coefficients": coeffs}));
    }
    let mut doc = document("frobenius");
    doc.insert("alpha".into(), num(a.alpha));
    doc.insert("n".into(), json!(a.n));
    doc.insert("c".into(), num(a.c));
    doc.insert("mode".into(), json!(mode));
    doc.insert("root".into(), json!(if root == Root::Plus { "plus" } else { "minus" }));
    doc.insert("lambda".into(), complex(exp.lambda));
    doc.insert("order_cutoff".into(), num(exp.order_cutoff));
    doc.insert("has_log_terms".into(), json!(exp.has_log_terms()));
    doc.insert("log_constant".into(), exp.log_constant.map_or(Value::Null, complex));
    doc.insert("terms".into(), Value::Array(terms));
    let mut failed = None;
    if a.certificate {
        let cert = residual_certificate(&exp, &data, &log_grid(1e-3, 0.5, 12))?;
        let tol = tol_or(cfg, 0.05);
        let passed = match cert.theta_next {
            None => cert.exponent == f64::INFINITY,
            Some(_) => (cert.exponent - cert.predicted).abs() <= tol * cert.predicted.abs().max(1.0),
        };
        doc.insert(
            "certificate".into(),
            json!({
                "exponent": num(cert.exponent),
                "predicted": num(cert.predicted),
                "theta_next": cert.theta_next.map_or(Value::Null, num),
                "log_corrected": cert.log_corrected,
                "fit_rms": num(cert.fit_rms),
                "cancellation_defect": num(cert.cancellation_defect),
                "tolerance": num(tol),
                "passed": passed,
            }),
        );
        if !passed {
            failed = Some(format!("residual decays like x^{} but x^{} was predicted", cert.exponent, cert.predicted));
        }
    }
    let mut report = Report::new(doc, &["grade", "log_power", "mode", "re", "im"], rows);
    if let Some(msg) = failed {
        fail_if(&mut report, true, msg);
    }
    Ok(report)
}

// --------------------------------------------------------------- extensions

fn family_from_args(a: &BuildArgs) -> Result<Family, CliError> {
    Ok(match a.family {
        1 => Family::Friedrichs,
        2 => Family::RightRobin { gamma: a.gamma },
        3 => Family::LeftRobin { gamma: a.gamma },
        4 => Family::Transmission { b: parse_complex(&a.b).map_err(CliError::usage)?, gamma: a.gamma },
        5 => {
            let text =
                a.big_gamma.as_deref().ok_or_else(|| CliError::usage("family 5 needs --Gamma with four entries"))?;
            let v = parse_complex_list(text).map_err(CliError::usage)?;
            if v.len() != 4 {
                return Err(CliError::usage(format!("--Gamma needs 4 entries, got {}", v.len())));
            }
            Family::Cayley { gamma: CMatrix::from_rows(&[vec![v[0], v[1]], vec![v[2], v[3]]])? }
        }
        other => return Err(CliError::usage(format!("unknown family {other}: expected 1..=5"))),
    })
}

fn matrix_rows(m: &CMatrix) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for i in 0..m.rows() {
        for (j, z) in m.row(i).iter().enumerate() {
            rows.push(vec![i.to_string(), j.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
        }
    }
    rows
}

pub fn extension_build(a: &BuildArgs, _cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = named_family(family_from_args(a)?)?;
    let file = ExtensionFile::from_spec(&spec);
    let json = serde_json::to_value(&file).map_err(|e| CliError::usage(e.to_string()))?;
    let Value::Object(map) = json else { unreachable!("structs serialize to objects") };
    Ok(Report::new(map, &["row", "col", "re", "im"], matrix_rows(&spec.u)))
}

fn random_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_jet(rng: &mut ChaCha8Rng, modes: usize) -> BoundaryJet {
    BoundaryJet::new(
        (1..=modes as i64)
            .map(|k| ModeJet::new(vec![k], [random_c(rng), random_c(rng)], [random_c(rng), random_c(rng)]))
            .collect(),
    )
}

fn admissible_jet(spec: &ExtensionSpec, rng: &mut ChaCha8Rng, modes: usize) -> BoundaryJet {
    BoundaryJet::new(
        (1..=modes as i64).map(|k| spec.admissible_mode(vec![k], [random_c(rng), random_c(rng)])).collect(),
    )
}

/// Tallies of [`verify_extension`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub unitarity_defect: f64,
    pub relation_checks: usize,
    pub relation_mismatches: usize,
    pub isotropy_checks: usize,
    pub isotropy_worst: f64,
    pub witness_checks: usize,
    pub witness_failures: usize,
}

impl VerifySummary {
    pub fn passed(&self, isotropy_tol: f64) -> bool {
        self.unitarity_defect <= 1e-12
            && self.relation_mismatches == 0
            && self.isotropy_worst <= isotropy_tol
            && self.witness_failures == 0
    }
}

/// Randomised checks of an extension: graph constraint versus the family's
/// listed relations (both directions), isotropy of admitted pairs, and
/// maximality witnesses for violating jets.
pub fn verify_extension(
    spec: &ExtensionSpec,
    sqrt_abs_mu: f64,
    trials: usize,
    seed: u64,
    modes: usize,
) -> grushin_core::Result<VerifySummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = modes.max(1);
    let mut s = VerifySummary {
        unitarity_defect: spec.u.unitarity_defect(),
        relation_checks: 0,
        relation_mismatches: 0,
        isotropy_checks: 0,
        isotropy_worst: 0.0,
        witness_checks: 0,
        witness_failures: 0,
    };
    for t in 0..trials {
        let jet = if t % 2 == 0 { admissible_jet(spec, &mut rng, modes) } else { random_jet(&mut rng, modes) };
        if let Some(f) = &spec.origin {
            s.relation_checks += 1;
            let by_graph = spec.admits(&jet, 1e-10);
            let by_relations = jet.modes.iter().all(|m| {
                let scale = m.a_plus.iter().chain(&m.a_minus).map(|z| z.norm()).fold(1.0, f64::max);
                f.relations(m).iter().all(|r| r.norm() <= 1e-10 * scale)
            });
            if by_graph != by_relations {
                s.relation_mismatches += 1;
            }
        }
        let u = admissible_jet(spec, &mut rng, modes);
        let v = admissible_jet(spec, &mut rng, modes);
        let w = asymmetry_form_in(&u, &v, spec.regime, sqrt_abs_mu)?;
        s.isotropy_checks += 1;
        s.isotropy_worst = s.isotropy_worst.max(w.norm() / (u.norm() * v.norm()).max(f64::MIN_POSITIVE));
        let bad = random_jet(&mut rng, modes);
        if let Some(idx) = spec.constraint_residuals(&bad).iter().position(|&r| r > 1e-6) {
            s.witness_checks += 1;
            match maximality_witness(spec, &bad, idx, sqrt_abs_mu) {
                Ok(wit) if wit.pairing.norm() > 1e-8 * bad.norm() && spec.admits(&wit.u, 1e-10) => {}
                _ => s.witness_failures += 1,
            }
        }
    }
    Ok(s)
}

pub fn extension_verify(a: &VerifyArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(&a.spec)?;
    let file: ExtensionFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", a.spec.display())))?;
    let spec = file.to_spec()?;
    let sqrt_abs_mu = match (a.alpha, a.n) {
        (Some(alpha), Some(n)) => {
            let p = params(alpha, n, a.c)?;
            spec.check_against(&p)?;
            indicial_data(&p).mu.abs().sqrt()
        }
        _ => 1.0,
    };
    let s = verify_extension(&spec, sqrt_abs_mu, a.trials, a.seed, a.modes)?;
    let tol = tol_or(cfg, 1e-10);
    let passed = s.passed(tol);
    let mut doc = document("extension-verify");
    doc.insert("regime".into(), json!(spec.regime.as_str()));
    doc.insert("family_id".into(), json!(spec.origin.as_ref().map(Family::kind)));
    doc.insert("trials".into(), json!(a.trials));
    doc.insert("seed".into(), json!(a.seed));
    doc.insert("unitarity_defect".into(), num(s.unitarity_defect));
    doc.insert("relation_checks".into(), json!(s.relation_checks));
    doc.insert("relation_mismatches".into(), json!(s.relation_mismatches));
    doc.insert("isotropy_checks".into(), json!(s.isotropy_checks));
    doc.insert("isotropy_worst".into(), num(s.isotropy_worst));
    doc.insert("witness_checks".into(), json!(s.witness_checks));
    doc.insert("witness_failures".into(), json!(s.witness_failures));
    doc.insert("passed".into(), json!(passed));
    let rows = vec![
        vec!["unitarity_defect".into(), fmt_f64(s.unitarity_defect)],
        vec!["relation_mismatches".into(), format!("{}/{}", s.relation_mismatches, s.relation_checks)],
        vec!["isotropy_worst".into(), fmt_f64(s.isotropy_worst)],
        vec!["witness_failures".into(), format!("{}/{}", s.witness_failures, s.witness_checks)],
        vec!["passed".into(), passed.to_string()],
    ];
    let mut report = Report::new(doc, &["check", "value"], rows);
    fail_if(&mut report, !passed, "extension checks failed");
    Ok(report)
}

fn jet_arg(s: &str, mode: &[i64]) -> Result<BoundaryJet, CliError> {
    let v = parse_complex_list(s).map_err(CliError::usage)?;
    if v.len() != 4 {
        return Err(CliError::usage(format!("a jet needs 4 entries (a+ r, a+ l, a- r, a- l), got {}", v.len())));
    }
    Ok(BoundaryJet::single(ModeJet::new(mode.to_vec(), [v[0], v[1]], [v[2], v[3]])))
}

pub fn greens_check(a: &GreensArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let p = params(a.alpha, a.n, a.c)?;
    let mode = modes_arg(&a.mode)?;
    if mode.len() != a.n as usize {
        return Err(CliError::usage(format!("--mode needs {} components", a.n)));
    }
    let u = jet_arg(&a.u, &mode)?;
    let v = jet_arg(&a.v, &mode)?;
    let g = greens_identity_check(&p, &u, &v, &GreensOptions::default())?;
    let tol = tol_or(cfg, 1e-4);
    let passed = g.passed(tol);
    let mut doc = document("extension-greens-check");
    doc.insert("alpha".into(), num(a.alpha));
    doc.insert("n".into(), json!(a.n));
    doc.insert("c".into(), num(a.c));
    doc.insert("numeric".into(), complex(g.numeric));
    doc.insert("closed_form".into(), complex(g.closed_form));
    doc.insert("relative_error".into(), num(g.relative_error));
    doc.insert("extrapolation_error".into(), num(g.extrapolation_error));
    doc.insert("table".into(), g.table.iter().map(|(e, w)| json!({"eps": num(*e), "omega": complex(*w)})).collect());
    doc.insert("tolerance".into(), num(tol));
    doc.insert("passed".into(), json!(passed));
    let rows = g
        .table
        .iter()
        .map(|(e, w)| vec![fmt_f64(*e), fmt_f64(w.re), fmt_f64(w.im)])
        .chain(std::iter::once(vec!["0".into(), fmt_f64(g.closed_form.re), fmt_f64(g.closed_form.im)]))
        .collect();
    let mut report = Report::new(doc, &["eps", "omega_re", "omega_im"], rows);
    fail_if(&mut report, !passed, format!("Green's identity off by {} (tolerance {tol})", g.relative_error));
    Ok(report)
}

// ---------------------------------------------------------------- index sets

pub fn indexset(a: &IndexsetArgs, _cfg: &RunConfig) -> Result<Report, CliError> {
    if a.alpha.is_nan() || a.alpha <= -1.0 || a.n == 0 {
        return Err(CliError::usage("need alpha > -1 and n >= 1"));
    }
    if !(a.height > 0.0 && a.height.is_finite()) {
        return Err(CliError::usage("--height must be positive"));
    }
    let ctx = EvalContext { alpha: a.alpha, n: a.n, height: a.height };
    let v = evaluate(&a.expr, &ctx)?;
    let mut doc = document("indexset");
    doc.insert("input".into(), json!(a.expr));
    doc.insert("result".into(), json!(v.to_string()));
    let rows = match &v {
        ExprValue::Set(s) => {
            doc.insert("kind".into(), json!("set"));
            doc.insert("min_re".into(), num(s.min_re()));
            doc.insert("valid_height".into(), num(s.valid_height()));
            vec![vec![String::new(), s.to_string()]]
        }
        ExprValue::Family(f) => {
            doc.insert("kind".into(), json!("family"));
            doc.insert(
                "faces".into(),
                f.faces().iter().map(|(l, s)| json!({"label": l, "set": s.to_string()})).collect(),
            );
            f.faces().iter().map(|(l, s)| vec![l.clone(), s.to_string()]).collect()
        }
    };
    Ok(Report::new(doc, &["face", "set"], rows))
}

// ---------------------------------------------------------------- curvature

/// `−αn(αn+α+2)` as printed.
pub const FACTORED_FORM: &str = "-alpha*n*(alpha*n + alpha + 2)";
/// `−(2αn + α²n + α²n²)` as printed.
pub const EXPANDED_FORM: &str = "-(2*alpha*n + alpha^2*n + alpha^2*n^2)";

pub fn curvature(a: &CurvatureArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let p = params(a.alpha, a.n, 0.0)?;
    if !(a.x_min > 0.0 && a.x_min < a.x_max && a.x_max <= 0.5) || a.points < 3 {
        return Err(CliError::usage("need 0 < x-min < x-max <= 0.5 and at least 3 points"));
    }
    let factored = flat_scalar_factored(p.alpha(), p.n());
    let expanded = flat_scalar_expanded(p.alpha(), p.n());
    let mut frame_err: f64 = 0.0;
    for x in [0.05, 0.25, 1.0, 4.0] {
        let (g, dg) = flat_grushin_frame(p.alpha(), p.n(), x);
        let s = scalar_from_christoffel(&g, &dg)?;
        let expect = factored / (x * x);
        frame_err = frame_err.max((s - expect).abs() / expect.abs().max(1.0 / (x * x)));
    }
    let leaf = match &a.metric {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let file: MetricFile =
                serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            if file.n != a.n as usize {
                return Err(CliError::usage(format!("metric file is for n = {}, not {}", file.n, a.n)));
            }
            file.to_metric()?
        }
        None => PolynomialFourierMetric::flat(a.n as usize),
    };
    let metric = WarpedMetric::new(p.alpha(), leaf)?;
    let check = asymptotic_check(&metric, &log_grid(a.x_min, a.x_max, a.points))?;
    let tol = tol_or(cfg, 0.01);
    let forms_agree = factored == expanded;
    let passed = check.passed(tol) && frame_err <= 1e-10 && forms_agree;

    let mut doc = document("curvature");
    doc.insert("alpha".into(), num(a.alpha));
    doc.insert("n".into(), json!(a.n));
    doc.insert(
        "closed_forms".into(),
        json!({
            "factored": {"formula": FACTORED_FORM, "value": num(factored)},
            "expanded": {"formula": EXPANDED_FORM, "value": num(expanded)},
            "agree": forms_agree,
        }),
    );
    doc.insert("frame_formula_error".into(), num(frame_err));
    doc.insert("predicted_limit".into(), num(check.predicted));
    doc.insert(
        "fits".into(),
        check
            .fits
            .iter()
            .map(|f| {
                json!({
                    "y": f.y.iter().map(|v| num(*v)).collect::<Vec<_>>(),
                    "limit": num(f.limit),
                    "remainder_exponent": num(f.remainder_exponent),
                })
            })
            .collect(),
    );
    doc.insert("limit_error".into(), num(check.limit_error()));
    doc.insert("tolerance".into(), num(tol));
    doc.insert("passed".into(), json!(passed));
    let rows = check
        .fits
        .iter()
        .map(|f| {
            vec![
                f.y.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" "),
                fmt_f64(f.limit),
                fmt_f64(check.predicted),
                fmt_f64(f.remainder_exponent),
            ]
        })
        .collect();
    let mut report = Report::new(doc, &["y", "limit", "predicted", "remainder_exponent"], rows);
    fail_if(&mut report, !passed, format!("curvature limit {} vs predicted {}", check.worst_limit(), check.predicted));
    Ok(report)
}

// ------------------------------------------------------------------- bessel

pub fn bessel_eval(a: &EvalArgs, _cfg: &RunConfig) -> Result<Report, CliError> {
    let xs = parse_grid(&a.x)?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &x in &xs {
        let (v, d) = match (a.kind, a.scaled) {
            (BesselKindArg::I, true) => (bessel::bessel_i_scaled(x, a.nu)?, None),
            (BesselKindArg::K, true) => (bessel::bessel_k_scaled(x, a.nu)?, None),
            (BesselKindArg::Itilde, true) => (bessel::bessel_i_tilde_scaled(x, a.nu)?, None),
            (BesselKindArg::Ktilde, true) => (bessel::bessel_k_tilde_scaled(x, a.nu)?, None),
            (kind, false) => {
                let (v, d) = match kind {
                    BesselKindArg::I => bessel::bessel_i_with_derivative(x, a.nu)?,
                    BesselKindArg::K => bessel::bessel_k_with_derivative(x, a.nu)?,
                    BesselKindArg::Itilde => bessel::bessel_i_tilde_with_derivative(x, a.nu)?,
                    BesselKindArg::Ktilde => bessel::bessel_k_tilde_with_derivative(x, a.nu)?,
                };
                (v, a.derivative.then_some(d))
            }
        };
        let mut o = json!({"x": num(x), "value": num(v)});
        let mut row = vec![fmt_f64(x), fmt_f64(v)];
        if let Some(d) = d {
            o["derivative"] = num(d);
            row.push(fmt_f64(d));
        }
        values.push(o);
        rows.push(row);
    }
    let kind = match a.kind {
        BesselKindArg::I => "I",
        BesselKindArg::K => "K",
        BesselKindArg::Itilde => "Itilde",
        BesselKindArg::Ktilde => "Ktilde",
    };
    let mut doc = document("bessel-eval");
    doc.insert("kind".into(), json!(kind));
    doc.insert("nu".into(), num(a.nu));
    doc.insert("scaled".into(), json!(a.scaled));
    doc.insert("values".into(), Value::Array(values));
    let header: &[&str] = if a.derivative { &["x", "value", "derivative"] } else { &["x", "value"] };
    Ok(Report::new(doc, header, rows))
}

pub fn bessel_kernel(a: &KernelArgs, _cfg: &RunConfig) -> Result<Report, CliError> {
    let op = BesselModelOp::new(a.a, a.b, a.h, a.beta, a.delta)?;
    let pair = kernel_solutions(&op)?;
    let predicate = has_kernel_in_weighted_l2(&op);
    let mut doc = document("bessel-kernel");
    doc.insert("mu".into(), num(op.mu()));
    doc.insert("nu".into(), num(pair.nu));
    doc.insert("order".into(), json!(if pair.order_kind == bessel::OrderKind::Real { "real" } else { "imaginary" }));
    doc.insert("exponent_prefix".into(), num(pair.exponent_prefix));
    doc.insert("argument_scale".into(), num(pair.argument_scale));
    doc.insert("in_weighted_l2".into(), json!(predicate));
    let mut rows = vec![vec!["predicate".into(), predicate.to_string()]];
    let mut disagree = false;
    if a.oracle {
        let rep = bessel::weighted_l2_membership_oracle(&op, Which::U2)?;
        let verdict = match rep.verdict {
            Membership::InL2 => "in_l2",
            Membership::NotInL2 => "not_in_l2",
            Membership::Inconclusive => "inconclusive",
        };
        disagree = match rep.verdict {
            Membership::InL2 => !predicate,
            Membership::NotInL2 => predicate,
            Membership::Inconclusive => false,
        };
        doc.insert(
            "oracle".into(),
            json!({
                "verdict": verdict,
                "fitted_exponent": num(rep.fitted_exponent),
                "uncertainty": num(rep.uncertainty),
                "grows_at_infinity": rep.grows_at_infinity,
                "agrees": !disagree,
            }),
        );
        rows.push(vec!["oracle".into(), verdict.into()]);
    }
    let mut report = Report::new(doc, &["check", "value"], rows);
    fail_if(&mut report, disagree, "quadrature oracle disagrees with the predicate");
    Ok(report)
}
