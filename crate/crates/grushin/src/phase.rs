//! The (α, c) phase diagram at fixed `n`: regime per grid cell, the critical
//! curve `c₀(α)` and its zeros.

use crate::sweep::par_map;
use grushin_core::params::{classify, forbidden_c, GrushinParams, Regime};
use std::fmt::Write;

/// Sampled regimes, row-major with `c` as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub n: u32,
    pub alphas: Vec<f64>,
    pub cs: Vec<f64>,
    pub cells: Vec<Regime>,
}

impl PhaseDiagram {
    pub fn regime(&self, i_alpha: usize, j_c: usize) -> Regime {
        self.cells[j_c * self.alphas.len() + i_alpha]
    }
}

/// Classifies every grid point, one `c` row per task.
pub fn sample(alphas: &[f64], cs: &[f64], n: u32, threads: usize) -> grushin_core::Result<PhaseDiagram> {
    for &a in alphas {
        GrushinParams::new(a, n, 0.0)?;
    }
    let rows = par_map(cs, threads, |&c| {
        alphas
            .iter()
            .map(|&a| classify(&GrushinParams::new(a, n, c).expect("alpha checked above")).regime)
            .collect::<Vec<_>>()
    });
    Ok(PhaseDiagram { n, alphas: alphas.to_vec(), cs: cs.to_vec(), cells: rows.into_iter().flatten().collect() })
}

/// Pieces of `c = c₀(α)` over `[lo, hi]`, broken where `c₀` is undefined or
/// jumps across a pole. Grid values in `extra` are included exactly.
pub fn critical_curve(lo: f64, hi: f64, n: u32, extra: &[f64], samples: usize) -> Vec<Vec<(f64, f64)>> {
    let mut xs: Vec<f64> = (0..samples.max(2))
        .map(|k| lo + (hi - lo) * k as f64 / (samples.max(2) - 1) as f64)
        .chain(extra.iter().copied().filter(|a| (lo..=hi).contains(a)))
        .chain(curve_zeros(lo, hi, n))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut pieces: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut cur: Vec<(f64, f64)> = Vec::new();
    let mut prev_denom_sign = 0.0;
    for a in xs {
        let nf = n as f64;
        let denom_sign = (a * (2.0 + a + a * nf)).signum();
        match forbidden_c(a, n) {
            Ok(c) if c.is_finite() && (cur.is_empty() || denom_sign == prev_denom_sign) => cur.push((a, c)),
            Ok(c) if c.is_finite() => {
                pieces.push(std::mem::take(&mut cur));
                cur.push((a, c));
            }
            _ => {
                if !cur.is_empty() {
                    pieces.push(std::mem::take(&mut cur));
                }
            }
        }
        prev_denom_sign = denom_sign;
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    pieces
}

/// `α` in `[lo, hi]` with `c₀(α) = 0`, i.e. `αn ∈ {1, −3}`.
pub fn curve_zeros(lo: f64, hi: f64, n: u32) -> Vec<f64> {
    let nf = n as f64;
    [-3.0 / nf, 1.0 / nf].into_iter().filter(|a| *a > -1.0 && (lo..=hi).contains(a)).collect()
}

pub fn regime_color(r: Regime) -> &'static str {
    match r {
        Regime::MuGt4 => "#4c9f70",
        Regime::MuIn0To4 => "#f2c14e",
        Regime::MuNeg => "#d1495b",
        Regime::MuEq4 => "#1d3557",
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\n' && c != '\t' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Position of `v` in cell units along a sorted grid: grid value `k` sits at
/// `k + 0.5`, linear in between and beyond the ends.
fn cell_coord(grid: &[f64], v: f64) -> f64 {
    match grid.len() {
        0 => f64::NAN,
        1 => 0.5 + (v - grid[0]),
        len => {
            let k = grid.partition_point(|&g| g <= v).clamp(1, len - 1);
            let (g0, g1) = (grid[k - 1], grid[k]);
            (k - 1) as f64 + 0.5 + (v - g0) / (g1 - g0)
        }
    }
}

fn coord(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// SVG with one user unit per grid cell (`scale` pixels each), `c` growing
/// upwards, the critical curve and its zeros on `c = 0`. The command line is
/// stored in `<metadata>`.
pub fn render_svg(d: &PhaseDiagram, command_line: &str, scale: u32) -> String {
    let (na, nc) = (d.alphas.len(), d.cs.len());
    let (w, h) = (na as f64, nc as f64);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {na} {nc}" shape-rendering="crispEdges">"#,
        na as u64 * scale as u64,
        nc as u64 * scale as u64
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", xml_escape(command_line));
    let _ = writeln!(s, "<title>Regimes of the curvature Laplacian, n = {}</title>", d.n);
    let _ = writeln!(s, r#"<g id="regions">"#);
    for j in 0..nc {
        let y = nc - 1 - j;
        let mut i = 0;
        while i < na {
            let r = d.regime(i, j);
            let start = i;
            while i < na && d.regime(i, j) == r {
                i += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect class="{}" x="{start}" y="{y}" width="{}" height="1" fill="{}"/>"#,
                r.as_str(),
                i - start,
                regime_color(r)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let stroke = coord((w.max(h) / 200.0).max(0.02));
    let (lo, hi) = match (d.alphas.first(), d.alphas.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    };
    let to_xy = |a: f64, c: f64| (cell_coord(&d.alphas, a), h - cell_coord(&d.cs, c));
    let mut path = String::new();
    for piece in critical_curve(lo, hi, d.n, &d.alphas, 4 * na + 1) {
        let pts: Vec<(f64, f64)> = piece.iter().map(|&(a, c)| to_xy(a, c)).collect();
        if pts.len() < 2 {
            continue;
        }
        for (k, (x, y)) in pts.iter().enumerate() {
            let _ = write!(path, "{}{},{} ", if k == 0 { "M" } else { "L" }, coord(*x), coord(*y));
        }
    }
    if !path.is_empty() {
        let _ = writeln!(
            s,
            r#"<path id="critical-curve" d="{}" fill="none" stroke="black" stroke-width="{stroke}"/>"#,
            path.trim_end()
        );
    }
    let (cmin, cmax) = match (d.cs.first(), d.cs.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 0.0),
    };
    let _ = writeln!(s, r#"<g id="boundary-markers">"#);
    if (cmin..=cmax).contains(&0.0) {
        for a in curve_zeros(lo, hi, d.n) {
            let (x, y) = to_xy(a, 0.0);
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="{}" fill="white" stroke="black" stroke-width="{stroke}"><title>alpha = {}</title></circle>"#,
                coord(x),
                coord(y),
                coord((w.max(h) / 80.0).max(0.1)),
                crate::output::fmt_f64(a)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
