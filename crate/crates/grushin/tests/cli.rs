use grushin::grid::parse_grid;
use grushin_core::params::forbidden_c;
use proptest::prelude::*;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn grushin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("grushin-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn verdicts(doc: &serde_json::Value) -> Vec<(f64, String)> {
    doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["alpha"].as_f64().unwrap(), r["verdict"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn classify_flips_at_alpha_one() {
    let doc = json(&grushin(&["classify", "--alpha", "0.25:3:0.25", "--n", "1", "--c", "0"]));
    let rows = verdicts(&doc);
    assert_eq!(rows.len(), 12);
    for (alpha, v) in rows {
        let want = match alpha {
            a if a < 1.0 => "NotESA_InfiniteDeficiency",
            1.0 => "Critical_Mu4_Indeterminate",
            _ => "EssentiallySelfAdjoint",
        };
        assert_eq!(v, want, "alpha = {alpha}");
    }
}

#[test]
fn single_point_gives_one_row() {
    let doc = json(&grushin(&["classify", "--alpha", "2", "--n", "1", "--c", "0"]));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(verdicts(&doc), vec![(2.0, "EssentiallySelfAdjoint".to_string())]);
    assert_eq!(doc["rows"][0]["mu"], 9.0);
}

#[test]
fn critical_rows_sit_on_the_curve() {
    for (alpha, n) in [(2.0, 1), (1.0, 2), (0.5, 3), (3.0, 1)] {
        let c0 = forbidden_c(alpha, n).unwrap();
        let cs = format!("{},{c0:?},{}", c0 - 0.5, c0 + 0.5);
        let out = grushin(&["classify", "--alpha", &alpha.to_string(), "--n", &n.to_string(), "--c", &cs]);
        let doc = json(&out);
        let got: Vec<_> = doc["rows"].as_array().unwrap().iter().map(|r| r["verdict"].as_str().unwrap()).collect();
        assert_eq!(
            got,
            ["EssentiallySelfAdjoint", "Critical_Mu4_Indeterminate", "NotESA_InfiniteDeficiency"],
            "alpha = {alpha}, n = {n}"
        );
    }
}

#[test]
fn bad_grid_is_a_usage_error() {
    for bad in ["1:0:0.1", "0:1:0", "0:1", "x", "0:1:-1"] {
        let out = grushin(&["classify", "--alpha", bad]);
        assert_eq!(out.status.code(), Some(2), "{bad}");
        assert!(out.stdout.is_empty());
    }
    assert_eq!(grushin(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(grushin(&["classify", "--alpha", "-1"]).status.code(), Some(2));
}

#[test]
fn csv_has_header_and_lf_endings() {
    let out = grushin(&["classify", "--alpha", "0.5,1,2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("alpha,n,c,mu,"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        &["classify", "--alpha", "-0.9:3:0.1", "--n", "1,2", "--c", "-1:1:0.5", "--threads", "4"][..],
        &["deficiency", "--alpha", "0.5,2", "--n", "1", "--c", "0,0.1", "--kmax", "4"],
        &["classify", "--alpha", "0.1:2:0.1", "--format", "csv"],
    ] {
        let a = grushin(args);
        let b = grushin(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let one = grushin(&["classify", "--alpha", "-0.9:3:0.1", "--n", "1,2", "--threads", "1"]);
    let many = grushin(&["classify", "--alpha", "-0.9:3:0.1", "--n", "1,2", "--threads", "8"]);
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn deficiency_below_threshold_is_infinite() {
    let doc = json(&grushin(&["deficiency", "--alpha", "0.5", "--n", "1", "--c", "0", "--kmax", "8"]));
    assert_eq!(doc["points"][0]["aggregate"], "infinite");
    assert_eq!(doc["points"][0]["classification_at_zero"], "limit_circle");
}

#[test]
fn indexset_extended_union() {
    let doc = json(&grushin(&["indexset", "eu({(0,0)};{(0,0)})"]));
    assert_eq!(doc["result"], "{(0,0),(0,1)}");
    let out = grushin(&["indexset", "eu({(0,0)};"]);
    assert_eq!(out.status.code(), Some(2));
    let out = grushin(&["indexset", "compose([inf;{(0,0)};N0];[{(0,0)};inf;N0])"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cayley_with_zero_gamma_is_minus_identity() {
    let doc = json(&grushin(&["extension", "build", "--family", "5", "--Gamma", "0,0,0,0"]));
    let u = &doc["u"];
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { -1.0 } else { 0.0 };
            assert_eq!(u[i][j]["re"], want);
            assert_eq!(u[i][j]["im"], 0.0);
        }
    }
}

#[test]
fn built_extension_verifies() {
    let dir = scratch("verify");
    let spec = dir.join("robin.json");
    let out = grushin(&["extension", "build", "--family", "2", "--gamma", "1.5", "--out", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&grushin(&[
        "extension",
        "verify",
        "--spec",
        spec.to_str().unwrap(),
        "--alpha",
        "0.5",
        "--n",
        "1",
        "--trials",
        "200",
    ]));
    assert_eq!(doc["passed"], true);
    // A mu > 0 spec against a mu < 0 operator is refused.
    let out =
        grushin(&["extension", "verify", "--spec", spec.to_str().unwrap(), "--alpha", "1", "--n", "1", "--c", "1"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

fn svg_attr<'a>(doc: &'a roxmltree::Document, id: &str, attr: &str) -> Option<&'a str> {
    doc.descendants().find(|n| n.attribute("id") == Some(id)).and_then(|n| n.attribute(attr))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn phase_diagram_curve_and_markers() {
    let dir = scratch("phase");
    let out = grushin(&[
        "phase-diagram",
        "--alpha",
        "0.05:3:0.05",
        "--c=-1:1:0.05",
        "--n",
        "1",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    let doc = json(&out);
    assert_eq!(doc["boundary_markers"], serde_json::json!([1.0]));
    let svg = read(&dir.join("phase_diagram.svg"));
    let xml = roxmltree::Document::parse(&svg).expect("well-formed SVG");
    assert_eq!(xml.root_element().attribute("viewBox"), Some("0 0 60 41"));
    let meta = xml.descendants().find(|n| n.has_tag_name("metadata")).unwrap();
    assert!(meta.text().unwrap().contains("phase-diagram --alpha 0.05:3:0.05"));
    // (alpha, c) = (1, 0) is cell (19, 20) of 60 x 41, centre (19.5, 41 - 20.5).
    let path = svg_attr(&xml, "critical-curve", "d").unwrap();
    assert!(path.split_whitespace().any(|p| &p[1..] == "19.5,20.5"), "{path}");
    let markers = xml.descendants().find(|n| n.attribute("id") == Some("boundary-markers")).unwrap();
    let circles: Vec<_> = markers.children().filter(|n| n.has_tag_name("circle")).collect();
    assert_eq!(circles.len(), 1);
    assert_eq!(circles[0].attribute("cx"), Some("19.5"));

    let csv = read(&dir.join("phase_diagram.csv"));
    assert!(csv.starts_with("alpha,c,n,mu,regime,verdict\n"));
    assert_eq!(csv.lines().count(), 1 + 60 * 41);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn single_cell_phase_diagram() {
    let dir = scratch("cell");
    let out =
        grushin(&["phase-diagram", "--alpha", "1", "--c", "0", "--out-dir", dir.to_str().unwrap(), "--scale", "1"]);
    assert!(out.status.success());
    let svg = read(&dir.join("phase_diagram.svg"));
    let xml = roxmltree::Document::parse(&svg).unwrap();
    let root = xml.root_element();
    assert_eq!(root.attribute("width"), Some("1"));
    assert_eq!(root.attribute("height"), Some("1"));
    assert_eq!(root.attribute("viewBox"), Some("0 0 1 1"));
    let rects: Vec<_> = xml.descendants().filter(|n| n.has_tag_name("rect")).collect();
    assert_eq!(rects.len(), 1);
    assert_eq!(rects[0].attribute("class"), Some("mu_eq_4"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn phase_diagram_honours_output_dir_variable() {
    let dir = scratch("env");
    let out = Command::new(env!("CARGO_BIN_EXE_grushin"))
        .args(["phase-diagram", "--alpha", "0.5:1.5:0.5", "--c", "0", "--stem", "slice"])
        .env("GRUSHIN_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("slice.svg").exists());
    assert!(dir.join("slice.csv").exists());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn svg_is_only_for_the_phase_diagram() {
    assert_eq!(grushin(&["classify", "--alpha", "1", "--format", "svg"]).status.code(), Some(2));
    let dir = scratch("svg");
    let out =
        grushin(&["phase-diagram", "--alpha", "1", "--c", "0", "--format", "svg", "--out-dir", dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(out.stdout, std::fs::read(dir.join("phase_diagram.svg")).unwrap());
    // A regular file cannot be an output directory.
    let blocked = dir.join("phase_diagram.csv").join("sub");
    let out = grushin(&["phase-diagram", "--alpha", "1", "--c", "0", "--out-dir", blocked.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn frobenius_certificate_and_bessel_commands() {
    let doc =
        json(&grushin(&["frobenius", "--alpha", "1", "--n", "1", "--mode", "1", "--cutoff", "12", "--certificate"]));
    assert_eq!(doc["certificate"]["passed"], true);
    let doc = json(&grushin(&["bessel", "eval", "--kind", "i", "--nu", "0.5", "--x", "1"]));
    let v = doc["values"][0]["value"].as_f64().unwrap();
    let exact = (2.0 / std::f64::consts::PI).sqrt() * 1f64.sinh();
    assert!((v - exact).abs() < 1e-14, "{v} vs {exact}");
}

#[test]
fn curvature_command_recovers_the_limit() {
    let dir = scratch("curv");
    let metric = dir.join("m.json");
    std::fs::write(&metric, r#"{"n": 1, "terms": [{"row": 0, "col": 0, "power": 1, "coeff": 1.0}]}"#).unwrap();
    let doc = json(&grushin(&["curvature", "--alpha", "1", "--n", "1", "--metric", metric.to_str().unwrap()]));
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["closed_forms"]["agree"], true);
    assert_eq!(doc["predicted_limit"], -4.0);
    std::fs::remove_dir_all(dir).unwrap();
}

proptest! {
    #[test]
    fn grid_points_are_inclusive_and_evenly_spaced(start in -50i32..50, len in 0i32..200, step in 1i32..40) {
        // Hundredths, so every value is exactly representable after snapping.
        let (a, s) = (start as f64 / 100.0, step as f64 / 100.0);
        let b = a + (len * step) as f64 / 100.0;
        let g = parse_grid(&format!("{a}:{b}:{s}")).unwrap();
        prop_assert_eq!(g.len(), len as usize + 1);
        prop_assert_eq!(g[0], a);
        prop_assert!((g[g.len() - 1] - b).abs() < 1e-12);
        for (k, v) in g.iter().enumerate() {
            prop_assert!((v - (a + k as f64 * s)).abs() < 1e-9);
        }
    }

    #[test]
    fn comma_lists_keep_their_order(v in prop::collection::vec(-100i32..100, 1..10)) {
        let text: Vec<String> = v.iter().map(|x| format!("{}", *x as f64 / 8.0)).collect();
        let g = parse_grid(&text.join(",")).unwrap();
        prop_assert_eq!(g, v.iter().map(|x| *x as f64 / 8.0).collect::<Vec<_>>());
    }
}
