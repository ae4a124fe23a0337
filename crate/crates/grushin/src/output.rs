//! JSON, CSV and number formatting shared by the subcommands.
//!
//! Floats are written in shortest round-trip form, so identical runs give
//! byte-identical files.

use grushin_core::Complex64;
use serde_json::{json, Map, Value};

/// Version of every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// JSON number for finite values; `"inf"`, `"-inf"` or `"nan"` otherwise.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v + 0.0)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

/// Shortest round-trip text of a float, as used in CSV cells.
pub fn fmt_f64(v: f64) -> String {
    match num(v) {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

/// Starts a document with `schema_version` and `command`.
pub fn document(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// CSV text with a header row and LF line endings.
pub fn to_csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV input is UTF-8")
}

/// Plain-text table with left-aligned columns.
pub fn to_table_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (k, (c, w)) in cells.zip(&width).enumerate() {
            if k > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            s.extend(std::iter::repeat(' ').take(w - c.chars().count()));
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(&mut header.iter().copied());
    for r in rows {
        out.push_str(&line(&mut r.iter().map(String::as_str)));
    }
    out
}
