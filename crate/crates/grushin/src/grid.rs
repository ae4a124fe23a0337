//! Parameter grids: `start:stop:step`, comma lists and single values.

use std::fmt;

/// Endpoint slack for `start:stop:step`, relative to the number of steps.
pub const GRID_TOL: f64 = 1e-12;

const MAX_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridError(pub String);

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for GridError {}

fn err<T>(msg: impl Into<String>) -> Result<T, GridError> {
    Err(GridError(msg.into()))
}

fn number(tok: &str, what: &str) -> Result<f64, GridError> {
    let v: f64 = tok.trim().parse().map_err(|_| GridError(format!("{what}: `{tok}` is not a number")))?;
    if !v.is_finite() {
        return err(format!("{what}: `{tok}` is not finite"));
    }
    Ok(v)
}

/// Snaps `v` to 12 decimals when it is within rounding of them, so
/// `-0.9 + 38·0.05` comes out as `1`.
fn clean(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if (r - v).abs() <= GRID_TOL * v.abs().max(1.0) {
        r + 0.0
    } else {
        v
    }
}

/// Parses `start:stop:step` (inclusive within [`GRID_TOL`]), `a,b,c` or `a`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, GridError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return err("empty grid");
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return err(format!("grid `{spec}` must be start:stop:step"));
        }
        let start = number(parts[0], "grid start")?;
        let stop = number(parts[1], "grid stop")?;
        let step = number(parts[2], "grid step")?;
        if step <= 0.0 {
            return err(format!("grid step must be positive, got {step}"));
        }
        if stop < start {
            return err(format!("grid stop {stop} is below start {start}"));
        }
        let q = (stop - start) / step;
        let count = (q + GRID_TOL * q.max(1.0)).floor();
        if count.is_nan() || count >= MAX_POINTS as f64 {
            return err(format!("grid `{spec}` has too many points"));
        }
        let count = count as usize + 1;
        let mut out: Vec<f64> = (0..count).map(|i| clean(start + i as f64 * step)).collect();
        if let Some(last) = out.last_mut() {
            if (*last - stop).abs() <= GRID_TOL * q.max(1.0) * step {
                *last = stop;
            }
        }
        Ok(out)
    } else {
        spec.split(',').map(|t| number(t, "grid value")).collect()
    }
}

/// A grid of positive integers, for `n` and mode cutoffs.
pub fn parse_int_grid(spec: &str) -> Result<Vec<u32>, GridError> {
    parse_grid(spec)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                err(format!("expected a positive integer, got {v}"))
            }
        })
        .collect()
}
