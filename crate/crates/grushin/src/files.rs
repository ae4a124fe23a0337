//! On-disk formats: extension specs, metric files, and complex-number flags.

use grushin_core::curvature::{MetricTerm, PolynomialFourierMetric, Wave};
use grushin_core::extensions::{ExtensionSpec, Family, FormRegime};
use grushin_core::matrix::CMatrix;
use grushin_core::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexFile {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexFile {
    fn from(z: Complex64) -> Self {
        ComplexFile { re: z.re + 0.0, im: z.im + 0.0 }
    }
}

impl From<ComplexFile> for Complex64 {
    fn from(z: ComplexFile) -> Self {
        Complex64::new(z.re, z.im)
    }
}

fn matrix_to_file(m: &CMatrix) -> Vec<Vec<ComplexFile>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(|&z| z.into()).collect()).collect()
}

fn matrix_from_file(rows: &[Vec<ComplexFile>]) -> Result<CMatrix> {
    CMatrix::from_rows(&rows.iter().map(|r| r.iter().map(|&z| z.into()).collect()).collect::<Vec<_>>())
}

/// Parameters of a named family, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FamilyFile {
    Friedrichs,
    RightRobin { gamma: f64 },
    LeftRobin { gamma: f64 },
    Transmission { b: ComplexFile, gamma: f64 },
    Cayley { gamma: Vec<Vec<ComplexFile>> },
}

impl FamilyFile {
    pub fn from_family(f: &Family) -> Self {
        match f {
            Family::Friedrichs => FamilyFile::Friedrichs,
            Family::RightRobin { gamma } => FamilyFile::RightRobin { gamma: *gamma },
            Family::LeftRobin { gamma } => FamilyFile::LeftRobin { gamma: *gamma },
            Family::Transmission { b, gamma } => FamilyFile::Transmission { b: (*b).into(), gamma: *gamma },
            Family::Cayley { gamma } => FamilyFile::Cayley { gamma: matrix_to_file(gamma) },
        }
    }

    pub fn to_family(&self) -> Result<Family> {
        Ok(match self {
            FamilyFile::Friedrichs => Family::Friedrichs,
            FamilyFile::RightRobin { gamma } => Family::RightRobin { gamma: *gamma },
            FamilyFile::LeftRobin { gamma } => Family::LeftRobin { gamma: *gamma },
            FamilyFile::Transmission { b, gamma } => Family::Transmission { b: (*b).into(), gamma: *gamma },
            FamilyFile::Cayley { gamma } => Family::Cayley { gamma: matrix_from_file(gamma)? },
        })
    }
}

/// JSON form of an [`ExtensionSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionFile {
    pub schema_version: u32,
    pub kind: String,
    pub regime: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_id: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyFile>,
    pub u: Vec<Vec<ComplexFile>>,
}

pub const EXTENSION_KIND: &str = "extension_spec";

impl ExtensionFile {
    pub fn from_spec(spec: &ExtensionSpec) -> Self {
        ExtensionFile {
            schema_version: crate::output::SCHEMA_VERSION,
            kind: EXTENSION_KIND.into(),
            regime: spec.regime.as_str().into(),
            family_id: spec.origin.as_ref().map(Family::kind),
            family: spec.origin.as_ref().map(FamilyFile::from_family),
            u: matrix_to_file(&spec.u),
        }
    }

    pub fn to_spec(&self) -> Result<ExtensionSpec> {
        if self.kind != EXTENSION_KIND {
            return Err(Error::Domain(format!("expected kind `{EXTENSION_KIND}`, got `{}`", self.kind)));
        }
        if self.schema_version != crate::output::SCHEMA_VERSION {
            return Err(Error::Domain(format!("unsupported schema_version {}", self.schema_version)));
        }
        let regime = match self.regime.as_str() {
            "mu_neg" => FormRegime::MuNeg,
            "mu_pos" => FormRegime::MuPos,
            other => return Err(Error::Domain(format!("unknown regime `{other}`"))),
        };
        let mut spec = ExtensionSpec::new(regime, matrix_from_file(&self.u)?)?;
        spec.origin = self.family.as_ref().map(FamilyFile::to_family).transpose()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveFile {
    Cos,
    Sin,
}

/// `coeff · x^power · wave(k·y)` on entries `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTermFile {
    pub row: usize,
    pub col: usize,
    pub power: u32,
    pub coeff: f64,
    #[serde(default)]
    pub k: Vec<i64>,
    #[serde(default = "default_wave")]
    pub wave: WaveFile,
}

fn default_wave() -> WaveFile {
    WaveFile::Cos
}

/// Metric file: `g_{x,Z} = Id + Σ terms` on `Tⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFile {
    pub n: usize,
    #[serde(default)]
    pub terms: Vec<MetricTermFile>,
}

impl MetricFile {
    pub fn to_metric(&self) -> Result<PolynomialFourierMetric> {
        PolynomialFourierMetric::new(
            self.n,
            self.terms
                .iter()
                .map(|t| MetricTerm {
                    row: t.row,
                    col: t.col,
                    power: t.power,
                    coeff: t.coeff,
                    k: t.k.clone(),
                    wave: match t.wave {
                        WaveFile::Cos => Wave::Cos,
                        WaveFile::Sin => Wave::Sin,
                    },
                })
                .collect(),
        )
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (`i` alone means `1i`).
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("`{s}` is not a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    let real = |p: &str| -> std::result::Result<f64, String> {
        let v: f64 = p.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let imag = |p: &str| -> std::result::Result<f64, String> {
        match p {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => real(p),
        }
    };
    if let Some(body) = t.strip_suffix('i') {
        // Split at the last sign that is not part of an exponent or the leading sign.
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        match split {
            Some(k) => Ok(Complex64::new(real(&body[..k])?, imag(&body[k..])?)),
            None => Ok(Complex64::new(0.0, imag(body)?)),
        }
    } else {
        Ok(Complex64::new(real(&t)?, 0.0))
    }
}

/// Comma-separated complex numbers.
pub fn parse_complex_list(s: &str) -> std::result::Result<Vec<Complex64>, String> {
    s.split(',').map(parse_complex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use grushin_core::extensions::named_family;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("1").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("-2.5i").unwrap(), c(0.0, -2.5));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("-1e-3-i").unwrap(), c(-1e-3, -1.0));
        assert_eq!(parse_complex("1e+2+1e-2i").unwrap(), c(100.0, 0.01));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        for bad in ["", "x", "1+", "1+2j", "inf"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn extension_files_round_trip() {
        let spec = named_family(Family::Transmission { b: Complex64::new(0.3, -1.2), gamma: 0.7 }).unwrap();
        let text = serde_json::to_string(&ExtensionFile::from_spec(&spec)).unwrap();
        let back: ExtensionFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_spec().unwrap(), spec);
    }

    #[test]
    fn metric_file_defaults() {
        let m: MetricFile =
            serde_json::from_str(r#"{"n":1,"terms":[{"row":0,"col":0,"power":1,"coeff":1.0}]}"#).unwrap();
        let g = m.to_metric().unwrap();
        assert_eq!(g.terms()[0].wave, Wave::Cos);
        let bad: MetricFile =
            serde_json::from_str(r#"{"n":1,"terms":[{"row":1,"col":0,"power":1,"coeff":1.0}]}"#).unwrap();
        assert!(bad.to_metric().is_err());
    }
}
