use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use catent::linalg::CMatrix;
use catent::{Basis, DensityMatrix, Tolerances};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

pub const MATRIX_SCHEMA: &str = r#"{"dim": d, "re": [[row-major reals]], "im": [[row-major reals]]}"#;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self {
            dim: m.nrows(),
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        let check = |name: &str, rows: &[Vec<f64>]| -> Result<()> {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                bail!("matrix field \"{name}\" must be {d} rows of {d} numbers; expected {MATRIX_SCHEMA}");
            }
            Ok(())
        };
        check("re", &self.re)?;
        if let Some(im) = &self.im {
            check("im", im)?;
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            Complex64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        }))
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let m: MatrixJson = read_json(path).with_context(|| format!("expected matrix JSON {MATRIX_SCHEMA}"))?;
    m.to_matrix()
}

pub fn read_density(path: &Path, tol: &Tolerances) -> Result<DensityMatrix> {
    let raw = read_matrix(path)?;
    DensityMatrix::with_tolerances(raw, tol).with_context(|| format!("{} is not a density matrix", path.display()))
}

pub fn read_basis(path: &Path, tol: &Tolerances) -> Result<Basis> {
    let raw = read_matrix(path)?;
    Basis::with_tolerances(raw, tol).with_context(|| format!("{} is not a unitary basis matrix", path.display()))
}

/// Formats a finite float with 17 significant digits, shortest `%g`-style, always
/// containing a decimal point or exponent.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        let trimmed = if fixed.contains('.') {
            fixed.trim_end_matches('0').to_string()
        } else {
            fixed
        };
        if trimmed.ends_with('.') {
            format!("{trimmed}0")
        } else if trimmed.contains('.') {
            trimmed
        } else {
            format!("{trimmed}.0")
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

struct G17;

impl Formatter for G17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        writer.write_all(format_g17(value as f64).as_bytes())
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, G17);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Header plus rows of scalar JSON values.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        self.rows.push(row);
    }

    /// One-row table from a flat JSON object.
    pub fn from_flat(value: &Value) -> Option<Self> {
        let obj = value.as_object()?;
        if obj.values().any(|v| v.is_object() || v.is_array()) {
            return None;
        }
        Some(Self {
            header: obj.keys().cloned().collect(),
            rows: vec![obj.values().cloned().collect()],
        })
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format_g17(f),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn to_csv_bytes(table: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell))?;
    }
    Ok(w.into_inner()?)
}

pub fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(1.0), "1.0");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(0.5), "0.5");
        assert_eq!(format_g17(2.0f64.sqrt()), "1.4142135623730951");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_g17(-250.0), "-250.0");
        assert_eq!(format_g17(1e20), "1e20");
        for x in [0.1, 1.0 / 3.0, 123456.789, 1e-300, 6.02e23, -2.5e-6] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }
}
