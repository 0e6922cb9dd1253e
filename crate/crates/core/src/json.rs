//! Canonical JSON output and the shared matrix schema
//! `{ "dim": n, "entries": [[re, im], ...] }`.
//!
//! Canonical output sorts object keys and prints every float with 17
//! significant digits, so parsing a document and writing it again yields the
//! same bytes.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize through a `Value` (sorted keys) with fixed float formatting.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)?;
    canonical_value_string(&value)
}

pub fn canonical_value_string(value: &Value) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Parse and re-emit canonically.
pub fn recanonicalize(text: &str) -> Result<String> {
    let value: Value = serde_json::from_str(text)?;
    canonical_value_string(&value)
}

pub fn complex_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn vec_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.entries().iter().map(|&z| complex_pair(z)).collect()
}

pub fn pairs_to_vec(pairs: &[[f64; 2]]) -> CVec {
    CVec::new(pairs.iter().map(|p| C64::new(p[0], p[1])).collect())
}

/// Wire form of a square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        MatrixJson { dim: m.dim(), entries: m.entries().iter().map(|&z| complex_pair(z)).collect() }
    }
}

impl TryFrom<MatrixJson> for CMat {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<CMat> {
        if m.entries.len() != m.dim * m.dim {
            return Err(Error::Format(format!(
                "dim {} requires {} entries, found {}",
                m.dim,
                m.dim * m.dim,
                m.entries.len()
            )));
        }
        if m.entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite matrix entry".into()));
        }
        CMat::from_entries(m.dim, m.entries.iter().map(|p| C64::new(p[0], p[1])).collect())
    }
}

pub fn parse_matrix(text: &str) -> Result<CMat> {
    let m: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    m.try_into()
}

/// `+inf` margins are written as `null` and read back as `+inf`.
pub mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
