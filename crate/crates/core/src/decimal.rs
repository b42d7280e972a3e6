//! Reals as decimal strings.
//!
//! Every real written by this crate goes through [`format_real`], which emits
//! 17 significant digits. That is enough for any `f64` to parse back to the
//! identical bit pattern.

use serde::{de, Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("not a decimal real: {s:?}")))
}

/// serde adapter: `f64` <-> decimal string.
pub mod real {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_real(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        parse_real(&s).map_err(de::Error::custom)
    }
}

/// serde adapter: `Vec<f64>` <-> array of decimal strings.
pub mod real_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_real(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_real(s).map_err(de::Error::custom))
            .collect()
    }
}

/// serde adapter: `Vec<Vec<f64>>` <-> nested arrays of decimal strings.
pub mod real_matrix {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for row in rows {
            let strs: Vec<String> = row.iter().map(|x| format_real(*x)).collect();
            seq.serialize_element(&strs)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        raw.iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse_real(s).map_err(de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// serde adapter: sparse terms `Vec<(usize, f64)>` <-> `[[index, "coeff"], ...]`.
pub mod terms {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(terms: &[(usize, f64)], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(terms.len()))?;
        for &(i, c) in terms {
            seq.serialize_element(&(i, format_real(c)))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(usize, f64)>, D::Error> {
        let raw = Vec::<(usize, String)>::deserialize(d)?;
        raw.into_iter()
            .map(|(i, s)| Ok((i, parse_real(&s).map_err(de::Error::custom)?)))
            .collect()
    }
}
