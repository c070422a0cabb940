// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Fixed numeric formatting for byte-reproducible output files.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Scientific notation with 12 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    fmt_f64(x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json_value<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Numeric(e.to_string()))?;
    round_value(&mut v);
    Ok(v)
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = to_json_value(value)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Joins formatted floats into one CSV row.
pub fn csv_row(values: &[f64]) -> String {
    let mut s = values.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}
