//! Deterministic JSON metric reports.
//!
//! Keys are sorted and every float is printed like C's `%.9g`, so two
//! identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::metrics::{
    Aggregation, CalibrationCurve, DepthMetrics, Evaluation, SparsificationResult,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Where a result came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub inputs: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub aggregation: Aggregation,
    pub n_images: usize,
    pub n_pixels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<DepthMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auce: Option<CalibrationCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ause: Option<SparsificationResult>,
    pub provenance: Provenance,
}

impl MetricsReport {
    pub fn new(eval: Evaluation, provenance: Provenance) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            aggregation: eval.aggregation,
            n_images: eval.n_images,
            n_pixels: eval.n_pixels,
            depth: eval.depth,
            auce: eval.calibration,
            ause: eval.sparsification,
            provenance,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(to_canonical_json(&serde_json::to_value(self)?))
    }
}

pub fn write_report(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, report.to_json()?)?;
    Ok(())
}

/// Hex SHA-256 of the canonical JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let text = to_canonical_json(&serde_json::to_value(config)?);
    Ok(Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Pretty JSON with sorted keys and `%.9g` floats, newline-terminated.
pub fn to_canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_g9(n.as_f64().expect("json number")));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // numeric arrays stay on one line
            if items.iter().all(|x| x.is_number()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(indent + 2, out);
                write_value(x, indent + 2, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], indent + 2, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

/// C `printf("%.9g", x)`. Non-finite values have no JSON form and become
/// `null`.
pub fn format_g9(x: f64) -> String {
    const P: i32 = 9;
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (1e100, "1e+100"),
            (99999999.95, "100000000"),
            (999999999.5, "1e+09"),
            (0.000099999999996, "0.0001"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g9(x), want, "{x}");
        }
    }

    #[test]
    fn canonical_json_sorts_and_formats() {
        let v: Value =
            serde_json::from_str(r#"{"b": [1, 0.5], "a": {"z": 1e-7, "y": "s"}, "c": []}"#)
                .unwrap();
        let s = to_canonical_json(&v);
        assert_eq!(
            s,
            "{\n  \"a\": {\n    \"y\": \"s\",\n    \"z\": 1e-07\n  },\n  \"b\": [1, 0.5],\n  \"c\": []\n}\n"
        );
    }

    #[test]
    fn hash_is_stable_and_key_order_free() {
        let a: Value = serde_json::from_str(r#"{"x": 1, "y": [2, 3]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"y": [2, 3], "x": 1}"#).unwrap();
        let h = config_hash(&a).unwrap();
        assert_eq!(h, config_hash(&b).unwrap());
        assert_eq!(h.len(), 64);
    }
}
