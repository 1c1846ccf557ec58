//! Canonical JSON: sorted object keys, floats as `{:.16e}` (17 significant
//! digits), compact separators. Identical values always produce identical
//! bytes, which is what the payload hashes are taken over.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64")));
            } else {
                write!(out, "{n}").expect("string write");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push(':');
                write_value(out, &map[k]);
            }
            out.push('}');
        }
    }
}

pub fn to_canonical_value(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v);
    out
}

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(to_canonical_value(&serde_json::to_value(value)?))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything needed to reproduce a run's payload byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: Value,
    pub seed: u64,
    pub tool_version: String,
    /// Content hashes of the fixture files the run depended on.
    pub fixtures: std::collections::BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: Value, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            params,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            fixtures: Default::default(),
        }
    }

    pub fn with_fixture(mut self, name: &str, contents: &str) -> Self {
        self.fixtures.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        self
    }
}

/// A report on disk: the hashed payload plus unhashed run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub payload: Value,
    pub payload_sha256: String,
    pub meta: Value,
}

impl Envelope {
    pub fn new<T: Serialize>(manifest: &RunManifest, body: &T, meta: Value) -> Result<Self> {
        let payload = serde_json::json!({
            "manifest": serde_json::to_value(manifest)?,
            "report": serde_json::to_value(body)?,
        });
        let payload_sha256 = sha256_hex(to_canonical_value(&payload).as_bytes());
        Ok(Self {
            payload,
            payload_sha256,
            meta,
        })
    }

    pub fn payload_canonical(&self) -> String {
        to_canonical_value(&self.payload)
    }

    pub fn to_canonical(&self) -> Result<String> {
        to_canonical_string(self)
    }
}

/// Host-dependent metadata kept out of the payload hash.
pub fn run_meta(threads: usize) -> Value {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    serde_json::json!({
        "unix_time": secs,
        "threads": threads,
        "os": std::env::consts::OS,
        "arch": std::env::consts::ARCH,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let v = json!({"b": 1.5, "a": [1, -2, 0.1], "c": {"z": null, "y": "q\"s"}});
        assert_eq!(
            to_canonical_value(&v),
            r#"{"a":[1,-2,1.0000000000000001e-1],"b":1.5000000000000000e0,"c":{"y":"q\"s","z":null}}"#
        );
        let back: Value = serde_json::from_str(&to_canonical_value(&v)).unwrap();
        assert_eq!(back["a"][2].as_f64(), Some(0.1));
    }

    #[test]
    fn payload_hash_ignores_meta() {
        let m = RunManifest::new("verify", json!({"suite": "prop0"}), 7);
        let a = Envelope::new(&m, &json!({"x": 1.0}), run_meta(1)).unwrap();
        let b = Envelope::new(&m, &json!({"x": 1.0}), json!({"unix_time": 0})).unwrap();
        assert_eq!(a.payload_sha256, b.payload_sha256);
        assert_eq!(a.payload_sha256, sha256_hex(a.payload_canonical().as_bytes()));
        let c = Envelope::new(&m, &json!({"x": 1.0000000000000002}), run_meta(1)).unwrap();
        assert_ne!(a.payload_sha256, c.payload_sha256);
    }
}
