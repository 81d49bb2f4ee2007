//! `{"domain": ..., "n"|"F"|"B": int, "entries": [{"freq", "re", "im"}]}` interchange format.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::spectral::{BooleanSpectrum, CyclicSpectrum, FreqVec, TorusSpectrum};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    freq: Value,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    domain: String,
    n: Option<usize>,
    #[serde(rename = "F")]
    f: Option<u64>,
    #[serde(rename = "B")]
    b: Option<u64>,
    entries: Vec<RawEntry>,
}

fn parse(v: &Value, domain: &str) -> Result<RawSpectrum> {
    let raw: RawSpectrum = serde_json::from_value(v.clone()).map_err(|e| Error::Json(e.to_string()))?;
    if raw.domain != domain {
        return Err(Error::Json(format!("expected domain `{domain}`, found `{}`", raw.domain)));
    }
    Ok(raw)
}

fn int_freq(v: &Value) -> Result<i64> {
    v.as_i64().ok_or_else(|| Error::Json(format!("frequency {v} is not an integer")))
}

pub fn boolean_to_json(s: &BooleanSpectrum) -> Value {
    let entries: Vec<Value> =
        s.iter().map(|(xi, c)| json!({"freq": xi.to_bitstring(), "re": c, "im": 0.0})).collect();
    json!({"domain": "boolean", "n": s.n(), "entries": entries})
}

pub fn boolean_from_json(v: &Value) -> Result<BooleanSpectrum> {
    let raw = parse(v, "boolean")?;
    let n = raw.n.ok_or_else(|| Error::Json("missing `n`".into()))?;
    let mut s = BooleanSpectrum::new(n);
    for e in raw.entries {
        let bits = e.freq.as_str().ok_or_else(|| Error::Json("boolean frequency must be a bitstring".into()))?;
        s.insert(FreqVec::parse(bits)?, e.re)?;
    }
    Ok(s)
}

pub fn torus_to_json(s: &TorusSpectrum) -> Value {
    let entries: Vec<Value> = s.iter().map(|(xi, c)| json!({"freq": xi, "re": c.re, "im": c.im})).collect();
    json!({"domain": "torus", "F": s.bandlimit(), "entries": entries})
}

pub fn torus_from_json(v: &Value) -> Result<TorusSpectrum> {
    let raw = parse(v, "torus")?;
    let f = raw.f.ok_or_else(|| Error::Json("missing `F`".into()))?;
    let mut s = TorusSpectrum::new(f);
    for e in raw.entries {
        s.insert(int_freq(&e.freq)?, Complex64::new(e.re, e.im))?;
    }
    Ok(s)
}

pub fn cyclic_to_json(s: &CyclicSpectrum) -> Value {
    let entries: Vec<Value> = s.iter().map(|(l, c)| json!({"freq": l, "re": c.re, "im": c.im})).collect();
    json!({"domain": "cyclic", "B": s.modulus(), "entries": entries})
}

pub fn cyclic_from_json(v: &Value) -> Result<CyclicSpectrum> {
    let raw = parse(v, "cyclic")?;
    let b = raw.b.ok_or_else(|| Error::Json("missing `B`".into()))?;
    let mut s = CyclicSpectrum::new(b);
    for e in raw.entries {
        let l = int_freq(&e.freq)?;
        if l < 0 {
            return Err(Error::Json(format!("negative residue {l}")));
        }
        s.insert(l as u64, Complex64::new(e.re, e.im))?;
    }
    Ok(s)
}
