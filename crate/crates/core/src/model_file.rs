//! JSON model files.
//!
//! ```json
//! {
//!   "version": 1,
//!   "n": 1,
//!   "labels": ["empty", "occupied"],
//!   "parameters": { "lambda": 2.0, "death": 1.0 },
//!   "lattice": { "dims": [32], "boundary": "periodic" },
//!   "layers": [
//!     { "map":   [[0, 0], [1, 0]],
//!       "rates": [[null, "death/W"], ["lambda", "death/W"]] }
//!   ]
//! }
//! ```
//!
//! Matrices are indexed `[b][a]`: rows by the neighbour type, columns by the
//! affected type. A rate entry is a number, `null` (no interaction, rate 0)
//! or an arithmetic expression over numbers, parameters and `W`, the kernel
//! mass of the lattice the model runs on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Kernel, Lattice};
use crate::map::{InteractionMap, Layer, ModelSpec, Particle, RateTable, MAX_N};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub kernel: Kernel,
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice> {
        Lattice::new(&self.dims, self.boundary, self.kernel.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFile {
    pub map: Vec<Vec<Value>>,
    pub rates: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    pub layers: Vec<LayerFile>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_err(format!("invalid model file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    /// Builds the model; `w` overrides the kernel mass taken from the file's
    /// own lattice section.
    pub fn to_model(&self, w: Option<f64>) -> Result<ModelSpec> {
        if self.version != SCHEMA_VERSION {
            return Err(parse_err(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        if self.n == 0 || self.n > MAX_N as u64 {
            return Err(parse_err(format!("n = {} must be in 1..={MAX_N}", self.n)));
        }
        let n = self.n as Particle;
        if self.layers.is_empty() {
            return Err(parse_err("model has no layers"));
        }
        let w = match w {
            Some(w) => Some(w),
            None => match &self.lattice {
                Some(spec) => Some(spec.build()?.max_mass()),
                None => None,
            },
        };
        let mut vars = self.parameters.clone();
        if vars.contains_key("W") {
            return Err(parse_err("'W' is reserved for the kernel mass"));
        }
        let k = n as usize + 1;
        let mut layers = Vec::new();
        for (li, lf) in self.layers.iter().enumerate() {
            check_shape(&lf.map, k, &format!("layer {li} map"))?;
            check_shape(&lf.rates, k, &format!("layer {li} rates"))?;
            let mut map_rows = vec![vec![0 as Particle; k]; k];
            for (b, row) in lf.map.iter().enumerate() {
                for (a, v) in row.iter().enumerate() {
                    let at = format!("layer {li} map row b={b} column a={a}");
                    let x = v
                        .as_u64()
                        .ok_or_else(|| parse_err(format!("{at}: {v} is not a non-negative integer")))?;
                    if x > n as u64 {
                        return Err(parse_err(format!("{at}: entry {x} exceeds n={n}")));
                    }
                    map_rows[b][a] = x as Particle;
                }
            }
            let mut rate_rows = vec![vec![0.0; k]; k];
            for (b, row) in lf.rates.iter().enumerate() {
                for (a, v) in row.iter().enumerate() {
                    let at = format!("layer {li} rates row b={b} column a={a}");
                    let r = match v {
                        Value::Null => 0.0,
                        Value::Number(x) => x.as_f64().unwrap_or(f64::NAN),
                        Value::String(s) => {
                            if let Some(w) = w {
                                vars.insert("W".into(), w);
                            }
                            eval_rate(s, &vars).map_err(|e| {
                                if e.contains("'W'") && w.is_none() {
                                    parse_err(format!("{at}: uses W but no lattice is known"))
                                } else {
                                    parse_err(format!("{at}: {e}"))
                                }
                            })?
                        }
                        other => return Err(parse_err(format!("{at}: {other} is not a rate"))),
                    };
                    if !(r >= 0.0) || !r.is_finite() {
                        return Err(parse_err(format!("{at}: rate {r} must be finite and >= 0")));
                    }
                    rate_rows[b][a] = r;
                }
            }
            let map = InteractionMap::from_neighbor_rows(&map_rows)?;
            let rates = RateTable::from_neighbor_rows(&rate_rows)?;
            layers.push(Layer::new(map, rates)?);
        }
        ModelSpec::new(layers, self.labels.clone()).map_err(|e| parse_err(e.to_string()))
    }

    /// Numeric form of a model: every rate written out, `null` on zero rates
    /// at null pairs.
    pub fn from_model(model: &ModelSpec, lattice: Option<LatticeSpec>) -> Self {
        let layers = model
            .layers()
            .iter()
            .map(|l| {
                let map = l
                    .map
                    .neighbor_rows()
                    .into_iter()
                    .map(|r| r.into_iter().map(Value::from).collect())
                    .collect();
                let rates = (0..=model.n())
                    .map(|b| {
                        (0..=model.n())
                            .map(|a| {
                                let r = l.rates.get(a, b);
                                if r == 0.0 && l.map.get(a, b) == a {
                                    Value::Null
                                } else {
                                    Value::from(r)
                                }
                            })
                            .collect()
                    })
                    .collect();
                LayerFile { map, rates }
            })
            .collect();
        Self {
            version: SCHEMA_VERSION,
            n: model.n() as u64,
            labels: model.labels().map(|l| l.to_vec()),
            parameters: BTreeMap::new(),
            lattice,
            layers,
        }
    }
}

fn check_shape(m: &[Vec<Value>], k: usize, what: &str) -> Result<()> {
    if m.len() != k {
        return Err(parse_err(format!("{what}: {} rows, expected {k}", m.len())));
    }
    if let Some((b, row)) = m.iter().enumerate().find(|(_, r)| r.len() != k) {
        return Err(parse_err(format!("{what}: row b={b} has {} columns, expected {k}", row.len())));
    }
    Ok(())
}

/// Parses a model file and builds it on the file's own lattice section.
pub fn parse_model_file(text: &str) -> Result<ModelSpec> {
    ModelFile::from_json(text)?.to_model(None)
}

/// Numeric JSON for `model`.
pub fn serialize_model(model: &ModelSpec, lattice: Option<LatticeSpec>) -> String {
    ModelFile::from_model(model, lattice).to_json()
}

/// Evaluates `+ - * /` with parentheses over numbers and named variables.
fn eval_rate(src: &str, vars: &BTreeMap<String, f64>) -> std::result::Result<f64, String> {
    let mut p = Expr {
        s: src.as_bytes(),
        i: 0,
        vars,
    };
    let v = p.sum()?;
    p.ws();
    if p.i != p.s.len() {
        return Err(format!("unexpected '{}' in rate expression '{src}'", p.s[p.i] as char));
    }
    Ok(v)
}

struct Expr<'a> {
    s: &'a [u8],
    i: usize,
    vars: &'a BTreeMap<String, f64>,
}

impl Expr<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn sum(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let r = self.product()?;
            v = if op == b'+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn product(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.atom()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.i += 1;
            let r = self.atom()?;
            v = if op == b'*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn atom(&mut self) -> std::result::Result<f64, String> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let v = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err("missing ')'".into());
                }
                self.i += 1;
                Ok(v)
            }
            Some(b'-') => {
                self.i += 1;
                Ok(-self.atom()?)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.i;
                while let Some(&c) = self.s.get(self.i) {
                    let exp_sign = matches!(c, b'+' | b'-') && matches!(self.s[self.i - 1], b'e' | b'E');
                    if !(c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E') || exp_sign) {
                        break;
                    }
                    self.i += 1;
                }
                let t = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                t.parse().map_err(|_| format!("bad number '{t}'"))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.i;
                while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_') {
                    self.i += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                self.vars
                    .get(name)
                    .copied()
                    .ok_or_else(|| format!("undefined parameter '{name}'"))
            }
            Some(c) => Err(format!("unexpected '{}'", c as char)),
            None => Err("unexpected end of rate expression".into()),
        }
    }
}
