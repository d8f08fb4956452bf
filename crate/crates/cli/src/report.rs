//! Line-oriented `key=value` reports with an optional JSON rendering.

use std::fmt::Write;

use serde_json::{json, Map, Value as Json};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Int(i64),
    Num(f64),
    Bool(bool),
    Vector(Vec<f64>),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Text(s) => s.clone(),
            Value::Int(i) => i.to_string(),
            Value::Num(x) => fmt_num(*x),
            Value::Bool(b) => b.to_string(),
            Value::Vector(v) => v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(","),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Value::Text(s) => json!(s),
            Value::Int(i) => json!(i),
            Value::Num(x) => num(*x),
            Value::Bool(b) => json!(b),
            Value::Vector(v) => Json::Array(v.iter().map(|x| num(*x)).collect()),
        }
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// JSON has no infinities or NaN; those become strings.
fn num(x: f64) -> Json {
    serde_json::Number::from_f64(x)
        .map(Json::Number)
        .unwrap_or_else(|| json!(x.to_string()))
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i as i64)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::Vector(v)
    }
}

impl From<&[f64]> for Value {
    fn from(v: &[f64]) -> Self {
        Value::Vector(v.to_vec())
    }
}

/// An ordered list of fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    fields: Vec<(String, Value)>,
}

impl Section {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a field before all others.
    pub fn prepend(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(0, (key.to_string(), value.into()));
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    fn render(&self, out: &mut String) {
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k}={}", v.render());
        }
    }

    fn to_json(&self) -> Json {
        let mut map = Map::new();
        for (k, v) in &self.fields {
            map.insert(k.clone(), v.to_json());
        }
        Json::Object(map)
    }
}

/// A header section, one section per run, and the wall-clock time, which is
/// kept apart so reports can be compared byte for byte without it.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub header: Section,
    pub runs: Vec<Section>,
    pub wall_clock_s: f64,
}

impl Report {
    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            let doc = json!({
                "header": self.header.to_json(),
                "runs": self.runs.iter().map(Section::to_json).collect::<Vec<_>>(),
                "wall_clock_s": num(self.wall_clock_s),
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
            s.push('\n');
            return s;
        }
        let mut out = String::new();
        self.header.render(&mut out);
        for run in &self.runs {
            out.push('\n');
            run.render(&mut out);
        }
        out.push('\n');
        let _ = writeln!(out, "wall_clock_s={}", fmt_num(self.wall_clock_s));
        out
    }
}
