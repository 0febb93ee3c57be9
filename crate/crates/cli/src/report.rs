//! Output in two modes carrying the same numbers: aligned `key value` text,
//! or a JSON object. Every number is rounded to 12 significant digits
//! first, so a JSON value prints back to exactly the text token.

use isotherm::diagram::{fmt12, fmt_beta};
use isotherm::Beta;
use serde_json::{Map, Value as Json};

#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Int(u64),
    Beta(Beta),
    Text(String),
    Flag(bool),
    Nums(Vec<f64>),
    /// Table rows sharing one set of columns.
    Rows(Vec<Report>),
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

fn rounded(x: f64) -> Json {
    if x.is_finite() {
        let v: f64 = fmt12(x).parse().expect("fmt12 output parses");
        serde_json::Number::from_f64(v).map(Json::Number).expect("finite")
    } else {
        Json::String(fmt12(x))
    }
}

impl Value {
    fn text(&self) -> String {
        match self {
            Value::Num(x) => fmt12(*x),
            Value::Int(n) => n.to_string(),
            Value::Beta(b) => fmt_beta(*b),
            Value::Text(s) => s.clone(),
            Value::Flag(b) => b.to_string(),
            Value::Nums(xs) => xs.iter().map(|x| fmt12(*x)).collect::<Vec<_>>().join(" "),
            Value::Rows(_) => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Num(x) => rounded(*x),
            Value::Int(n) => Json::from(*n),
            Value::Beta(Beta::Finite(x)) => rounded(*x),
            Value::Beta(b) => Json::String(b.to_string()),
            Value::Text(s) => Json::String(s.clone()),
            Value::Flag(b) => Json::Bool(*b),
            Value::Nums(xs) => Json::Array(xs.iter().map(|x| rounded(*x)).collect()),
            Value::Rows(rows) => Json::Array(rows.iter().map(Report::json).collect()),
        }
    }
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: Value) -> &mut Self {
        self.entries.push((key.into(), value));
        self
    }

    pub fn num(&mut self, key: &str, x: f64) -> &mut Self {
        self.push(key, Value::Num(x))
    }

    pub fn json(&self) -> Json {
        let mut m = Map::new();
        for (k, v) in &self.entries {
            m.insert(k.clone(), v.json());
        }
        Json::Object(m)
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let mut s = serde_json::to_string_pretty(&self.json()).expect("serialisable");
            s.push('\n');
            return s;
        }
        let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in &self.entries {
            match v {
                Value::Rows(rows) => {
                    out.push_str(k);
                    out.push('\n');
                    out.push_str(&table(rows));
                }
                _ => out.push_str(&format!("{k:<width$}  {}\n", v.text())),
            }
        }
        out
    }
}

fn table(rows: &[Report]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let header: Vec<String> = first.entries.iter().map(|(k, _)| k.clone()).collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.entries.iter().map(|(_, v)| v.text()).collect())
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|j| cells.iter().map(|c| c[j].len()).chain([header[j].len()]).max().unwrap_or(0))
        .collect();
    let line = |row: &[String]| {
        let mut s = String::from("  ");
        let parts: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        s.push_str(&parts.join("  "));
        s.push('\n');
        s
    };
    let mut out = line(&header);
    for c in &cells {
        out.push_str(&line(c));
    }
    out
}
