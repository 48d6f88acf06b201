//! Output rows and their CSV/JSON encodings.
//!
//! Both encodings are produced from the same ordered field list, so a CSV
//! header is always the JSON key order. Floats go to CSV as `{:.16e}` and to
//! JSON as shortest round-trip numbers; non-finite values become the strings
//! `inf`, `-inf` or `nan` in both.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::{Map, Number, Value as Json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Int(Option<u64>),
    Float(Option<f64>),
    Bool(Option<bool>),
    List(Vec<usize>),
}

fn non_finite(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

impl Value {
    pub fn to_csv(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Int(v) => v.map(|x| x.to_string()).unwrap_or_default(),
            Value::Float(None) => String::new(),
            Value::Float(Some(x)) if x.is_finite() => format!("{x:.16e}"),
            Value::Float(Some(x)) => non_finite(*x).to_string(),
            Value::Bool(v) => v.map(|b| b.to_string()).unwrap_or_default(),
            Value::List(v) => v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";"),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Str(s) => Json::String(s.clone()),
            Value::Int(v) => v.map_or(Json::Null, |x| Json::Number(x.into())),
            Value::Float(None) => Json::Null,
            Value::Float(Some(x)) => Number::from_f64(*x).map_or_else(|| Json::String(non_finite(*x).into()), Json::Number),
            Value::Bool(v) => v.map_or(Json::Null, Json::Bool),
            Value::List(v) => Json::Array(v.iter().map(|&i| Json::Number(i.into())).collect()),
        }
    }
}

pub trait Row {
    fn fields(&self) -> Vec<(&'static str, Value)>;
}

/// One `(method, k, seed)` cell of an experiment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub method: String,
    pub k: usize,
    pub seed: u64,
    pub phi_d: f64,
    pub rel_error: Option<f64>,
    pub v11_inv_norm: Option<f64>,
    /// Forward solves with the model `F`.
    pub forward_applies: u64,
    /// Adjoint solves with the model `F`.
    pub adjoint_applies: u64,
    pub wall_ms: f64,
    pub phi_full: Option<f64>,
    pub phi_sigma_k: Option<f64>,
    pub phi_lower_gks: Option<f64>,
    pub phi_lower_combined: Option<f64>,
    pub worst_case_factor: Option<f64>,
    pub phi_lower_worst_case: Option<f64>,
    pub bounds_hold: Option<bool>,
    pub worst_case_holds: Option<bool>,
    pub phi_opt: Option<f64>,
    pub completion_error: Option<f64>,
    pub approx_map_error: Option<f64>,
    pub completion_bound: Option<f64>,
    pub indices: Vec<usize>,
}

impl RunRecord {
    /// Stable ordering used before writing.
    pub fn sort_key(&self) -> (String, usize, u64) {
        (self.method.clone(), self.k, self.seed)
    }
}

impl Row for RunRecord {
    fn fields(&self) -> Vec<(&'static str, Value)> {
        use Value::*;
        vec![
            ("problem", Str(self.problem.clone())),
            ("method", Str(self.method.clone())),
            ("k", Int(Some(self.k as u64))),
            ("seed", Int(Some(self.seed))),
            ("phi_d", Float(Some(self.phi_d))),
            ("rel_error", Float(self.rel_error)),
            ("v11_inv_norm", Float(self.v11_inv_norm)),
            ("forward_applies", Int(Some(self.forward_applies))),
            ("adjoint_applies", Int(Some(self.adjoint_applies))),
            ("wall_ms", Float(Some(self.wall_ms))),
            ("phi_full", Float(self.phi_full)),
            ("phi_sigma_k", Float(self.phi_sigma_k)),
            ("phi_lower_gks", Float(self.phi_lower_gks)),
            ("phi_lower_combined", Float(self.phi_lower_combined)),
            ("worst_case_factor", Float(self.worst_case_factor)),
            ("phi_lower_worst_case", Float(self.phi_lower_worst_case)),
            ("bounds_hold", Bool(self.bounds_hold)),
            ("worst_case_holds", Bool(self.worst_case_holds)),
            ("phi_opt", Float(self.phi_opt)),
            ("completion_error", Float(self.completion_error)),
            ("approx_map_error", Float(self.approx_map_error)),
            ("completion_bound", Float(self.completion_bound)),
            ("indices", List(self.indices.clone())),
        ]
    }
}

/// Per-(method, seed) trend of a k-sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub method: String,
    pub seed: u64,
    pub k_first: usize,
    pub k_last: usize,
    pub phi_first: f64,
    pub phi_last: f64,
    pub phi_nondecreasing: bool,
    pub rel_error_first: Option<f64>,
    pub rel_error_last: Option<f64>,
}

impl Row for SweepSummary {
    fn fields(&self) -> Vec<(&'static str, Value)> {
        use Value::*;
        vec![
            ("method", Str(self.method.clone())),
            ("seed", Int(Some(self.seed))),
            ("k_first", Int(Some(self.k_first as u64))),
            ("k_last", Int(Some(self.k_last as u64))),
            ("phi_first", Float(Some(self.phi_first))),
            ("phi_last", Float(Some(self.phi_last))),
            ("phi_nondecreasing", Bool(Some(self.phi_nondecreasing))),
            ("rel_error_first", Float(self.rel_error_first)),
            ("rel_error_last", Float(self.rel_error_last)),
        ]
    }
}

/// Where a method's design lands among the random designs.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSummary {
    pub method: String,
    pub k: usize,
    pub seed: u64,
    pub phi_d: f64,
    pub designs: usize,
    pub beaten: usize,
    pub ties: usize,
}

impl Row for RandomSummary {
    fn fields(&self) -> Vec<(&'static str, Value)> {
        use Value::*;
        vec![
            ("method", Str(self.method.clone())),
            ("k", Int(Some(self.k as u64))),
            ("seed", Int(Some(self.seed))),
            ("phi_d", Float(Some(self.phi_d))),
            ("designs", Int(Some(self.designs as u64))),
            ("beaten", Int(Some(self.beaten as u64))),
            ("ties", Int(Some(self.ties as u64))),
        ]
    }
}

pub fn to_json<R: Row>(rows: &[R]) -> Json {
    Json::Array(
        rows.iter()
            .map(|r| Json::Object(r.fields().into_iter().map(|(k, v)| (k.to_string(), v.to_json())).collect::<Map<_, _>>()))
            .collect(),
    )
}

pub fn write_csv<R: Row, W: Write>(rows: &[R], header: &[&str], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.fields().iter().map(|(_, v)| v.to_csv()))?;
    }
    w.flush()
}

/// Writes `rows` to `dir/stem.{csv,json}` and returns the path.
pub fn write_rows<R: Row>(dir: &Path, stem: &str, format: Format, rows: &[R], header: &[&str]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let mut out = BufWriter::new(File::create(&path)?);
    match format {
        Format::Csv => write_csv(rows, header, &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &to_json(rows))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(path)
}

/// Field names of a row type, from a representative value.
pub fn header_of<R: Row>(sample: &R) -> Vec<&'static str> {
    sample.fields().into_iter().map(|(k, _)| k).collect()
}
