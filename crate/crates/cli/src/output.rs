//! Self-describing text outputs.
//!
//! Every file starts with the tool version, the SHA-256 of the effective
//! configuration and the column units. Floats are written in shortest
//! round-trip exponent form so CSV and JSON carry identical values.

use std::fmt::Write;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

pub const TOOL: &str = "relaxo";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// Whitespace-separated data blocks for gnuplot.
    Gnuplot,
}

#[derive(Debug, Clone)]
pub struct Meta {
    pub command: &'static str,
    pub config_hash: String,
    pub source: String,
}

/// (name, unit) of one column.
pub type Column = (&'static str, String);

pub fn col(name: &'static str, unit: &str) -> Column {
    (name, unit.to_string())
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// JSON number, or null for ±∞ and NaN.
pub fn jnum(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn jopt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, jnum)
}

fn comment_header(meta: &Meta, columns: &[Column], extra: &[String]) -> String {
    let mut s = String::new();
    writeln!(s, "# {TOOL} {VERSION}").unwrap();
    writeln!(s, "# command: {}", meta.command).unwrap();
    writeln!(s, "# config: {}", meta.source).unwrap();
    writeln!(s, "# config_sha256: {}", meta.config_hash).unwrap();
    for line in extra {
        writeln!(s, "# {line}").unwrap();
    }
    let cols: Vec<String> = columns.iter().map(|(n, u)| format!("{n}[{u}]")).collect();
    writeln!(s, "# columns: {}", cols.join(" ")).unwrap();
    s
}

/// A table in the requested format. `extra` lines become header comments in
/// text formats and are ignored for JSON (pass structured data instead).
pub fn table(format: Format, meta: &Meta, columns: &[Column], rows: &[Vec<String>], extra: &[String], json_extra: Map<String, Value>) -> String {
    match format {
        Format::Csv | Format::Gnuplot => {
            let sep = if format == Format::Csv { "," } else { " " };
            let mut s = comment_header(meta, columns, extra);
            if format == Format::Csv {
                let names: Vec<&str> = columns.iter().map(|c| c.0).collect();
                writeln!(s, "{}", names.join(",")).unwrap();
            }
            for r in rows {
                writeln!(s, "{}", r.join(sep)).unwrap();
            }
            s
        }
        Format::Json => {
            let data: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for ((name, _), v) in columns.iter().zip(r) {
                        m.insert(name.to_string(), cell_value(v));
                    }
                    Value::Object(m)
                })
                .collect();
            let mut doc = envelope(meta, columns);
            doc.insert("rows".into(), Value::Array(data));
            doc.extend(json_extra);
            to_json(doc)
        }
    }
}

fn cell_value(v: &str) -> Value {
    match v.parse::<f64>() {
        Ok(x) => jnum(x),
        Err(_) if v.is_empty() => Value::Null,
        Err(_) => Value::String(v.to_string()),
    }
}

pub fn envelope(meta: &Meta, columns: &[Column]) -> Map<String, Value> {
    let units: Map<String, Value> = columns.iter().map(|(n, u)| (n.to_string(), Value::String(u.clone()))).collect();
    let mut m = Map::new();
    m.insert("tool".into(), json!(TOOL));
    m.insert("version".into(), json!(VERSION));
    m.insert("command".into(), json!(meta.command));
    m.insert("config".into(), json!(meta.source));
    m.insert("config_sha256".into(), json!(meta.config_hash));
    m.insert("units".into(), Value::Object(units));
    m
}

pub fn to_json(doc: Map<String, Value>) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
    s.push('\n');
    s
}
