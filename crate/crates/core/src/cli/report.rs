//! The JSON verification report and its deterministic writer.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), non-finite
//! values as `null`, and object keys in sorted order. Nothing time-dependent
//! is recorded, so equal inputs give byte-identical reports.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::discrepancy::DiscrepancyRecord;
use crate::pde::RunAbort;
use crate::verify::IdentityResidual;

pub const TOOL: &str = "rylab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// Hard verdicts decide the exit status; soft ones are informational.
    pub hard: bool,
    pub detail: String,
}

impl Verdict {
    pub fn hard(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, hard: true, detail: detail.into() }
    }

    pub fn soft(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, hard: false, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Canonical rendering of the configuration that produced the report.
    pub config: String,
    /// False when the command stopped before producing all of its output.
    pub complete: bool,
    pub residuals: Vec<IdentityResidual>,
    pub discrepancies: Vec<DiscrepancyRecord>,
    pub verdicts: Vec<Verdict>,
    pub data: Value,
    pub abort: Option<RunAbort>,
    pub error: Option<String>,
    pub artifacts: Vec<String>,
}

impl VerificationReport {
    pub fn new(command: &str, config: String) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config,
            complete: true,
            residuals: Vec::new(),
            discrepancies: Vec::new(),
            verdicts: Vec::new(),
            data: Value::Null,
            abort: None,
            error: None,
            artifacts: Vec::new(),
        }
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.hard && !v.passed)
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is serializable");
        let mut out = String::new();
        write_value(&mut out, &value, 0);
        out.push('\n');
        out
    }
}

pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings serialize"));
}

fn write_object(out: &mut String, map: &Map<String, Value>, level: usize) {
    if map.is_empty() {
        out.push_str("{}");
        return;
    }
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    out.push_str("{\n");
    for (i, k) in keys.iter().enumerate() {
        indent(out, level + 1);
        write_string(out, k);
        out.push_str(": ");
        write_value(out, &map[*k], level + 1);
        if i + 1 < keys.len() {
            out.push(',');
        }
        out.push('\n');
    }
    indent(out, level);
    out.push('}');
}

/// Pretty JSON with fixed float formatting.
pub fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, level);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, x) in items.iter().enumerate() {
                    indent(out, level + 1);
                    write_value(out, x, level + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                indent(out, level);
                out.push(']');
            }
        }
        Value::Object(map) => write_object(out, map, level),
    }
}
