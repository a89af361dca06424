//! CSV emission with a reproducibility trailer on every row: the tool
//! version and the full effective flag set, so two runs with identical
//! flags and seed produce byte-identical output.

use std::collections::BTreeMap;

use vnd_core::divergences::Value;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Full double precision: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_value(v: &Value) -> String {
    match v {
        Value::Finite(x) => fmt_f64(*x),
        Value::Infinite => "inf".into(),
    }
}

pub fn fmt_diagnostics(diag: &BTreeMap<String, f64>) -> String {
    diag.iter()
        .map(|(k, v)| format!("{k}={}", fmt_f64(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// A CSV table under construction; `flags` is the canonical flag string
/// appended to every row.
pub struct Csv {
    flags: String,
    lines: Vec<String>,
}

impl Csv {
    pub fn new(columns: &[&str], flags: &str) -> Self {
        let mut header: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        header.push("tool_version".into());
        header.push("flags".into());
        Self {
            flags: flags.to_string(),
            lines: vec![header.join(",")],
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        let mut out: Vec<String> = fields.iter().map(|f| escape(f)).collect();
        out.push(TOOL_VERSION.to_string());
        out.push(escape(&self.flags));
        self.lines.push(out.join(","));
    }

    pub fn finish(self) -> String {
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}
