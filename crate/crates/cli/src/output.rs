//! Report envelope, CSV tables and error mapping.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use isosurf_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Exit status for bad input or configuration.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit status for numerical failures and failed checks.
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(name: impl Into<String>, header: Vec<String>) -> Self {
        Table { name: name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, w: impl Write) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()
    }
}

/// Shortest round-trip text; scientific outside `[1e-3, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-3..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// What a command produced.
pub struct CommandOutput {
    /// Stem of the output files.
    pub stem: String,
    pub result: Value,
    /// The first table is the one printed for `--format csv`.
    pub tables: Vec<Table>,
    /// Exit status when the command ran to completion (nonzero for failed
    /// checks).
    pub exit: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
    pub detail: Value,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { code: EXIT_VALIDATION, kind: "invalid_config".into(), message: message.into(), detail: Value::Null }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError { code: EXIT_VALIDATION, kind: "io".into(), message: format!("{}: {err}", path.display()), detail: Value::Null }
    }

    pub fn to_json(&self) -> Value {
        json!({ "kind": self.kind, "message": self.message, "detail": self.detail })
    }
}

fn error_kind(e: &Error) -> (&'static str, Value) {
    match e {
        Error::OutsideDomain { u, v } => ("outside_domain", json!({ "u": u, "v": v })),
        Error::NotSmooth { u, v, .. } => ("not_smooth", json!({ "u": u, "v": v })),
        Error::DegenerateMetric { u, v, det } => ("degenerate_metric", json!({ "u": u, "v": v, "det": det })),
        Error::InconsistentRank { u, v, level, rank } => ("inconsistent_rank", json!({ "u": u, "v": v, "level": level, "rank": rank })),
        Error::NotRegular { u, v, .. } => ("not_regular", json!({ "u": u, "v": v })),
        Error::NotMinimal { u, v, trace } => ("not_minimal", json!({ "u": u, "v": v, "trace": trace })),
        Error::NotIsotropic { u, v, order, deviation } => ("not_isotropic", json!({ "u": u, "v": v, "order": order, "deviation": deviation })),
        Error::DegenerateEllipse { u, v, order } => ("degenerate_ellipse", json!({ "u": u, "v": v, "order": order })),
        Error::Gauge { u, v, .. } => ("gauge", json!({ "u": u, "v": v })),
        Error::Compatibility { residual, threshold } => ("compatibility", json!({ "residual": residual, "threshold": threshold })),
        Error::Integration(_) => ("integration", Value::Null),
        Error::Precondition(_) => ("precondition", Value::Null),
        Error::OutOfRange(_) => ("out_of_range", Value::Null),
        Error::GridMismatch => ("grid_mismatch", Value::Null),
        Error::Underdetermined { rows, cols } => ("underdetermined", json!({ "rows": rows, "cols": cols })),
        Error::UnknownLabel(l) => ("unknown_label", json!({ "label": l })),
        Error::InvalidConfig(_) => ("invalid_config", Value::Null),
        Error::ChartDefinition(_) => ("chart_definition", Value::Null),
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (kind, detail) = error_kind(&e);
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_VALIDATION };
        CliError { code, kind: kind.into(), message: e.to_string(), detail }
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a C,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<Value>,
}

pub fn envelope<C: Serialize>(command: &str, config: &C, outcome: &Result<CommandOutput, CliError>) -> String {
    let env = match outcome {
        Ok(o) => Envelope {
            schema_version: SCHEMA_VERSION,
            command,
            config,
            status: if o.exit == 0 { "ok" } else { "failed" },
            result: Some(&o.result),
            error: None,
        },
        Err(e) => Envelope { schema_version: SCHEMA_VERSION, command, config, status: "error", result: None, error: Some(e.to_json()) },
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
    s.push('\n');
    s
}

fn sanitize(stem: &str) -> String {
    stem.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' { c } else { '_' }).collect()
}

/// Writes the JSON report and every table into `dir`; returns the paths.
pub fn write_files(dir: &Path, stem: &str, json: &str, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let stem = sanitize(stem);
    let mut paths = Vec::new();
    let p = dir.join(format!("{stem}.json"));
    fs::write(&p, json).map_err(|e| CliError::io(&p, e))?;
    paths.push(p);
    for t in tables {
        let p = dir.join(format!("{stem}.{}.csv", sanitize(&t.name)));
        let f = fs::File::create(&p).map_err(|e| CliError::io(&p, e))?;
        t.write(io::BufWriter::new(f)).map_err(|e| CliError::io(&p, e))?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_map_to_two() {
        let e: CliError = Error::Compatibility { residual: 1.0, threshold: 1e-5 }.into();
        assert_eq!(e.code, EXIT_NUMERICAL);
        let e: CliError = Error::UnknownLabel("x".into()).into();
        assert_eq!(e.code, EXIT_VALIDATION);
        assert_eq!(e.kind, "unknown_label");
    }

    #[test]
    fn csv_quotes_fields() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 0.785, 8.321709987768597e-11, -3.5e7, 1.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(8.3e-11), "8.3e-11");
    }

    #[test]
    fn stems_are_file_safe() {
        assert_eq!(sanitize("polar(a b)/c"), "polar_a_b__c");
    }
}
