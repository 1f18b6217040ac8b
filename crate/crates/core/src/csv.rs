//! Plot-ready CSV output.
//!
//! Layout: `# key = value` manifest lines, one row of column names, then
//! data rows in grid order. Numbers use the shortest decimal form that
//! round-trips (exponent form only at extreme magnitudes). Undefined cells
//! are written as `NaN`. Lines end in `\n`.

use std::io::{self, Write};

use crate::sim::{TradeoffRow, WeakSweepRow};

pub const WEAK_SWEEP_COLUMNS: [&str; 7] = [
    "phi_deg",
    "value_est",
    "std_err",
    "value_eq9",
    "weak_value",
    "n_pass",
    "n_block",
];

pub const TRADEOFF_COLUMNS: [&str; 6] = [
    "theta_deg",
    "epsilon_est",
    "epsilon_err",
    "backaction_est",
    "backaction_err",
    "ellipse_residual",
];

pub const CALIBRATE_COLUMNS: [&str; 5] =
    ["theta_deg", "v_hv", "epsilon_est", "epsilon_err", "epsilon_model"];

pub const EVAL_COLUMNS: [&str; 7] = [
    "phi_deg",
    "theta_deg",
    "value",
    "std_err",
    "value_model",
    "weak_value",
    "p_pass",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Missing,
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x)
    }
}

impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Value::Missing, Value::Float)
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::Float(x) if x.is_nan() => "NaN".to_string(),
        // -0 and 0 print differently; keep the output sign-stable
        Value::Float(x) if *x == 0.0 => "0".to_string(),
        Value::Float(x) if x.fract() == 0.0 && x.abs() < 1e15 => format!("{}", *x as i64),
        // Debug is shortest round-trip and switches to exponent form at extremes
        Value::Float(x) => format!("{x:?}"),
        Value::Int(n) => n.to_string(),
        Value::Missing => "NaN".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }
}

pub fn emit_csv<W: Write>(out: &mut W, table: &Table, manifest: &[String]) -> io::Result<()> {
    for line in manifest {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(render).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn emit_csv_string(table: &Table, manifest: &[String]) -> String {
    let mut buf = Vec::new();
    emit_csv(&mut buf, table, manifest).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// `phi_deg` holds the configured grid in degrees, one entry per row.
pub fn weak_sweep_table(phi_deg: &[f64], rows: &[WeakSweepRow]) -> Table {
    let mut t = Table::new(&WEAK_SWEEP_COLUMNS);
    for (deg, r) in phi_deg.iter().zip(rows) {
        t.push(vec![
            (*deg).into(),
            r.value_est.into(),
            r.std_err.into(),
            r.value_eq9.into(),
            r.weak_value.into(),
            r.n_pass.into(),
            r.n_block.into(),
        ]);
    }
    t
}

pub fn tradeoff_table(theta_deg: &[f64], rows: &[TradeoffRow]) -> Table {
    let mut t = Table::new(&TRADEOFF_COLUMNS);
    for (deg, r) in theta_deg.iter().zip(rows) {
        t.push(vec![
            (*deg).into(),
            r.epsilon_est.into(),
            r.epsilon_err.into(),
            r.backaction_est.into(),
            r.backaction_err.into(),
            r.ellipse_residual.into(),
        ]);
    }
    t
}
