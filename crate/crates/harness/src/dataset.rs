//! Long-format figure tables with CSV and JSON emission.
//!
//! Every table starts with the columns `figure, series, x, y`, followed by the
//! figure-specific metadata columns from [`schema`]. Floats are written with 17
//! significant digits; rows are sorted before writing so output bytes do not
//! depend on evaluation order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{HarnessError, Result};

pub const BASE_COLUMNS: [&str; 4] = ["figure", "series", "x", "y"];

const POINT: [&str; 8] = ["panel", "quantity", "k", "n", "tau", "alpha", "g", "xi"];

/// Figure-specific columns following [`BASE_COLUMNS`].
pub fn schema(figure: u8) -> Result<Vec<&'static str>> {
    let extra: &[&str] = match figure {
        1 | 2 | 6 => &["oracle", "method"],
        3 => &["oracle", "theta", "phi", "method"],
        4 => &["standard", "theta", "phi", "standard_theta", "standard_phi", "coverage", "method"],
        5 => &[
            "delta_k",
            "samples",
            "seed",
            "gamma_d",
            "gamma",
            "kappa",
            "n_th",
            "cutoff",
            "fd_step",
            "trace_error",
            "min_eigenvalue",
            "method",
        ],
        7 => return Ok(vec!["mass", "n", "nu", "k", "tau", "xi", "delta_g", "closed_form"]),
        other => return Err(HarnessError::Config(format!("unknown figure {other}; expected 1..7"))),
    };
    Ok(POINT.iter().chain(extra).copied().collect())
}

/// Full column list of a figure table.
pub fn columns(figure: u8) -> Result<Vec<&'static str>> {
    Ok(BASE_COLUMNS.iter().copied().chain(schema(figure)?).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Seventeen significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub fields: BTreeMap<&'static str, Cell>,
}

impl Row {
    pub fn new(series: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            series: series.into(),
            x,
            y,
            fields: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &'static str, value: impl Into<Cell>) -> Self {
        self.fields.insert(key, value.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub figure: u8,
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn new(figure: u8) -> Self {
        Self {
            figure,
            metadata: BTreeMap::new(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    /// Checks that every row only uses schema columns and has no separator characters.
    pub fn validate(&self) -> Result<()> {
        let allowed = schema(self.figure)?;
        for row in &self.rows {
            if let Some(bad) = row.fields.keys().find(|k| !allowed.contains(k)) {
                return Err(HarnessError::Schema(format!("figure {} has no column {bad:?}", self.figure)));
            }
            let texts = row.fields.values().filter_map(|c| match c {
                Cell::Text(s) => Some(s.as_str()),
                _ => None,
            });
            if let Some(s) = std::iter::once(row.series.as_str()).chain(texts).find(|s| s.contains([',', '\n', '"'])) {
                return Err(HarnessError::Schema(format!("text cell {s:?} contains a separator")));
            }
        }
        Ok(())
    }

    pub fn sort(&mut self) {
        let cols = schema(self.figure).unwrap_or_default();
        let cmp_cell = |a: Option<&Cell>, b: Option<&Cell>| match (a, b) {
            (Some(Cell::Num(x)), Some(Cell::Num(y))) => x.total_cmp(y),
            (Some(Cell::Int(x)), Some(Cell::Int(y))) => x.cmp(y),
            (a, b) => a.map(Cell::render).cmp(&b.map(Cell::render)),
        };
        self.rows.sort_by(|a, b| {
            a.series
                .cmp(&b.series)
                .then(a.x.total_cmp(&b.x))
                .then_with(|| {
                    cols.iter()
                        .map(|c| cmp_cell(a.fields.get(c), b.fields.get(c)))
                        .find(|o| *o != Ordering::Equal)
                        .unwrap_or(Ordering::Equal)
                })
                .then(a.y.total_cmp(&b.y))
        });
    }

    fn cells(&self, row: &Row, cols: &[&str]) -> Vec<Cell> {
        let mut out = vec![Cell::Int(self.figure as i64), Cell::Text(row.series.clone()), Cell::Num(row.x), Cell::Num(row.y)];
        out.extend(cols.iter().map(|c| row.fields.get(c).cloned().unwrap_or(Cell::Empty)));
        out
    }

    pub fn to_csv(&self, timestamp: Option<&str>) -> Result<String> {
        self.validate()?;
        let cols = schema(self.figure)?;
        let mut s = String::new();
        let _ = writeln!(s, "# gravsim figure {}", self.figure);
        if let Some(t) = timestamp {
            let _ = writeln!(s, "# generated: {t}");
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "{}", columns(self.figure)?.join(","));
        for row in &self.rows {
            let line: Vec<String> = self.cells(row, &cols).iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        Ok(s)
    }

    pub fn to_json(&self, timestamp: Option<&str>) -> Result<Value> {
        self.validate()?;
        let cols = schema(self.figure)?;
        let mut metadata: serde_json::Map<String, Value> = self.metadata.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        if let Some(t) = timestamp {
            metadata.insert("generated".into(), json!(t));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(self.cells(r, &cols).iter().map(Cell::to_json).collect()))
            .collect();
        Ok(json!({
            "figure": self.figure,
            "metadata": metadata,
            "columns": columns(self.figure)?,
            "rows": rows,
        }))
    }

    /// Writes `fig<N>.csv` and `fig<N>.json` into `dir`.
    pub fn write(&self, dir: &Path, timestamp: Option<&str>) -> Result<(PathBuf, PathBuf)> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| HarnessError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let csv = dir.join(format!("fig{}.csv", self.figure));
        let js = dir.join(format!("fig{}.json", self.figure));
        std::fs::write(&csv, self.to_csv(timestamp)?).map_err(io(&csv))?;
        let mut text = serde_json::to_string_pretty(&self.to_json(timestamp)?)?;
        text.push('\n');
        std::fs::write(&js, text).map_err(io(&js))?;
        Ok((csv, js))
    }
}

/// A CSV table read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut comments = Vec::new();
        let mut lines = text.lines().peekable();
        while let Some(l) = lines.peek() {
            if let Some(c) = l.strip_prefix('#') {
                comments.push(c.trim().to_string());
                lines.next();
            } else {
                break;
            }
        }
        let header = lines.next().ok_or_else(|| HarnessError::Schema("missing header row".into()))?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut records = Vec::new();
        for (i, l) in lines.enumerate() {
            let rec: Vec<String> = l.split(',').map(str::to_string).collect();
            if rec.len() != columns.len() {
                return Err(HarnessError::Schema(format!(
                    "row {} has {} cells, header has {}",
                    i + 1,
                    rec.len(),
                    columns.len()
                )));
            }
            records.push(rec);
        }
        Ok(Self { comments, columns, records })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Compares the header against the documented schema and reports the column diff.
    pub fn check_schema(&self, figure: u8) -> Result<()> {
        let expected = columns(figure)?;
        if self.columns.iter().map(String::as_str).eq(expected.iter().copied()) {
            return Ok(());
        }
        let missing: Vec<&str> = expected.iter().copied().filter(|c| !self.columns.iter().any(|h| h == c)).collect();
        let unexpected: Vec<&str> = self
            .columns
            .iter()
            .map(String::as_str)
            .filter(|h| !expected.contains(h))
            .collect();
        Err(HarnessError::Schema(format!(
            "figure {figure}: missing columns {missing:?}, unexpected columns {unexpected:?}, expected order {expected:?}"
        )))
    }
}
