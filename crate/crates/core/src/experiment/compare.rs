use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Columns that identify a row when present in both tables.
const KEY_COLUMNS: [&str; 9] = ["k", "p", "q", "alloc", "protocol", "policy", "delay_mode", "seed", "horizon"];
/// Value columns, in order of preference.
const VALUE_COLUMNS: [&str; 2] = ["rate", "exact_rate"];
const CI_COLUMN: &str = "rate_ci";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Multiples of the summed confidence half-widths.
    Ci(f64),
    Relative(f64),
    Absolute(f64),
}

impl FromStr for Tolerance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::config("--tol", format!("expected ci:N, rel:X or abs:X, got {s:?}")))?;
        let value: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| *v >= 0.0 && v.is_finite())
            .ok_or_else(|| Error::config("--tol", format!("bad tolerance value {value:?}")))?;
        match kind {
            "ci" => Ok(Tolerance::Ci(value)),
            "rel" => Ok(Tolerance::Relative(value)),
            "abs" => Ok(Tolerance::Absolute(value)),
            _ => Err(Error::config("--tol", format!("unknown tolerance kind {kind:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowDeviation {
    pub key: String,
    pub a: f64,
    pub b: f64,
    pub deviation: f64,
    pub allowed: f64,
}

impl RowDeviation {
    pub fn ok(&self) -> bool {
        self.deviation <= self.allowed
    }

    pub fn ratio(&self) -> f64 {
        self.a / self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub value_column: (String, String),
    pub rows: Vec<RowDeviation>,
    /// Rows of the first table with no counterpart in the second.
    pub unmatched: Vec<String>,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.unmatched.is_empty() && self.rows.iter().all(RowDeviation::ok)
    }

    pub fn render(&self) -> String {
        let mut out = format!("key,{},{},ratio,deviation,allowed,status\n", self.value_column.0, self.value_column.1);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.key,
                r.a,
                r.b,
                r.ratio(),
                r.deviation,
                r.allowed,
                if r.ok() { "ok" } else { "FAIL" }
            ));
        }
        for key in &self.unmatched {
            out.push_str(&format!("{key},,,,,,unmatched\n"));
        }
        out
    }
}

struct Parsed {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Parsed {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn parse(text: &str, label: &str) -> Result<Parsed> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Schema(format!("{label}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Schema(format!("{label}: {e}")))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(Parsed { header, rows })
}

/// Key cells compare numerically when both parse as numbers.
fn normalise(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(v) => format!("{v:e}"),
        Err(_) => cell.to_string(),
    }
}

fn number(cell: &str, column: &str) -> Result<f64> {
    cell.parse()
        .map_err(|_| Error::Schema(format!("column {column}: {cell:?} is not a number")))
}

pub fn compare_tables(a: &str, b: &str, tol: Tolerance) -> Result<CompareReport> {
    let a = parse(a, "first table")?;
    let b = parse(b, "second table")?;
    let value = |t: &Parsed| VALUE_COLUMNS.iter().find_map(|c| t.column(c).map(|i| (c.to_string(), i)));
    let ((a_name, a_val), (b_name, b_val)) = match (value(&a), value(&b)) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::Schema("both tables need a rate or exact_rate column".into())),
    };
    let keys: Vec<(&str, usize, usize)> = KEY_COLUMNS
        .iter()
        .filter_map(|k| Some((*k, a.column(k)?, b.column(k)?)))
        .collect();
    if keys.is_empty() {
        return Err(Error::Schema("no key columns in common".into()));
    }
    // only shared columns form the key, so replicated rows all meet one oracle row
    let key_of = |row: &[String], pick: fn(&(&str, usize, usize)) -> usize| -> String {
        keys.iter().map(|k| normalise(&row[pick(k)])).collect::<Vec<_>>().join("|")
    };
    let mut index: HashMap<String, &Vec<String>> = HashMap::new();
    for row in &b.rows {
        index.insert(key_of(row, |k| k.2), row);
    }
    let a_ci = a.column(CI_COLUMN);
    let b_ci = b.column(CI_COLUMN);
    let mut report = CompareReport { value_column: (a_name.clone(), b_name.clone()), rows: Vec::new(), unmatched: Vec::new() };
    for row in &a.rows {
        let key = key_of(row, |k| k.1);
        let display: Vec<String> = keys.iter().map(|k| format!("{}={}", k.0, row[k.1])).collect();
        let display = display.join(" ");
        let Some(other) = index.get(&key) else {
            report.unmatched.push(display);
            continue;
        };
        let x = number(&row[a_val], &a_name)?;
        let y = number(&other[b_val], &b_name)?;
        let deviation = (x - y).abs();
        let allowed = match tol {
            Tolerance::Absolute(t) => t,
            Tolerance::Relative(t) => t * x.abs().max(y.abs()),
            Tolerance::Ci(n) => {
                let ci_a = a_ci.map(|i| number(&row[i], CI_COLUMN)).transpose()?.unwrap_or(0.0);
                let ci_b = b_ci.map(|i| number(&other[i], CI_COLUMN)).transpose()?.unwrap_or(0.0);
                n * (ci_a + ci_b)
            }
        };
        report.rows.push(RowDeviation { key: display, a: x, b: y, deviation, allowed });
    }
    if report.rows.is_empty() {
        return Err(Error::Schema("no rows of the first table match the second".into()));
    }
    Ok(report)
}

pub fn compare_files(a: &Path, b: &Path, tol: Tolerance) -> Result<CompareReport> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    compare_tables(&read(a)?, &read(b)?, tol)
}
