//! CSV ingestion.
//!
//! Comma-separated, decimal point only. The first row is a header when none
//! of its fields parses as a number.

use crate::error::{Error, Result};
use std::path::Path;

/// A column given by header name or 0-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnSelector::Index(i) => write!(f, "{i}"),
            ColumnSelector::Name(n) => write!(f, "'{n}'"),
        }
    }
}

/// Parsed table of string fields with an optional header.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Option<Vec<String>>,
    rows: Vec<Vec<String>>,
    /// 1-based line number of the first data row.
    first_line: usize,
}

fn is_number(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok()
}

impl CsvTable {
    pub fn from_reader<R: std::io::Read>(rdr: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(rdr);
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
            rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
        }
        let header = match rows.first() {
            Some(first) if !first.iter().any(|f| is_number(f)) => Some(rows.remove(0)),
            _ => None,
        };
        let first_line = if header.is_some() { 2 } else { 1 };
        Ok(Self {
            header,
            rows,
            first_line,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn header(&self) -> Option<&[String]> {
        self.header.as_deref()
    }

    fn index_of(&self, sel: &ColumnSelector) -> Result<usize> {
        match sel {
            ColumnSelector::Index(i) => Ok(*i),
            ColumnSelector::Name(name) => {
                let header = self.header.as_ref().ok_or_else(|| {
                    Error::Data(format!(
                        "column {sel} requested but the file has no header row"
                    ))
                })?;
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::Data(format!("no column named {sel}")))
            }
        }
    }

    /// Finite values of one column; any missing or unparseable entry is an
    /// error naming its line.
    pub fn column(&self, sel: &ColumnSelector) -> Result<Vec<f64>> {
        let j = self.index_of(sel)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let line = i + self.first_line;
                let field = row
                    .get(j)
                    .ok_or_else(|| Error::Data(format!("line {line}: column {sel} is missing")))?;
                let v: f64 = field.parse().map_err(|_| {
                    Error::Data(format!(
                        "line {line}, column {sel}: cannot parse '{field}' as a number"
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::Data(format!(
                        "line {line}, column {sel}: non-finite value '{field}'"
                    )));
                }
                Ok(v)
            })
            .collect()
    }
}

/// Reads one column of at least two values.
pub fn read_series(path: &Path, sel: &ColumnSelector) -> Result<Vec<f64>> {
    let v = CsvTable::from_path(path)?.column(sel)?;
    if v.len() < 2 {
        return Err(Error::Data(format!(
            "column {sel} has {} value(s), need at least 2",
            v.len()
        )));
    }
    Ok(v)
}
