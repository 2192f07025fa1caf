//! Matrix file formats: a JSON object `{"n": 3, "entries": [[...], ...]}`
//! or headerless CSV with one matrix row per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SquareMatrix;
use crate::error::{Error, Result};

/// On-disk JSON representation of a matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub n: usize,
    pub entries: Vec<Vec<f64>>,
}

impl TryFrom<MatrixDocument> for SquareMatrix {
    type Error = Error;

    fn try_from(doc: MatrixDocument) -> Result<Self> {
        if doc.entries.len() != doc.n {
            return Err(Error::InvalidMatrix(format!(
                "declared n = {} but found {} rows",
                doc.n,
                doc.entries.len()
            )));
        }
        SquareMatrix::from_rows(&doc.entries)
    }
}

impl From<SquareMatrix> for MatrixDocument {
    fn from(m: SquareMatrix) -> Self {
        MatrixDocument {
            n: m.n(),
            entries: m.rows(),
        }
    }
}

pub fn parse_json(text: &str) -> Result<SquareMatrix> {
    let doc: MatrixDocument =
        serde_json::from_str(text).map_err(|e| Error::InvalidMatrix(format!("JSON: {e}")))?;
    SquareMatrix::try_from(doc)
}

pub fn parse_csv(text: &str) -> Result<SquareMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidMatrix(format!("CSV: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::InvalidMatrix(format!("CSV line {}: cannot parse {f:?}", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidMatrix("CSV input is empty".into()));
    }
    SquareMatrix::from_rows(&rows)
}

/// Parses either format, deciding by the first non-blank character.
pub fn parse_matrix(text: &str) -> Result<SquareMatrix> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_csv(text)
    }
}

pub fn read_matrix(path: &Path) -> Result<SquareMatrix> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidMatrix(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn to_json(m: &SquareMatrix) -> String {
    serde_json::to_string(&MatrixDocument::from(m.clone())).expect("matrix serializes")
}

pub fn to_csv(m: &SquareMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
