//! CSV tables with unit-suffixed headers, written with LF endings and
//! shortest round-trip floats.

use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.push_cells(values.iter().map(f64::to_string).collect());
    }

    pub fn push_cells(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        wtr.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            wtr.write_record(r).expect("in-memory write");
        }
        wtr.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }
}

/// Parses a headed numeric CSV with exactly `columns` columns.
pub fn read_numeric(bytes: &[u8], columns: usize, path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let data_err = |message: String| CliError::Data { path: path.to_path_buf(), message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = rdr.headers().map_err(|e| data_err(e.to_string()))?.clone();
    if header.len() != columns {
        return Err(data_err(format!("expected {columns} columns, header has {}", header.len())));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| data_err(e.to_string()))?;
        let row = rec
            .iter()
            .zip(header.iter())
            .map(|(cell, name)| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| data_err(format!("line {}: column {name}: not a number: {cell:?}", i + 2)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    Ok(out)
}
