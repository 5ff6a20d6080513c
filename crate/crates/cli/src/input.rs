//! Numeric CSV ingestion with line-numbered errors.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sstest::DataMatrix;

/// Reads a rectangular numeric CSV. The first record is treated as a header
/// when none of its cells parse as numbers.
pub fn read_matrix(path: &Path, transpose: bool) -> Result<DataMatrix> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<(usize, u64)> = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        match width {
            None => width = Some((record.len(), line)),
            Some((w, first)) if w != record.len() => bail!(
                "{}: line {line} has {} fields, expected {w} (as on line {first})",
                path.display(),
                record.len()
            ),
            _ => {}
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => bail!(
                    "{}: line {line}, column {}: `{cell}` is not a finite number",
                    path.display(),
                    j + 1
                ),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no numeric rows", path.display());
    }
    let x = DataMatrix::from_rows(&rows)?;
    Ok(if transpose { x.transpose() } else { x })
}
