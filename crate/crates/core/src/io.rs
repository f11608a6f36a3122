//! CSV and JSON artifacts.
//!
//! JSON is pretty-printed with two-space indentation and a trailing newline.
//! CSV follows RFC 4180 (CRLF records, header row) and prints every double
//! with 17 significant digits so values round-trip exactly.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::bubbles::ScanRow;
use crate::constants::ProblemParams;
use crate::error::{Error, Result};
use crate::radial::{RadialField, SharedGrid};
use crate::variational::EnergyBreakdown;

/// Relative tolerance when matching radii in a field file to grid nodes.
pub const RADIUS_MATCH: f64 = 1e-12;

pub const SCAN_HEADER: [&str; 10] = ["eps", "sigma", "a", "b", "c", "d", "I", "J", "H", "T"];

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!("cannot serialize report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    write_text(path, &to_json(value)?)
}

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Data("refusing to write a CSV file without rows".into()));
    }
    let mut out = header.join(",");
    out.push_str("\r\n");
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Data(format!(
                "CSV row has {} values but the header has {}",
                row.len(),
                header.len()
            )));
        }
        let line: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        out.push_str(&line.join(","));
        out.push_str("\r\n");
    }
    Ok(out)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let text = csv_string(header, rows)?;
    write_text(path, &text)
}

/// Reads a numeric CSV file; the header must equal `header`.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, header).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_csv(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| Error::Data("empty CSV file".into()))?;
    let found: Vec<&str> = first.split(',').map(str::trim).collect();
    if found != header {
        return Err(Error::Data(format!(
            "expected CSV header {}, found {}",
            header.join(","),
            first
        )));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Data(format!("line {}: cannot parse {cell:?}", k + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Data(format!(
                "line {}: expected {} values, found {}",
                k + 2,
                header.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("CSV file has no data rows".into()));
    }
    Ok(rows)
}

pub fn write_field(field: &RadialField, path: &Path) -> Result<()> {
    let rows: Vec<Vec<f64>> = field
        .grid()
        .nodes()
        .iter()
        .zip(field.values())
        .map(|(r, v)| vec![*r, *v])
        .collect();
    write_csv(path, &["r", "value"], &rows)
}

/// Loads a field written on `grid`; every radius must match its node.
pub fn read_field(path: &Path, grid: &SharedGrid) -> Result<RadialField> {
    let rows = read_csv(path, &["r", "value"])?;
    if rows.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} has {} rows but the grid has {} nodes",
            path.display(),
            rows.len(),
            grid.len()
        )));
    }
    for (k, (row, node)) in rows.iter().zip(grid.nodes()).enumerate() {
        if (row[0] - node).abs() > RADIUS_MATCH * node {
            return Err(Error::GridMismatch(format!(
                "{} row {}: radius {} does not match grid node {}",
                path.display(),
                k + 1,
                row[0],
                node
            )));
        }
    }
    RadialField::new(grid, rows.into_iter().map(|r| r[1]).collect())
}

pub fn scan_rows_to_csv(rows: &[ScanRow]) -> Result<String> {
    let data: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let e = &r.breakdown;
            vec![
                r.eps,
                r.sigma,
                e.a,
                e.b,
                e.c,
                e.d,
                e.action_i,
                e.nehari_j,
                e.constraint_h,
                e.half_dirichlet_t,
            ]
        })
        .collect();
    csv_string(&SCAN_HEADER, &data)
}

pub fn write_scan(rows: &[ScanRow], path: &Path) -> Result<()> {
    let text = scan_rows_to_csv(rows)?;
    write_text(path, &text)
}

/// Reads scan rows back; I, J, H, T are recomputed from a, b, c, d and must
/// agree with the stored columns.
pub fn read_scan(path: &Path, params: &ProblemParams) -> Result<Vec<ScanRow>> {
    read_csv(path, &SCAN_HEADER)?
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let e = EnergyBreakdown::from_parts(r[2], r[3], r[4], r[5], params);
            let stored = [r[6], r[7], r[8], r[9]];
            let fresh = [e.action_i, e.nehari_j, e.constraint_h, e.half_dirichlet_t];
            for (s, f) in stored.iter().zip(&fresh) {
                if (s - f).abs() > 1e-12 * s.abs().max(f.abs()).max(1e-300) {
                    return Err(Error::Data(format!(
                        "{} row {}: derived columns disagree with a, b, c, d for these parameters",
                        path.display(),
                        k + 1
                    )));
                }
            }
            Ok(ScanRow {
                eps: r[0],
                sigma: r[1],
                breakdown: e,
            })
        })
        .collect()
}
