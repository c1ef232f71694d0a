//! Plain-text matrix format: one matrix row per line, entries separated by
//! commas and/or whitespace, no header. Blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{ContingencyTable, ProbabilityMatrix, Shape, DEFAULT_SUM_TOL};

fn split_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
}

fn parse_rows<T>(text: &str, parse: impl Fn(&str) -> Option<T>) -> Result<(Shape, Vec<T>)> {
    let mut flat = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = flat.len();
        for field in split_fields(line) {
            let v = parse(field).ok_or_else(|| {
                Error::Parse(format!("line {}: cannot parse '{field}'", lineno + 1))
            })?;
            flat.push(v);
        }
        let width = flat.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse(format!(
                    "line {}: expected {c} fields, found {width}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let shape = Shape::new(rows, cols.unwrap_or(0))?;
    Ok((shape, flat))
}

/// Parses a real-valued grid.
pub fn parse_grid(text: &str) -> Result<(Shape, Vec<f64>)> {
    parse_rows(text, |f| f.parse::<f64>().ok())
}

pub fn parse_probability(text: &str, sum_tol: f64) -> Result<ProbabilityMatrix> {
    let (shape, raw) = parse_grid(text)?;
    crate::matrix::validate_probability(shape, &raw, sum_tol)
}

/// Parses a table of counts. Integral reals such as `3.0` are accepted.
pub fn parse_counts(text: &str) -> Result<ContingencyTable> {
    let (shape, counts) = parse_rows(text, |f| {
        f.parse::<u64>().ok().or_else(|| {
            let v = f.parse::<f64>().ok()?;
            (v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64).then_some(v as u64)
        })
    })?;
    ContingencyTable::new(shape, counts)
}

pub fn read_probability(path: &Path) -> Result<ProbabilityMatrix> {
    parse_probability(&std::fs::read_to_string(path)?, DEFAULT_SUM_TOL)
}

pub fn read_counts(path: &Path) -> Result<ContingencyTable> {
    parse_counts(&std::fs::read_to_string(path)?)
}

fn format_rows<T: std::fmt::Display>(
    rows: impl Iterator<Item = impl Iterator<Item = T>>,
) -> String {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Comma-separated rows; reals are written in shortest round-trip form.
pub fn format_probability(p: &ProbabilityMatrix) -> String {
    format_rows(p.entries().chunks(p.cols()).map(|r| r.iter()))
}

pub fn format_counts(t: &ContingencyTable) -> String {
    format_rows(t.counts().chunks(t.shape().cols).map(|r| r.iter()))
}
