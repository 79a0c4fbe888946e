//! Dataset CSV reading/writing and the screening dump.
//!
//! The dataset format is deliberately rigid: a header `x1,...,xp,y`, comma
//! separators, `.` decimal point, no quoting, no ragged rows, no
//! non-finite cells. Floats are written with 10 significant digits.

use std::fs;
use std::path::Path;

use crate::data::{ColMatrix, Dataset};
use crate::error::{Error, Result};
use crate::screen::ScreenResult;

/// Formats a float like C's `%.10g`: 10 significant digits, fixed or
/// scientific depending on magnitude, trailing zeros trimmed.
pub fn format_g10(v: f64) -> String {
    format_g(v, 10)
}

pub fn format_g(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    // mirror printf %g: scientific when exp < -4 or exp >= sig
    let s = format!("{:.*e}", sig - 1, v);
    let (mant, e) = s.split_once('e').expect("exponent present");
    let e: i32 = e.parse().expect("numeric exponent");
    let _ = exp;
    if e < -4 || e >= sig as i32 {
        let mant = trim_zeros(mant);
        format!("{mant}e{:+03}", e)
    } else {
        let decimals = (sig as i32 - 1 - e).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v))
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        Error::Data(format!("row {row}, column {col}: cannot parse '{cell}' as a number"))
    })?;
    if !v.is_finite() {
        return Err(Error::Data(format!(
            "row {row}, column {col}: non-finite value '{cell}'"
        )));
    }
    Ok(v)
}

/// Parses a dataset from CSV text. Returns the design and response.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Data("empty file".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names.len() < 2 {
        return Err(Error::Data("header needs at least x1 and y".into()));
    }
    if names.last() != Some(&"y") {
        return Err(Error::Data(format!(
            "last header column must be 'y', found '{}'",
            names.last().unwrap()
        )));
    }
    let p = names.len() - 1;
    for (j, name) in names[..p].iter().enumerate() {
        let expect = format!("x{}", j + 1);
        if *name != expect {
            return Err(Error::Data(format!(
                "header column {} must be '{expect}', found '{name}'",
                j + 1
            )));
        }
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut y = Vec::new();
    for (r, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != p + 1 {
            return Err(Error::Data(format!(
                "row {}: expected {} cells, found {}",
                r + 1,
                p + 1,
                cells.len()
            )));
        }
        for (j, cell) in cells[..p].iter().enumerate() {
            cols[j].push(parse_cell(cell, r + 1, j + 1)?);
        }
        y.push(parse_cell(cells[p], r + 1, p + 1)?);
    }
    if y.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    Dataset::new(ColMatrix::from_columns(&cols)?, y)
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_dataset_csv(&text)
}

/// Serializes a dataset with the `x1,...,xp,y` header.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let p = data.p();
    let mut out = String::new();
    for j in 0..p {
        out.push_str(&format!("x{},", j + 1));
    }
    out.push_str("y\n");
    for i in 0..data.n() {
        for j in 0..p {
            out.push_str(&format_g10(data.x.get(i, j)));
            out.push(',');
        }
        out.push_str(&format_g10(data.y[i]));
        out.push('\n');
    }
    out
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    fs::write(path, dataset_to_csv(data))?;
    Ok(())
}

/// Screening dump: `a,b,gamma_hat`, one row per retained pair, sorted by
/// |gamma| descending. Column indices are 1-based to match `x1..xp`.
pub fn screen_to_csv(result: &ScreenResult) -> String {
    let mut out = String::from("a,b,gamma_hat\n");
    for &(pr, g) in &result.selected {
        out.push_str(&format!("{},{},{}\n", pr.a + 1, pr.b + 1, format_g10(g)));
    }
    out
}

pub fn write_screen_csv(path: &Path, result: &ScreenResult) -> Result<()> {
    fs::write(path, screen_to_csv(result))?;
    Ok(())
}

/// Reads an ordinal response column: integer categories 1..=k+1.
pub fn categories_from_response(y: &[f64]) -> Result<Vec<usize>> {
    let mut cats = Vec::with_capacity(y.len());
    for &v in y {
        if !v.is_finite() || v.fract() != 0.0 || v < 1.0 {
            return Err(Error::FamilyMismatch(format!(
                "ordinal response must be integers >= 1, found {v}"
            )));
        }
        cats.push(v as usize);
    }
    Ok(cats)
}

/// Prediction output: one mean per row.
pub fn predictions_to_csv(mu: &[f64]) -> String {
    let mut out = String::from("mean\n");
    for &v in mu {
        out.push_str(&format_g10(v));
        out.push('\n');
    }
    out
}
