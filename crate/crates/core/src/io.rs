//! CSV helpers. Floats are written with 17 significant digits so that every
//! value round-trips exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `{:.16e}`: one leading digit plus sixteen decimals.
pub fn fmt_float<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

pub fn write_table<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points<W: Write, T: Scalar>(out: W, points: &[Vec<T>]) -> Result<()> {
    let d = points.first().map_or(0, |p| p.len());
    let header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| p.iter().map(|&v| fmt_float(v)).collect())
        .collect();
    write_table(out, &header, &rows)
}

/// Reads one point per row. A first row that does not parse as numbers is
/// taken as a header.
pub fn read_points<R: Read, T: Scalar>(input: R) -> Result<Vec<Vec<T>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out: Vec<Vec<T>> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if let Some(first) = out.first() {
                    if first.len() != v.len() {
                        return Err(Error::InvalidArgument(format!(
                            "row {} has {} columns, expected {}",
                            line + 1,
                            v.len(),
                            first.len()
                        )));
                    }
                }
                out.push(v.into_iter().map(T::lit).collect());
            }
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::InvalidArgument(format!("row {}: {e}", line + 1)));
            }
        }
    }
    Ok(out)
}

pub fn read_points_file<T: Scalar>(path: &Path) -> Result<Vec<Vec<T>>> {
    read_points(std::fs::File::open(path)?)
}

pub fn write_points_file<T: Scalar>(path: &Path, points: &[Vec<T>]) -> Result<()> {
    write_points(std::fs::File::create(path)?, points)
}
