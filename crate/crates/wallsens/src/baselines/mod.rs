//! Sampling-based sensitivity baselines: regression coefficients, Sobol
//! indices and RBD-FAST over designs on the parameter box.

pub mod fast;
pub mod regression;
pub mod sampling;
pub mod sobol;

use std::path::Path;

use crate::error::{invalid, Result};

pub use fast::{rbd_fast, FastReport};
pub use regression::{src_srrc, RegressionReport};
pub use sampling::{DesignKind, SampleDesign};
pub use sobol::{sobol_indices, SaltelliDesign, VarianceReport};

/// Writes sample rows and their outputs as `p1,..,pn,y` CSV.
pub fn write_evaluations(
    path: &Path,
    names: &[String],
    rows: &[Vec<f64>],
    y: &[f64],
) -> Result<()> {
    if rows.len() != y.len() || rows.iter().any(|r| r.len() != names.len()) {
        return invalid("evaluation rows do not match the parameter names");
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names.iter().map(String::as_str).chain(["y"]))?;
    for (r, v) in rows.iter().zip(y) {
        w.write_record(r.iter().chain([v]).map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_evaluations`].
pub fn read_evaluations(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.len() < 2 || &headers[headers.len() - 1] != "y" {
        return invalid(format!("{}: last column must be 'y'", path.display()));
    }
    let names = headers
        .iter()
        .take(headers.len() - 1)
        .map(String::from)
        .collect();
    let (mut rows, mut y) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| crate::Error::Parse {
                path: path.display().to_string(),
                line: i + 2,
                msg: format!("{e}"),
            })?;
        y.push(vals[vals.len() - 1]);
        rows.push(vals[..vals.len() - 1].to_vec());
    }
    Ok((names, rows, y))
}
