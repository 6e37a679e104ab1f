//! Measured data for the fits.

use std::path::Path;

use serde::Deserialize;
use siphon_core::calibration::{CountRecord, VisibilityRecord};

use crate::error::CliError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CountRow {
    intensity: f64,
    c1: f64,
    c2: f64,
    cc: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VisibilityRow {
    xi_sq: f64,
    v: f64,
    sigma_v: Option<f64>,
}

fn read_rows<T, R>(path: &Path, convert: impl Fn(T) -> siphon_core::Result<R>) -> Result<Vec<R>, CliError>
where
    T: for<'de> Deserialize<'de>,
{
    let fail = |message: String| CliError::Input {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<T>() {
        let row = row.map_err(|e| fail(e.to_string()))?;
        out.push(convert(row).map_err(|e| fail(e.to_string()))?);
    }
    if out.is_empty() {
        return Err(fail("no data rows".into()));
    }
    Ok(out)
}

/// Rows of `intensity,c1,c2,cc` in counts per second.
pub fn read_counts(path: &Path) -> Result<Vec<CountRecord>, CliError> {
    read_rows(path, |r: CountRow| CountRecord::new(r.intensity, r.c1, r.c2, r.cc))
}

/// Rows of `xi_sq,v,sigma_v`; `sigma_v` may be left empty.
pub fn read_visibilities(path: &Path) -> Result<Vec<VisibilityRecord>, CliError> {
    read_rows(path, |r: VisibilityRow| VisibilityRecord::new(r.xi_sq, r.v, r.sigma_v))
}
