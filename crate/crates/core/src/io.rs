//! Sweep CSV serialization and run manifests.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{PointTiming, SweepRow};

pub const CSV_HEADER: [&str; 10] = [
    "L",
    "lambda",
    "energy",
    "gap",
    "F_plus_h",
    "chi2",
    "chi3",
    "chi3_abs",
    "fit_residual",
    "flag",
];

/// 17 significant digits; round-trips every finite `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match line {
        Some(line) => Error::InvalidArgument(format!("CSV line {line}: {e}")),
        None => Error::InvalidArgument(format!("CSV: {e}")),
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.sites.to_string(),
            format_float(r.lambda),
            format_float(r.energy),
            format_float(r.gap),
            format_float(r.f_plus_h),
            format_float(r.chi2),
            format_float(r.chi3),
            format_float(r.chi3_abs),
            format_float(r.fit_residual),
            r.flag.clone(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("CSV write: {e}")))
}

/// Parses a sweep table. Columns are matched by header name, so their
/// order is free, but every column of [`CSV_HEADER`] must be present.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut index = [0usize; 10];
    for (slot, name) in index.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("CSV is missing column {name:?}")))?;
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(index[i]).unwrap_or("");
        let float = |i: usize| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!(
                    "CSV line {line}: column {} has non-numeric value {:?}",
                    CSV_HEADER[i],
                    field(i)
                ))
            })
        };
        let sites = field(0).parse::<usize>().map_err(|_| {
            Error::InvalidArgument(format!("CSV line {line}: invalid L {:?}", field(0)))
        })?;
        rows.push(SweepRow {
            sites,
            lambda: float(1)?,
            energy: float(2)?,
            gap: float(3)?,
            f_plus_h: float(4)?,
            chi2: float(5)?,
            chi3: float(6)?,
            chi3_abs: float(7)?,
            fit_residual: float(8)?,
            flag: field(9).to_string(),
        });
    }
    Ok(rows)
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Everything needed to reproduce one CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub workers: usize,
    pub boundary: String,
    pub sector: String,
    pub warm_start: String,
    pub primary_scaling_variable: String,
    pub wall_seconds: f64,
    pub points: Vec<PointTiming>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, workers: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            argv: std::env::args().collect(),
            parameters,
            workers,
            boundary: "periodic".to_string(),
            sector: "Sz=0".to_string(),
            warm_start: WARM_START_POLICY.to_string(),
            primary_scaling_variable: "inv_L".to_string(),
            wall_seconds: 0.0,
            points: Vec::new(),
        }
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let path = manifest_path(out);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// How starting vectors are chosen during sweeps.
pub const WARM_START_POLICY: &str =
    "each grid point: cold seeded block solve at lambda, stencil neighbours warm-started from it";

#[cfg(test)]
mod tests {
    use super::*;

    fn row(l: usize, lambda: f64) -> SweepRow {
        SweepRow {
            sites: l,
            lambda,
            energy: -8.0 / 3.0,
            gap: 0.1 + lambda,
            f_plus_h: 1.0 - 1e-7,
            chi2: 0.123456789012345678,
            chi3: -1.0 / 7.0,
            chi3_abs: 1.0 / 7.0,
            fit_residual: 1e-300,
            flag: "ok".into(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rows = vec![row(8, 0.0), row(8, 0.07), row(10, 0.5)];
        rows[2].chi2 = f64::NAN;
        rows[2].flag = "degenerate".into();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("L,lambda,energy,gap,F_plus_h,chi2,chi3,chi3_abs,fit_residual,flag\n"));
        assert!(text.contains("NaN"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        assert!(back[2].chi2.is_nan());
        assert_eq!(back[..2], rows[..2]);
    }

    #[test]
    fn malformed_line_is_reported() {
        let text = "L,lambda,energy,gap,F_plus_h,chi2,chi3,chi3_abs,fit_residual,flag\n\
                    8,0.1,-3,1,1,0.1,0.2,0.2,0,ok\n\
                    8,0.2,abc,1,1,0.1,0.2,0.2,0,ok\n";
        let err = read_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let ragged = "L,lambda,energy,gap,F_plus_h,chi2,chi3,chi3_abs,fit_residual,flag\n8,0.1\n";
        let err = read_csv(ragged.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn missing_column() {
        let text = "L,lambda,energy\n8,0.1,-3\n";
        assert!(read_csv(text.as_bytes()).unwrap_err().to_string().contains("gap"));
    }

    #[test]
    fn manifest_suffix() {
        assert_eq!(
            manifest_path(Path::new("out/sweep.csv")),
            PathBuf::from("out/sweep.csv.manifest.json")
        );
    }
}
