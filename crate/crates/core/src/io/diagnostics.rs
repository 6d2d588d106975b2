use std::path::Path;

use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::dynamics::NormSeries;
use crate::ensemble::DecayReport;
use crate::error::{Error, Result};
use crate::nudging::SyncReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticsFormat {
    Csv,
    Json,
}

/// A report with a stable CSV table (one row per time) and a JSON form
/// mirroring the field names.
pub trait Diagnostics: Serialize {
    fn csv_header(&self) -> Vec<&'static str>;
    fn csv_rows(&self) -> Vec<Vec<f64>>;
}

impl Diagnostics for SyncReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["t", "grad_err", "l2_err", "envelope"]
    }

    fn csv_rows(&self) -> Vec<Vec<f64>> {
        (0..self.times.len())
            .map(|i| vec![self.times[i], self.grad_err[i], self.l2_err[i], self.envelope[i]])
            .collect()
    }
}

impl Diagnostics for DecayReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "t",
            "gamma_hat",
            "paired_bound",
            "envelope",
            "gamma_eval",
            "paired_eval",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.t,
                    r.gamma_hat,
                    r.paired_bound,
                    r.envelope,
                    r.gamma_eval,
                    r.paired_eval,
                ]
            })
            .collect()
    }
}

/// Energy ½‖u‖² and enstrophy ½‖∇u‖² alongside the three norms.
impl Diagnostics for NormSeries {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["t", "l2", "h1", "h2", "energy", "enstrophy"]
    }

    fn csv_rows(&self) -> Vec<Vec<f64>> {
        self.t
            .iter()
            .zip(&self.norms)
            .map(|(&t, n)| vec![t, n.l2, n.h1, n.h2, 0.5 * n.l2 * n.l2, 0.5 * n.h1 * n.h1])
            .collect()
    }
}

/// CSV text with shortest round-trip number formatting.
pub fn to_csv<D: Diagnostics>(report: &D) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Format(format!("csv: {e}"));
    w.write_record(report.csv_header()).map_err(fail)?;
    for row in report.csv_rows() {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::Format(format!("csv: {e}")))
}

/// Writes `report` atomically. Non-finite table values are rejected.
pub fn write_diagnostics<D: Diagnostics>(report: &D, path: &Path, format: DiagnosticsFormat) -> Result<()> {
    if let Some((i, _)) = report
        .csv_rows()
        .iter()
        .enumerate()
        .find(|(_, r)| r.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::InvalidArgument(format!(
            "report row {i} has non-finite values; refusing to write {}",
            path.display()
        )));
    }
    let bytes = match format {
        DiagnosticsFormat::Csv => to_csv(report)?,
        DiagnosticsFormat::Json => {
            let mut b = serde_json::to_vec_pretty(report)?;
            b.push(b'\n');
            b
        }
    };
    atomic_write(path, |w| std::io::Write::write_all(w, &bytes))
}

/// Any serializable value as pretty JSON, atomically.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut b = serde_json::to_vec_pretty(value)?;
    b.push(b'\n');
    atomic_write(path, |w| std::io::Write::write_all(w, &b))
}
