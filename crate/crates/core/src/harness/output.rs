use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentKind, OutputFormat};

/// One emitted statistic. Column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub replicate: Option<usize>,
    pub statistic: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub seed: u64,
}

impl ResultRow {
    pub fn new(experiment: ExperimentKind, n: usize, statistic: impl Into<String>, value: f64, seed: u64) -> Self {
        ResultRow {
            experiment,
            n,
            replicate: None,
            statistic: statistic.into(),
            value,
            stderr: None,
            seed,
        }
    }

    pub fn with_replicate(mut self, r: usize) -> Self {
        self.replicate = Some(r);
        self
    }

    pub fn with_stderr(mut self, se: f64) -> Self {
        self.stderr = Some(se);
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.value.is_finite() {
            return Err(Error::Internal(format!("statistic {} is not finite", self.statistic)));
        }
        if let Some(se) = self.stderr {
            if !(se.is_finite() && se >= 0.0) {
                return Err(Error::Internal(format!("stderr of {} is invalid: {se}", self.statistic)));
            }
        }
        Ok(())
    }
}

/// Rows sorted by `(experiment, n, statistic, replicate)`.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        (a.experiment, a.n, &a.statistic, a.replicate).cmp(&(b.experiment, b.n, &b.statistic, b.replicate))
    });
}

/// Serializes rows in canonical order.
pub fn render(rows: &[ResultRow], format: OutputFormat) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::param("no result rows to emit"));
    }
    rows.iter().try_for_each(ResultRow::validate)?;
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| Error::Internal(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Internal(e.to_string()))
        }
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&rows).map_err(|e| Error::Internal(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit_results(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    let bytes = render(rows, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
