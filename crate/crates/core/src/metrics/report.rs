use std::fs::OpenOptions;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{default_levels, Scores};

/// One evaluated (experiment, method, dataset, seed) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct MetricsReport {
    pub experiment: String,
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    pub n: usize,
    pub rmse: Option<f64>,
    pub nll: Option<f64>,
    pub ece: Option<f64>,
    pub euc: Option<f64>,
    pub auroc: Option<f64>,
    pub ece_levels: Vec<f64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl MetricsReport {
    pub fn new(experiment: &str, method: &str, dataset: &str, seed: u64, n: usize) -> Self {
        Self {
            experiment: experiment.into(),
            method: method.into(),
            dataset: dataset.into(),
            seed,
            n,
            rmse: None,
            nll: None,
            ece: None,
            euc: None,
            auroc: None,
            ece_levels: default_levels(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }

    pub fn with_scores(mut self, s: Scores) -> Self {
        self.rmse = Some(s.rmse);
        self.nll = Some(s.nll);
        self.ece = Some(s.ece);
        self.euc = Some(s.euc);
        self
    }

    pub fn with_auroc(mut self, auroc: f64) -> Self {
        self.auroc = Some(auroc);
        self
    }
}

#[derive(Serialize)]
struct FlatRow<'a> {
    experiment: &'a str,
    method: &'a str,
    dataset: &'a str,
    seed: u64,
    n: usize,
    rmse: Option<f64>,
    nll: Option<f64>,
    ece: Option<f64>,
    euc: Option<f64>,
    auroc: Option<f64>,
    timestamp: u64,
}

/// Appends reports to a flat CSV, writing the header when the file is new.
pub fn append_csv(path: &Path, reports: &[MetricsReport]) -> Result<()> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in reports {
        w.serialize(FlatRow {
            experiment: &r.experiment,
            method: &r.method,
            dataset: &r.dataset,
            seed: r.seed,
            n: r.n,
            rmse: r.rmse,
            nll: r.nll,
            ece: r.ece,
            euc: r.euc,
            auroc: r.auroc,
            timestamp: r.timestamp,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_written_once() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let r = MetricsReport::new("e", "hybrid", "toy", 1, 10).with_auroc(0.7);
        append_csv(&p, std::slice::from_ref(&r)).unwrap();
        append_csv(&p, &[r]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("experiment,method"));
    }
}
