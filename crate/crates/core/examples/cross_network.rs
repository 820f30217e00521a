//! Trains one base per augmentation, fits a post-hoc model to each, and checks
//! whether higher error on a corrupted test set goes with better detection.
//!
//! ```text
//! cargo run --release --example cross_network [config.json]
//! ```

use std::path::PathBuf;

use iocue::experiments::{run_crossnet, ExperimentConfig, RunOptions};

fn main() -> iocue::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/crossnet_toy.json")
    });
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.seeds.truncate(1);
    let opts = RunOptions {
        out: Some(std::env::temp_dir().join("iocue-examples")),
        force: true,
        seed_offset: 0,
    };
    let report = run_crossnet(&cfg, &opts)?;
    for c in &report.cells {
        let tag = if c.diagonal { " (own augmentation)" } else { "" };
        println!("base {:<30} data {:<30} rmse {:.4} auroc {:.4}{tag}", c.base, c.data, c.rmse, c.auroc);
    }
    for s in &report.summaries {
        println!("seed {}: spearman(rmse, auroc) {:.3}", s.seed, s.rmse_auroc_spearman);
    }
    Ok(())
}
