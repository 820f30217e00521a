//! Scores out-of-range toy inputs by predicted variance, with a plain probe
//! and with a noise-augmented probe.
//!
//! ```text
//! cargo run --release --example ood_detection [config.json]
//! ```

use std::path::PathBuf;

use iocue::experiments::{run_ood, ExperimentConfig, RunOptions};

fn main() -> iocue::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy_ood.json")
    });
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.seeds.truncate(1);
    let opts = RunOptions {
        out: Some(std::env::temp_dir().join("iocue-examples")),
        force: true,
        seed_offset: 0,
    };
    let report = run_ood(&cfg, &opts)?;
    println!("{:<12} {:<10} {:>7} {:>12} {:>12} {:>8}", "method", "probe", "auroc", "id var", "ood var", "lambda");
    for c in &report.cells {
        let lambda = c.lambda.map_or("-".to_string(), |l| format!("{l:.3}"));
        println!(
            "{:<12} {:<10} {:>7.4} {:>12.4} {:>12.4} {:>8}",
            c.method, c.probe, c.auroc, c.id_mean_variance, c.ood_mean_variance, lambda
        );
    }
    Ok(())
}
