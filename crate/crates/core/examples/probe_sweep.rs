//! Refits the hybrid model on growing fractions of the training rows with a
//! fixed update budget.
//!
//! ```text
//! cargo run --release --example probe_sweep [config.json]
//! ```

use std::path::PathBuf;

use iocue::experiments::{run_sweep, ExperimentConfig, RunOptions};

fn main() -> iocue::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/sweep_probe_fraction.json")
    });
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.seeds.truncate(1);
    let opts = RunOptions {
        out: Some(std::env::temp_dir().join("iocue-examples")),
        force: true,
        seed_offset: 0,
    };
    let report = run_sweep(&cfg, &opts)?;
    for c in &report.cells {
        let auroc = c.auroc.map_or("-".to_string(), |a| format!("{a:.4}"));
        println!(
            "{}={:<6} {:<12} rows {:>5} steps {:>6} nll {:.4} ece {:.4} auroc {auroc}",
            c.axis, c.value, c.method, c.probe_rows, c.steps, c.nll, c.ece
        );
    }
    Ok(())
}
