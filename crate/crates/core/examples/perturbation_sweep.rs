//! Tracks mean predicted variance as Gaussian noise of growing scale is added
//! to the test inputs, with and without the base seeing the noisy inputs.
//!
//! ```text
//! cargo run --release --example perturbation_sweep [config.json]
//! ```

use std::path::PathBuf;

use iocue::experiments::{run_perturb, ExperimentConfig, RunOptions};

fn main() -> iocue::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy_perturb.json")
    });
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.seeds.truncate(1);
    let opts = RunOptions {
        out: Some(std::env::temp_dir().join("iocue-examples")),
        force: true,
        seed_offset: 0,
    };
    let report = run_perturb(&cfg, &opts)?;
    println!("{:<12} {:>6} {:>12} {:>12} {:>10}", "method", "sigma", "variance", "clean base", "base rmse");
    for l in &report.levels {
        let ablation = l.mean_uncertainty_ablation.map_or("-".to_string(), |a| format!("{a:.4}"));
        println!("{:<12} {:>6.2} {:>12.4} {:>12} {:>10.4}", l.method, l.sigma, l.mean_uncertainty, ablation, l.base_rmse);
    }
    for s in &report.summaries {
        println!("{}: monotone {}, spearman {:.3}, clean-base spearman {:?}", s.method, s.monotone, s.spearman, s.ablation_spearman);
    }
    Ok(())
}
