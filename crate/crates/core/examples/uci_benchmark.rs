//! Compares a deep ensemble with post-hoc variance nets on tabular regression
//! data. Defaults to the red wine table; pass `configs/uci_suite.json` for all
//! five datasets.
//!
//! ```text
//! cargo run --release --example uci_benchmark [config.json]
//! ```

use std::path::PathBuf;

use iocue::experiments::{run_uci_suite, ExperimentConfig, RunOptions};

fn main() -> iocue::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    if std::env::var_os("UQ_DATA_DIR").is_none() {
        std::env::set_var("UQ_DATA_DIR", &root);
    }
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| root.join("configs/wine.json"));
    let cfg = ExperimentConfig::load(&path)?;
    let opts = RunOptions {
        out: Some(std::env::temp_dir().join("iocue-examples")),
        force: true,
        seed_offset: 0,
    };
    let report = run_uci_suite(&cfg, &opts)?;
    print!("{}", report.table);
    Ok(())
}
