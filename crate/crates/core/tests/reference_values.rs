//! Published constants and reference numbers, checked against the text of
//! `paper.md` at the workspace root.

mod common;

use iocue::data::PerturbationSweep;
use iocue::experiments::{default_widths, BaseSpec, ExperimentConfig, PosthocSpec, SweepSpec};
use iocue::nn::Activation;

use common::*;

fn reference_text() -> String {
    std::fs::read_to_string(workspace_root().join("paper.md")).expect("paper.md at the workspace root")
}

fn numbers(s: &str) -> Vec<f64> {
    s.split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
        .filter_map(|t| t.trim_matches('.').parse().ok())
        .collect()
}

/// (IO-CUE NLL, IO-CUE ECE) for a row of the benchmark table.
fn table_row(text: &str, dataset: &str) -> (f64, f64) {
    let line = text
        .lines()
        .find(|l| l.trim_start().starts_with(&format!("{dataset} &")))
        .unwrap_or_else(|| panic!("no table row for {dataset}"));
    // columns: ensemble, output-only, IO-CUE for NLL then ECE, each "mean ± std"
    let cells: Vec<f64> = line.split('&').skip(1).map(|c| numbers(c)[0]).collect();
    (cells[2], cells[5])
}

#[test]
fn perturbation_levels() {
    let text = reference_text();
    let line = text.lines().find(|l| l.contains("seven increasing levels")).expect("perturbation paragraph");
    let list = &line[line.rfind('[').unwrap()..];
    let levels = numbers(&list[..list.find(']').unwrap()]);
    assert_eq!(levels, vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]);
    assert_eq!(PerturbationSweep::default().sigmas, levels);
    assert_eq!(config("toy_perturb.json").perturb.unwrap().sigmas, levels);
}

#[test]
fn benchmark_reference_values_sit_inside_the_acceptance_bounds() {
    let text = reference_text();
    let (wine_nll, wine_ece) = table_row(&text, "Wine");
    assert_eq!((wine_nll, wine_ece), (0.92, 0.03));
    assert!(wine_nll <= 1.3 && wine_ece <= 0.10);
    let (boston_nll, boston_ece) = table_row(&text, "Boston");
    assert_eq!((boston_nll, boston_ece), (2.44, 0.05));
    assert!(boston_nll <= 3.0);
}

#[test]
fn tabular_training_regime() {
    let text = reference_text();
    for phrase in [
        "three layers of 100 units each",
        "learning rate of 0.0001 for the base models",
        "number of epochs to 100",
        "8 consecutive evaluations",
        "each layer held 50 units",
        "intermittent Tanh activations",
        "learning rate of 0.0001 and weight decay at 0.01",
        "The batch size was 128 for all models",
    ] {
        assert!(text.contains(phrase), "paper.md lacks '{phrase}'");
    }
    let base = BaseSpec::default();
    assert_eq!(base.hidden, vec![100, 100, 100]);
    assert_eq!(base.activation, Activation::Relu);
    assert_eq!(base.optimizer.lr, 1e-4);
    assert_eq!((base.schedule.max_epochs, base.schedule.early_stop_patience, base.schedule.batch_size), (100, 8, 128));
    let post = PosthocSpec::default();
    assert_eq!(post.hidden, vec![50, 50, 50]);
    assert_eq!(post.activation, Activation::Tanh);
    assert_eq!((post.optimizer.lr, post.optimizer.weight_decay), (1e-4, 0.01));
    assert_eq!(post.schedule.batch_size, 128);

    let suite = config("uci_suite.json");
    assert_eq!(suite.base.hidden, vec![100, 100, 100]);
    assert_eq!(suite.base.optimizer.lr, 1e-4);
    assert_eq!(suite.base.schedule.max_epochs, 100);
    assert_eq!(suite.base.schedule.early_stop_patience, 8);
    assert_eq!(suite.posthoc.hidden, vec![50, 50, 50]);
    assert_eq!((suite.posthoc.optimizer.lr, suite.posthoc.optimizer.weight_decay), (1e-4, 0.01));
}

#[test]
fn probe_fraction_sweep_points() {
    assert!(reference_text().contains("10\\%, 50\\%, and 100\\%"));
    let cfg = ExperimentConfig::from_json(r#"{"name":"s","dataset":{"kind":"toy"},"seeds":[0],"sweep":{"axis":"probe_fraction"}}"#)
        .unwrap();
    match cfg.sweep.unwrap() {
        SweepSpec::ProbeFraction { values } => assert_eq!(values, vec![0.1, 0.5, 1.0]),
        other => panic!("unexpected sweep {other:?}"),
    }
}

#[test]
fn three_increasing_model_sizes() {
    let text = reference_text();
    for name in ["Small", "Medium", "Large (default)"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(name) && l.contains('&')), "{name} row");
    }
    let presets = default_widths();
    let names: Vec<&str> = presets.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["small", "medium", "large"]);
    let params = |hidden: &[usize]| {
        let mut widths = vec![2];
        widths.extend_from_slice(hidden);
        widths.push(1);
        widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum::<usize>()
    };
    let sizes: Vec<usize> = presets.iter().map(|p| params(&p.hidden)).collect();
    assert!(sizes.windows(2).all(|w| w[0] < w[1]), "{sizes:?}");
    // the largest preset is the default post-hoc architecture
    assert_eq!(presets[2].hidden, PosthocSpec::default().hidden);
}
