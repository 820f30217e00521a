use serde::{Deserialize, Serialize};

use crate::base::train_base;
use crate::data::{augment, AugmentationSpec, DatasetTable, Split};
use crate::error::{Error, Result};
use crate::experiments::artifacts::write_csv_rows;
use crate::experiments::commands::test_rmse;
use crate::experiments::pipeline::{fit_mode, mean, obtain_base, probe_for, row_means, SeedStreams};
use crate::experiments::{ExperimentConfig, RunDir, RunManifest, RunOptions};
use crate::metrics::{auroc, spearman};
use crate::numerics::{Matrix, Stream};
use crate::posthoc::PosthocModel;

/// Base `b` (trained with one augmentation) against test data corrupted by augmentation `c`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossnetCell {
    pub seed: u64,
    pub base: String,
    pub data: String,
    pub auroc: f64,
    /// RMSE of base `b` on the corrupted test inputs, original units.
    pub rmse: f64,
    pub diagonal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossnetSeedSummary {
    pub seed: u64,
    /// Spearman correlation of RMSE with AUROC over off-diagonal cells.
    pub rmse_auroc_spearman: f64,
    /// Rows whose diagonal cell has the lowest AUROC.
    pub diagonal_lowest_rows: usize,
    pub rows: usize,
}

#[derive(Clone, Debug)]
pub struct CrossnetReport {
    pub cells: Vec<CrossnetCell>,
    pub summaries: Vec<CrossnetSeedSummary>,
    pub manifest: RunManifest,
}

fn counterfactual_scores(model: &PosthocModel, data: &DatasetTable, x: &Matrix, f: &Matrix) -> Result<Vec<f64>> {
    let v = data.target_scaler().inverse_variance(&model.score(x, f)?.variance())?;
    Ok(row_means(&v))
}

fn labels(augs: &[AugmentationSpec]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for a in augs {
        let mut l = a.label();
        if out.contains(&l) {
            l = format!("{l}#{}", out.len());
        }
        out.push(l);
    }
    out
}

/// Reuses one auxiliary network, fitted to the unaugmented base, on bases
/// trained with other augmentations: ID scores are `g(x, f_b(x))` and OOD
/// scores `g(x, f_b(a_c(x)))`.
pub fn run_crossnet(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CrossnetReport> {
    let spec = cfg
        .crossnet
        .as_ref()
        .ok_or_else(|| Error::Config("the crossnet command needs a `crossnet` section".into()))?;
    if !spec.mode.sees_output() {
        return Err(Error::Config("crossnet needs a mode that sees f(x)".into()));
    }
    let mut run = RunDir::create(cfg, "crossnet", opts)?;
    let seeds = cfg.run_seeds(opts.seed_offset);
    let names = labels(&spec.augmentations);
    let b_count = spec.augmentations.len();
    let mut cells = Vec::new();
    let mut summaries = Vec::new();
    let mut matrix_rows = Vec::new();
    for &seed in &seeds {
        let data = cfg.dataset.load(seed)?;
        let streams = SeedStreams::new(seed);
        let base0 = obtain_base(cfg, &cfg.dataset, &data, seed, run.root())?;
        let probe = probe_for(&data, &cfg.probe, seed, cfg.posthoc.schedule.batch_size)?;
        let (model, _) = fit_mode(cfg, &base0, &probe, spec.mode, seed)?;
        let x = data.x(Split::Test);
        let eval = streams.evaluation();
        let corrupted: Vec<Matrix> = spec
            .augmentations
            .iter()
            .enumerate()
            .map(|(c, a)| {
                a.validate(data.input_width())?;
                let always = AugmentationSpec::new(a.kind.clone(), 1.0);
                Ok(augment(&x, &[always], &mut eval.fork(Stream::Custom(c as u64))))
            })
            .collect::<Result<_>>()?;
        let mlp = cfg.base.mlp(data.input_width(), data.output_width());
        let mut seed_cells = Vec::new();
        for (b, aug) in spec.augmentations.iter().enumerate() {
            let (base_b, _, _) = train_base(
                &data,
                &mlp,
                cfg.base.members,
                std::slice::from_ref(aug),
                &cfg.base.schedule,
                &cfg.base.optimizer,
                &streams.crossnet_base(b),
            )?;
            let id = counterfactual_scores(&model, &data, &x, &base_b.predict(&x)?)?;
            let mut row = vec![names[b].clone()];
            for (c, xc) in corrupted.iter().enumerate() {
                let f = base_b.predict(xc)?;
                let cell = CrossnetCell {
                    seed,
                    base: names[b].clone(),
                    data: names[c].clone(),
                    auroc: auroc(&id, &counterfactual_scores(&model, &data, &x, &f)?)?,
                    rmse: test_rmse(&data, &f)?,
                    diagonal: b == c,
                };
                row.push(format!("{:.6}", cell.auroc));
                seed_cells.push(cell);
            }
            matrix_rows.push((seed, row));
        }
        let off: Vec<&CrossnetCell> = seed_cells.iter().filter(|c| !c.diagonal).collect();
        let rho = spearman(
            &off.iter().map(|c| c.rmse).collect::<Vec<_>>(),
            &off.iter().map(|c| c.auroc).collect::<Vec<_>>(),
        )?;
        let diagonal_lowest_rows = (0..b_count)
            .filter(|&b| {
                let row = &seed_cells[b * b_count..(b + 1) * b_count];
                let lowest = row.iter().map(|c| c.auroc).fold(f64::INFINITY, f64::min);
                row[b].auroc <= lowest
            })
            .count();
        log::info!(
            "seed {seed}: rmse/auroc spearman {rho:.3}, mean auroc {:.3}",
            mean(&seed_cells.iter().map(|c| c.auroc).collect::<Vec<_>>())
        );
        summaries.push(CrossnetSeedSummary {
            seed,
            rmse_auroc_spearman: rho,
            diagonal_lowest_rows,
            rows: b_count,
        });
        cells.extend(seed_cells);
    }
    let mut matrix = csv::Writer::from_path(run.artifact("auroc_matrix.csv")?)?;
    let mut header = vec!["seed".to_string(), "base".to_string()];
    header.extend(names.iter().cloned());
    matrix.write_record(&header)?;
    for (seed, row) in &matrix_rows {
        let mut rec = vec![seed.to_string()];
        rec.extend(row.iter().cloned());
        matrix.write_record(&rec)?;
    }
    matrix.flush()?;
    write_csv_rows(&run.artifact("scatter.csv")?, &cells)?;
    write_csv_rows(&run.artifact("summary.csv")?, &summaries)?;
    run.write_json("report.json", &serde_json::json!({ "cells": cells, "summaries": summaries }))?;
    let manifest = run.finish(cfg, &seeds)?;
    Ok(CrossnetReport {
        cells,
        summaries,
        manifest,
    })
}
