//! Accuracy, likelihood, calibration, rank-correlation and detection metrics.

mod rank;
mod report;
mod scalar;

pub use rank::{auroc, average_ranks, euc, mann_whitney_u, pearson, roc_curve, spearman, RocPoint};
pub use report::{append_csv, MetricsReport};
pub use scalar::{
    default_levels, ece, evaluate, gaussians_from, gengaussians_from, mean_nll, pit_values, rmse, Scores,
};
