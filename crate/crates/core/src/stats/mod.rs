//! Evaluation statistics: macro-averaged classification metrics, percentile
//! bootstrap intervals, paired t-tests with Benjamini–Hochberg adjustment,
//! and least-squares line fits.

mod bootstrap;
mod fdr;
mod linfit;
mod metrics;
mod predictions;
mod report;
mod ttest;

pub use bootstrap::{bootstrap_report, BootstrapConfig, MetricEstimate, MetricReport};
pub use fdr::bh_fdr;
pub use linfit::{fit_linear_r2, LinearFit};
pub use metrics::{balanced_accuracy, macro_auroc, macro_f1, one_vs_rest_auroc, Metric};
pub use predictions::{argmax, PredictionSet};
pub use report::{
    compare_paired, read_report_csv, report_meta, write_comparison_csv, write_report_csv, ComparisonRow,
    PairedSample,
};
pub use ttest::{paired_t_test, t_two_sided_p, TTest};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("out of domain: {0}")]
    Domain(String),
    #[error("x is constant; the line fit is singular")]
    SingularFit,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
