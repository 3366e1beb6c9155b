use std::fs::File;
use std::path::{Path, PathBuf};

use clap::Args;
use ovmil::stats::{compare_paired, write_comparison_csv, Metric, PairedSample, PredictionSet};

use super::evaluate::parse_metrics;
use crate::config::{display, write_echo, ConfigFile};
use crate::error::CliError;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Run directories; the first is the baseline.
    #[arg(num_args = 2.., required = true)]
    pub runs: Vec<PathBuf>,
    /// Metric to compare; repeat for several [default: all].
    #[arg(long = "metric")]
    pub metrics: Vec<String>,
    /// Compare every pair of runs rather than each run against the baseline.
    #[arg(long)]
    pub all_pairs: bool,
}

/// Per-fold metric values from `run/fold{i}/predictions_test.csv`.
fn fold_metrics(run: &Path, metrics: &[Metric]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut folds = Vec::new();
    for i in 0.. {
        let path = run.join(format!("fold{i}")).join("predictions_test.csv");
        if !path.exists() {
            break;
        }
        let preds = PredictionSet::read_csv(File::open(&path).map_err(|e| CliError::io(&path, e))?)?;
        folds.push(metrics.iter().map(|m| m.compute(&preds)).collect::<Result<Vec<_>, _>>()?);
    }
    if folds.is_empty() {
        return Err(CliError::Io(format!("{}: no fold*/predictions_test.csv files", run.display())));
    }
    Ok(folds)
}

fn run_name(path: &Path) -> String {
    path.file_name().map_or_else(|| display(path), |n| n.to_string_lossy().into_owned())
}

pub fn run(g: &GlobalArgs, args: CompareArgs) -> Result<(), CliError> {
    let mut file = ConfigFile::load(g.config.as_deref())?;
    let metric_names = match file.take("metrics") {
        Some(m) if args.metrics.is_empty() => vec![m],
        _ => args.metrics.clone(),
    };
    let metrics = parse_metrics(&metric_names)?;
    let all_pairs = args.all_pairs || file.take_parsed::<bool>("all_pairs")?.unwrap_or(false);
    let out = g.out.clone().or_else(|| file.take("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    file.finish()?;

    let values = args.runs.iter().map(|r| fold_metrics(r, &metrics)).collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(usize, usize)> = if all_pairs {
        (0..values.len()).flat_map(|a| (a + 1..values.len()).map(move |b| (a, b))).collect()
    } else {
        (1..values.len()).map(|b| (0, b)).collect()
    };
    let mut samples = Vec::new();
    for &(a, b) in &pairs {
        if values[a].len() != values[b].len() {
            return Err(CliError::Runtime(format!(
                "{} has {} folds but {} has {}",
                args.runs[a].display(),
                values[a].len(),
                args.runs[b].display(),
                values[b].len()
            )));
        }
        for (m, &metric) in metrics.iter().enumerate() {
            samples.push(PairedSample {
                pair: format!("{} vs {}", run_name(&args.runs[a]), run_name(&args.runs[b])),
                metric,
                a: values[a].iter().map(|f| f[m]).collect(),
                b: values[b].iter().map(|f| f[m]).collect(),
            });
        }
    }
    let rows = compare_paired(&samples)?;
    let echo = vec![
        ("runs".to_string(), args.runs.iter().map(|r| display(r)).collect::<Vec<_>>().join(",")),
        ("metrics".to_string(), metrics.iter().map(|m| m.key()).collect::<Vec<_>>().join(",")),
        ("all_pairs".to_string(), all_pairs.to_string()),
    ];
    write_echo(&out, "compare_config.kv", &echo)?;
    let path = out.join("comparison.csv");
    write_comparison_csv(&rows, File::create(&path).map_err(|e| CliError::io(&path, e))?)?;
    for r in &rows {
        println!("{}\t{}\tt {:.4}\tp {:.4}\tadjusted {:.4}", r.pair, r.metric.key(), r.t, r.p_raw, r.p_adjusted);
    }
    Ok(())
}
