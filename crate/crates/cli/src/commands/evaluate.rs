use std::fs::File;
use std::path::{Path, PathBuf};

use clap::Args;
use ovmil::stats::{bootstrap_report, report_meta, write_report_csv, BootstrapConfig, Metric, PredictionSet};

use super::{pool, workers};
use crate::config::{display, pick, ConfigFile};
use crate::error::CliError;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Prediction CSV; repeat for several. Reports are named `<stem>_report.csv`.
    #[arg(long = "predictions", required = true)]
    pub predictions: Vec<PathBuf>,
    /// Bootstrap iterations [default: 10000].
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Metric to report; repeat for several [default: all].
    #[arg(long = "metric")]
    pub metrics: Vec<String>,
}

pub(crate) fn parse_metrics(names: &[String]) -> Result<Vec<Metric>, CliError> {
    if names.is_empty() {
        return Ok(Metric::ALL.to_vec());
    }
    names
        .iter()
        .flat_map(|n| n.split(','))
        .map(|n| n.trim().parse::<Metric>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "predictions".into(), |s| s.to_string_lossy().into_owned())
}

pub fn run(g: &GlobalArgs, args: EvaluateArgs) -> Result<(), CliError> {
    let mut file = ConfigFile::load(g.config.as_deref())?;
    let iterations = pick(args.bootstrap, &mut file, "iterations", 10_000)?;
    let seed = pick(g.seed, &mut file, "seed", 0)?;
    let max_retries = pick(None, &mut file, "max_retries", BootstrapConfig::default().max_retries)?;
    let metric_names = match file.take("metrics") {
        Some(m) if args.metrics.is_empty() => vec![m],
        _ => args.metrics.clone(),
    };
    let metrics = parse_metrics(&metric_names)?;
    let workers = workers(g, &mut file)?;
    let out_flag = g.out.clone().or_else(|| file.take("out").map(PathBuf::from));
    file.finish()?;
    if iterations == 0 {
        return Err(CliError::Usage("--bootstrap must be at least 1".into()));
    }
    let config = BootstrapConfig { iterations, seed, max_retries };
    let pool = pool(workers)?;

    let mut echoed = false;
    for path in &args.predictions {
        let out = match &out_flag {
            Some(o) => o.clone(),
            None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        if !echoed || out_flag.is_none() {
            let echo = vec![
                ("predictions".to_string(), args.predictions.iter().map(|p| display(p)).collect::<Vec<_>>().join(",")),
                ("iterations".to_string(), iterations.to_string()),
                ("seed".to_string(), seed.to_string()),
                ("max_retries".to_string(), max_retries.to_string()),
                ("metrics".to_string(), metrics.iter().map(|m| m.key()).collect::<Vec<_>>().join(",")),
            ];
            crate::config::write_echo(&out, "evaluate_config.kv", &echo)?;
            echoed = true;
        }
        let preds = PredictionSet::read_csv(File::open(path).map_err(|e| CliError::io(path, e))?)?;
        let report = pool.install(|| bootstrap_report(&preds, &metrics, &config))?;
        let name = stem(path);
        let report_path = out.join(format!("{name}_report.csv"));
        write_report_csv(&report, File::create(&report_path).map_err(|e| CliError::io(&report_path, e))?)?;
        let meta_path = out.join(format!("{name}_report_meta.kv"));
        std::fs::write(&meta_path, report_meta(&report, &config)).map_err(|e| CliError::io(&meta_path, e))?;
        for e in &report.estimates {
            println!(
                "{name}\t{}\t{:.4}\tmean {:.4}\t95% CI [{:.4}, {:.4}]",
                e.metric.key(),
                e.point,
                e.boot_mean,
                e.ci_low,
                e.ci_high
            );
        }
    }
    Ok(())
}
