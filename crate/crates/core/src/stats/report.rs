use std::io::{Read, Write};

use super::{bh_fdr, paired_t_test, BootstrapConfig, Metric, MetricEstimate, MetricReport, StatsError};
use crate::kv::render_kv;

/// Writes `metric,point,boot_mean,ci_low,ci_high`, one row per metric.
pub fn write_report_csv(report: &MetricReport, out: impl Write) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "point", "boot_mean", "ci_low", "ci_high"])?;
    for e in &report.estimates {
        w.write_record([
            e.metric.key().to_string(),
            e.point.to_string(),
            e.boot_mean.to_string(),
            e.ci_low.to_string(),
            e.ci_high.to_string(),
        ])?;
    }
    w.flush().map_err(|e| StatsError::Csv(e.into()))?;
    Ok(())
}

pub fn read_report_csv(input: impl Read) -> Result<Vec<MetricEstimate>, StatsError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        if row.len() != 5 {
            return Err(StatsError::Input(format!("report row has {} fields", row.len())));
        }
        let num = |i: usize| row[i].parse::<f64>().map_err(|e| StatsError::Input(format!("{}: {e}", &row[i])));
        out.push(MetricEstimate {
            metric: row[0].parse()?,
            point: num(1)?,
            boot_mean: num(2)?,
            ci_low: num(3)?,
            ci_high: num(4)?,
        });
    }
    Ok(out)
}

/// Sidecar metadata for a report, as key=value lines.
pub fn report_meta(report: &MetricReport, config: &BootstrapConfig) -> String {
    render_kv([
        ("ci_method", "percentile".to_string()),
        ("ci_level", "0.95".to_string()),
        ("iterations", report.iterations.to_string()),
        ("seed", report.seed.to_string()),
        ("max_retries", config.max_retries.to_string()),
        ("n_slides", report.n.to_string()),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub pair: String,
    pub metric: Metric,
    pub t: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub degenerate: bool,
}

/// One paired comparison: label, metric, and matched per-fold values.
#[derive(Debug, Clone)]
pub struct PairedSample {
    pub pair: String,
    pub metric: Metric,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Paired t-tests for every sample, with Benjamini–Hochberg adjustment
/// applied across all rows together.
pub fn compare_paired(samples: &[PairedSample]) -> Result<Vec<ComparisonRow>, StatsError> {
    let tests = samples.iter().map(|s| paired_t_test(&s.a, &s.b)).collect::<Result<Vec<_>, _>>()?;
    let adjusted = bh_fdr(&tests.iter().map(|t| t.p).collect::<Vec<_>>())?;
    Ok(samples
        .iter()
        .zip(tests)
        .zip(adjusted)
        .map(|((s, t), p_adjusted)| ComparisonRow {
            pair: s.pair.clone(),
            metric: s.metric,
            t: t.t,
            p_raw: t.p,
            p_adjusted,
            degenerate: t.degenerate,
        })
        .collect())
}

pub fn write_comparison_csv(rows: &[ComparisonRow], out: impl Write) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair", "metric", "t", "p_raw", "p_adjusted", "degenerate"])?;
    for r in rows {
        w.write_record([
            r.pair.clone(),
            r.metric.key().to_string(),
            r.t.to_string(),
            r.p_raw.to_string(),
            r.p_adjusted.to_string(),
            r.degenerate.to_string(),
        ])?;
    }
    w.flush().map_err(|e| StatsError::Csv(e.into()))?;
    Ok(())
}
