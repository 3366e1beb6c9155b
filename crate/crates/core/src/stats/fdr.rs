use super::StatsError;

/// Benjamini–Hochberg adjusted p-values, returned in input order.
pub fn bh_fdr(pvals: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::Domain(format!("p-value {p} outside [0, 1]")));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (1..=m).rev() {
        let i = order[rank - 1];
        running = running.min(pvals[i] * (m as f64 / rank as f64));
        adjusted[i] = running;
    }
    Ok(adjusted)
}
