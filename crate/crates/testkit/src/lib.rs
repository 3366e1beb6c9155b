//! Reference oracles and synthetic data for testing `ovmil`.
//!
//! Everything here works on plain slices and arrays and is written from the
//! textbook definition, deliberately independent of the library's own
//! algorithms (no shared code paths, often a different formulation).

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

// ---------------------------------------------------------------------------
// Thresholding

/// Exhaustive Otsu: for every cut `t` in 0..=254 computes the textbook
/// between-class variance `w0·w1·(mu0 − mu1)²` in exact rationals, with class
/// sums recomputed from scratch. Returns the smallest maximiser.
pub fn otsu_exhaustive(hist: &[u64; 256]) -> u8 {
    let total: u128 = hist.iter().map(|&c| c as u128).sum();
    let big = |v: u128| BigRational::from_integer(BigInt::from(v));
    let mut best: Option<(BigRational, u8)> = None;
    for t in 0..255usize {
        let n0: u128 = hist[..=t].iter().map(|&c| c as u128).sum();
        let s0: u128 = hist[..=t].iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();
        let n1: u128 = hist[t + 1..].iter().map(|&c| c as u128).sum();
        let s1: u128 = hist[t + 1..].iter().enumerate().map(|(i, &c)| (i + t + 1) as u128 * c as u128).sum();
        let var = if n0 == 0 || n1 == 0 {
            big(0)
        } else {
            let w0 = big(n0) / big(total);
            let w1 = big(n1) / big(total);
            let diff = big(s0) / big(n0) - big(s1) / big(n1);
            w0 * w1 * &diff * &diff
        };
        match &best {
            Some((b, _)) if var <= *b => {}
            _ => best = Some((var, t as u8)),
        }
    }
    best.expect("255 candidate cuts").1
}

// ---------------------------------------------------------------------------
// Classification metrics

fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// `k × k` confusion counts, rows = truth, columns = argmax prediction.
pub fn confusion(truth: &[usize], scores: &[Vec<f64>], k: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; k]; k];
    for (t, row) in truth.iter().zip(scores) {
        m[*t][argmax_lowest(row)] += 1;
    }
    m
}

pub fn brute_balanced_accuracy(truth: &[usize], scores: &[Vec<f64>], k: usize) -> f64 {
    let m = confusion(truth, scores, k);
    let mut acc = 0.0;
    for c in 0..k {
        let support: u64 = m[c].iter().sum();
        acc += m[c][c] as f64 / support as f64;
    }
    acc / k as f64
}

pub fn brute_macro_f1(truth: &[usize], scores: &[Vec<f64>], k: usize) -> f64 {
    let preds: Vec<usize> = scores.iter().map(|r| argmax_lowest(r)).collect();
    let mut total = 0.0;
    for c in 0..k {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fneg = 0.0;
        for (t, p) in truth.iter().zip(&preds) {
            match (*t == c, *p == c) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fneg += 1.0,
                _ => {}
            }
        }
        // F1 = 2TP / (2TP + FP + FN); zero when there is nothing to score.
        let denom = 2.0 * tp + fp + fneg;
        total += if denom == 0.0 || tp == 0.0 { 0.0 } else { 2.0 * tp / denom };
    }
    total / k as f64
}

/// One-vs-rest AUROC by explicit pair counting, ties worth one half.
pub fn pair_count_auroc(truth: &[usize], scores: &[Vec<f64>], class: usize) -> f64 {
    let mut wins2 = 0u64; // doubled so ties stay integral
    let mut pairs = 0u64;
    for (i, ti) in truth.iter().enumerate() {
        if *ti != class {
            continue;
        }
        for (j, tj) in truth.iter().enumerate() {
            if *tj == class {
                continue;
            }
            pairs += 1;
            let (a, b) = (scores[i][class], scores[j][class]);
            if a > b {
                wins2 += 2;
            } else if a == b {
                wins2 += 1;
            }
        }
    }
    wins2 as f64 / (2 * pairs) as f64
}

pub fn brute_macro_auroc(truth: &[usize], scores: &[Vec<f64>], k: usize) -> f64 {
    (0..k).map(|c| pair_count_auroc(truth, scores, c)).sum::<f64>() / k as f64
}

/// Random labelled score rows with every class present. Scores are rounded
/// to one decimal so that ties are common; rows are not normalised.
pub fn random_predictions(seed: u64, k: usize, n: usize) -> (Vec<usize>, Vec<Vec<f64>>) {
    assert!(n >= k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    for i in (1..n).rev() {
        truth.swap(i, rng.random_range(0..=i));
    }
    let scores = truth
        .iter()
        .map(|&t| {
            (0..k)
                .map(|c| rng.random_range(0.0..1.0) + if c == t { rng.random_range(0.0..0.6) } else { 0.0 })
                .map(|v: f64| (v * 10.0).round() / 10.0)
                .collect()
        })
        .collect();
    (truth, scores)
}

// ---------------------------------------------------------------------------
// Multiple testing, t distribution, regression

/// Benjamini–Hochberg straight from the definition:
/// `q_i = min(1, min_{j ≥ rank(i)} p_(j)·m/j)`.
pub fn bh_literal(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap().then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    for (rank0, &i) in order.iter().enumerate() {
        let mut q = f64::INFINITY;
        for (j0, &jj) in order.iter().enumerate().skip(rank0) {
            q = q.min(p[jj] * m as f64 / (j0 + 1) as f64);
        }
        out[i] = q.min(1.0);
    }
    out
}

/// Two-sided Student-t tail probability by quadrature.
///
/// With `x = √ν·tan θ` the density becomes proportional to `cos^(ν−1) θ` on
/// `[0, π/2)`, so `P(|T| > t) = ∫_{θ₀}^{π/2} cos^(ν−1) / ∫_0^{π/2} cos^(ν−1)`
/// with `θ₀ = atan(t/√ν)`. Both integrals use composite Simpson.
pub fn t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let f = |th: f64| th.cos().powf(df - 1.0);
    let theta0 = (t.abs() / df.sqrt()).atan();
    let half_pi = std::f64::consts::FRAC_PI_2;
    simpson(f, theta0, half_pi, 200_000) / simpson(f, 0.0, half_pi, 200_000)
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Least squares via the 2×2 normal equations; returns `(slope, intercept, r²)`.
pub fn normal_equation_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let ybar = sy / n;
    let ss_tot: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}

// ---------------------------------------------------------------------------
// Gradients

/// Central finite differences of `f` at `x` with step `h`.
pub fn central_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Synthetic stain images

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|c| c / n)
}

pub fn angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (a, b) = (unit(a), unit(b));
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
    dot.acos().to_degrees()
}

/// A hematoxylin-like unit vector and a second unit vector `angle` degrees
/// away, rotated toward eosin within the H–E plane. All components stay
/// positive for angles up to about 43°; beyond that the second vector
/// has negative optical density and cannot be rendered.
pub fn stain_pair(angle: f64) -> [[f64; 3]; 2] {
    let h = unit([0.65, 0.70, 0.29]);
    let e = unit([0.07, 0.99, 0.11]);
    let dot = h[0] * e[0] + h[1] * e[1] + h[2] * e[2];
    let u = unit([e[0] - dot * h[0], e[1] - dot * h[1], e[2] - dot * h[2]]);
    let (c, s) = (angle.to_radians().cos(), angle.to_radians().sin());
    [h, [0, 1, 2].map(|i| c * h[i] + s * u[i])]
}

/// Renders a noise-free two-stain tile. A fifth of the pixels are pure stain
/// one, a fifth pure stain two, the rest mixtures. Returns interleaved RGB
/// bytes and the true per-pixel concentrations.
pub fn two_stain_tile(
    width: u32,
    height: u32,
    stains: [[f64; 3]; 2],
    conc_max: [f64; 2],
    seed: u64,
) -> (Vec<u8>, Vec<[f64; 2]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (width * height) as usize;
    let mut pixels = Vec::with_capacity(n * 3);
    let mut conc = Vec::with_capacity(n);
    for i in 0..n {
        let c = match i % 5 {
            0 => [rng.random_range(0.3..1.0) * conc_max[0], 0.0],
            1 => [0.0, rng.random_range(0.3..1.0) * conc_max[1]],
            _ => [rng.random_range(0.2..1.0) * conc_max[0], rng.random_range(0.2..1.0) * conc_max[1]],
        };
        for ch in 0..3 {
            let od = stains[0][ch] * c[0] + stains[1][ch] * c[1];
            pixels.push((256.0 * 10f64.powf(-od) - 1.0).round().clamp(0.0, 255.0) as u8);
        }
        conc.push(c);
    }
    (pixels, conc)
}

/// Concentrations that best explain one observed 8-bit pixel under `stains`,
/// found by checking every active set of the two-variable non-negative
/// least-squares problem.
pub fn nnls_on_pixel(stains: [[f64; 3]; 2], rgb: [u8; 3]) -> [f64; 2] {
    let od = rgb.map(|v| -((v as f64 + 1.0) / 256.0).log10());
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let resid = |c: [f64; 2]| {
        (0..3).map(|i| (stains[0][i] * c[0] + stains[1][i] * c[1] - od[i]).powi(2)).sum::<f64>()
    };
    let (g11, g12, g22) = (dot(stains[0], stains[0]), dot(stains[0], stains[1]), dot(stains[1], stains[1]));
    let (b1, b2) = (dot(stains[0], od), dot(stains[1], od));
    let det = g11 * g22 - g12 * g12;
    let mut candidates = vec![[0.0, 0.0], [(b1 / g11).max(0.0), 0.0], [0.0, (b2 / g22).max(0.0)]];
    let free = [(g22 * b1 - g12 * b2) / det, (g11 * b2 - g12 * b1) / det];
    if free[0] >= 0.0 && free[1] >= 0.0 {
        candidates.push(free);
    }
    candidates.into_iter().min_by(|a, b| resid(*a).total_cmp(&resid(*b))).unwrap()
}

// ---------------------------------------------------------------------------
// Synthetic multiple-instance data

#[derive(Debug, Clone)]
pub struct SyntheticBag {
    pub label: usize,
    pub n_patches: usize,
    /// Row-major `n_patches × dim`.
    pub features: Vec<f32>,
    /// Which patches carry the class signal.
    pub signal: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct MilTask {
    pub n_classes: usize,
    pub dim: usize,
    pub min_patches: usize,
    pub max_patches: usize,
    pub signal_fraction: f64,
    /// Length of the class direction added to signal patches.
    pub amplitude: f64,
}

impl MilTask {
    /// Orthonormal class directions, fixed by `seed`.
    pub fn directions(&self, seed: u64) -> Vec<Vec<f64>> {
        assert!(self.n_classes <= self.dim, "{} orthonormal directions need dim ≥ {0}", self.n_classes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        while dirs.len() < self.n_classes {
            let mut v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            for d in &dirs {
                let dot: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(d).for_each(|(a, b)| *a -= dot * b);
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-6 {
                dirs.push(v.into_iter().map(|a| a / n).collect());
            }
        }
        dirs
    }

    /// `n_bags` bags with labels cycling through the classes.
    pub fn sample(&self, n_bags: usize, directions: &[Vec<f64>], seed: u64) -> Vec<SyntheticBag> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_bags)
            .map(|b| {
                let label = b % self.n_classes;
                let n = rng.random_range(self.min_patches..=self.max_patches);
                let n_signal = ((n as f64 * self.signal_fraction).round() as usize).max(1);
                let mut signal = vec![false; n];
                for s in rand::seq::index::sample(&mut rng, n, n_signal) {
                    signal[s] = true;
                }
                let mut features = Vec::with_capacity(n * self.dim);
                for &is_signal in &signal {
                    for d in 0..self.dim {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        let v = if is_signal { noise + self.amplitude * directions[label][d] } else { noise };
                        features.push(v as f32);
                    }
                }
                SyntheticBag { label, n_patches: n, features, signal }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn otsu_oracle_tie_rule() {
        let mut h = [0u64; 256];
        h[0] = 3;
        h[255] = 3;
        assert_eq!(otsu_exhaustive(&h), 0);
    }

    #[test]
    fn t_quadrature_matches_known_values() {
        // t = 2.776445 is the 97.5% quantile at 4 df.
        assert!((t_two_sided_quadrature(2.776445, 4.0) - 0.05).abs() < 1e-6);
        // One degree of freedom is Cauchy: P(|T| > 1) = 1/2.
        assert!((t_two_sided_quadrature(1.0, 1.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn bh_literal_hand_example() {
        let q = bh_literal(&[0.01, 0.02, 0.03, 0.04, 0.05]);
        assert!(q.iter().all(|v| (v - 0.05).abs() < 1e-15));
    }

    #[test]
    fn stain_pair_angle() {
        for a in [15.0, 30.0, 43.0] {
            let [h, e] = stain_pair(a);
            assert!((angle_deg(h, e) - a).abs() < 1e-9);
            assert!(e.iter().all(|&c| c > 0.0));
        }
    }
}
