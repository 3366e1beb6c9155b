use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AbmilError, AbmilParams};
use crate::{FeatureBag, NUM_CLASSES};

/// How a forward pass treats dropout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// All patches, no dropout.
    Eval,
    /// Data dropout to `max_patches`, then parameter dropout with rate
    /// `dropout`, both driven by `seed`.
    Train { dropout: f64, max_patches: usize, seed: u64 },
}

/// Intermediates kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) fingerprint: u64,
    pub(crate) n: usize,
    /// Selected patch features, `n × dim`, widened to f64.
    pub(crate) h: Vec<f64>,
    /// Projection before the relu, `n × m1`.
    pub(crate) pre: Vec<f64>,
    /// Dropout scale per projected unit (`0` or `1/(1−p)`); empty when off.
    pub(crate) keep: Vec<f64>,
    /// Projected features after relu and dropout, `n × m1`.
    pub(crate) u: Vec<f64>,
    /// Attention hidden activations `tanh(Vᵀu + bv)`, `n × m2`.
    pub(crate) t: Vec<f64>,
    pub(crate) attention: Vec<f64>,
    pub(crate) z: Vec<f64>,
    pub(crate) logits: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: [f64; NUM_CLASSES],
    /// Attention over the patches in `patches`, in the same order.
    pub attention: Vec<f64>,
    /// Bag row indices that took part, ascending.
    pub patches: Vec<usize>,
    pub cache: ForwardCache,
}

/// Forward pass over a feature bag.
pub fn forward(bag: &FeatureBag, params: &AbmilParams, mode: Mode) -> Result<Forward, AbmilError> {
    if bag.dim != params.shape().dim {
        return Err(AbmilError::Shape(format!(
            "bag {} has dim {}, model expects {}",
            bag.slide_id,
            bag.dim,
            params.shape().dim
        )));
    }
    forward_rows(&bag.features, params, mode)
}

/// Forward pass over a row-major `n × dim` feature matrix.
pub fn forward_rows(features: &[f32], params: &AbmilParams, mode: Mode) -> Result<Forward, AbmilError> {
    let shape = params.shape();
    let (dim, m1, m2) = (shape.dim, shape.m1, shape.m2);
    if features.is_empty() {
        return Err(AbmilError::EmptyBag);
    }
    if features.len() % dim != 0 {
        return Err(AbmilError::Shape(format!("{} values do not form rows of width {dim}", features.len())));
    }
    let total = features.len() / dim;

    let mut rng = match mode {
        Mode::Eval => None,
        Mode::Train { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let patches: Vec<usize> = match (mode, rng.as_mut()) {
        (Mode::Train { max_patches, .. }, Some(rng)) if max_patches < total => {
            let mut idx = rand::seq::index::sample(rng, total, max_patches).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..total).collect(),
    };
    let n = patches.len();

    // Rows are processed in a content-defined order so pooled sums do not
    // depend on how the bag happens to be stored.
    let row = |i: usize| &features[i * dim..(i + 1) * dim];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (row(patches[a]), row(patches[b]));
        ra.iter().map(|x| x.to_bits()).cmp(rb.iter().map(|x| x.to_bits())).then(a.cmp(&b))
    });

    let mut h = Vec::with_capacity(n * dim);
    for &o in &order {
        h.extend(row(patches[o]).iter().map(|&x| x as f64));
    }

    let (w1, b1) = (params.w1(), params.b1());
    let mut pre = Vec::with_capacity(n * m1);
    for i in 0..n {
        let mut row = b1.to_vec();
        for (d, &x) in h[i * dim..(i + 1) * dim].iter().enumerate() {
            if x != 0.0 {
                for (r, &w) in row.iter_mut().zip(&w1[d * m1..(d + 1) * m1]) {
                    *r += x * w;
                }
            }
        }
        pre.extend(row);
    }

    let mut u: Vec<f64> = pre.iter().map(|&v| v.max(0.0)).collect();
    let keep = match (mode, rng.as_mut()) {
        (Mode::Train { dropout, .. }, Some(rng)) if dropout > 0.0 => {
            let scale = 1.0 / (1.0 - dropout);
            let keep: Vec<f64> =
                (0..n * m1).map(|_| if rng.random::<f64>() < dropout { 0.0 } else { scale }).collect();
            u.iter_mut().zip(&keep).for_each(|(x, k)| *x *= k);
            keep
        }
        _ => Vec::new(),
    };

    let (v, bv, w) = (params.v(), params.bv(), params.w());
    let mut t = Vec::with_capacity(n * m2);
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let mut q = bv.to_vec();
        for (j, &x) in u[i * m1..(i + 1) * m1].iter().enumerate() {
            if x != 0.0 {
                for (r, &vv) in q.iter_mut().zip(&v[j * m2..(j + 1) * m2]) {
                    *r += x * vv;
                }
            }
        }
        q.iter_mut().for_each(|x| *x = x.tanh());
        scores.push(q.iter().zip(w).map(|(a, b)| a * b).sum::<f64>());
        t.extend(q);
    }
    let attention = softmax(&scores);

    let mut z = vec![0.0; m1];
    for (i, &a) in attention.iter().enumerate() {
        for (zj, &x) in z.iter_mut().zip(&u[i * m1..(i + 1) * m1]) {
            *zj += a * x;
        }
    }

    let (w2, b2) = (params.w2(), params.b2());
    let mut logits = [0.0; NUM_CLASSES];
    logits.copy_from_slice(b2);
    for (j, &zj) in z.iter().enumerate() {
        for (l, &wv) in logits.iter_mut().zip(&w2[j * NUM_CLASSES..(j + 1) * NUM_CLASSES]) {
            *l += zj * wv;
        }
    }

    let cache = ForwardCache {
        fingerprint: params.fingerprint(),
        n,
        h,
        pre,
        keep,
        u,
        t,
        attention: attention.clone(),
        z,
        logits,
    };
    let mut by_patch = vec![0.0; n];
    for (&o, &a) in order.iter().zip(&attention) {
        by_patch[o] = a;
    }
    Ok(Forward { logits, attention: by_patch, patches, cache })
}

/// Max-shifted softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
