use super::forward::ForwardCache;
use super::loss::predict_proba;
use super::{AbmilError, AbmilParams};
use crate::NUM_CLASSES;

/// Gradient of the weighted cross-entropy of `label` with respect to every
/// parameter, given the cache from a forward pass with the same `params`.
pub fn backward(
    cache: &ForwardCache,
    params: &AbmilParams,
    label: usize,
    class_weights: &[f64; NUM_CLASSES],
) -> Result<AbmilParams, AbmilError> {
    if cache.fingerprint != params.fingerprint() {
        return Err(AbmilError::StaleCache);
    }
    if label >= NUM_CLASSES {
        return Err(AbmilError::Shape(format!("label {label} out of range")));
    }
    let shape = params.shape();
    let (dim, m1, m2, k) = (shape.dim, shape.m1, shape.m2, NUM_CLASSES);
    let n = cache.n;
    let mut g = AbmilParams::zeros(shape);

    let p = predict_proba(&cache.logits);
    let wy = class_weights[label];
    let dlogits: Vec<f64> = (0..k).map(|c| wy * (p[c] - if c == label { 1.0 } else { 0.0 })).collect();

    g.tensor_mut(6).copy_from_slice(&dlogits);
    let w2 = params.w2();
    let mut dz = vec![0.0; m1];
    {
        let gw2 = g.tensor_mut(5);
        for j in 0..m1 {
            for c in 0..k {
                gw2[j * k + c] = cache.z[j] * dlogits[c];
                dz[j] += w2[j * k + c] * dlogits[c];
            }
        }
    }

    // z = Σ a_i u_i
    let a = &cache.attention;
    let mut du = vec![0.0; n * m1];
    let mut da = vec![0.0; n];
    for i in 0..n {
        let ui = &cache.u[i * m1..(i + 1) * m1];
        da[i] = ui.iter().zip(&dz).map(|(x, y)| x * y).sum();
        for (d, &y) in du[i * m1..(i + 1) * m1].iter_mut().zip(&dz) {
            *d = a[i] * y;
        }
    }
    let mean_da: f64 = a.iter().zip(&da).map(|(x, y)| x * y).sum();
    let ds: Vec<f64> = a.iter().zip(&da).map(|(ai, dai)| ai * (dai - mean_da)).collect();

    // s_i = w · tanh(Vᵀ u_i + bv)
    let (v, w) = (params.v(), params.w());
    let mut gv = vec![0.0; m1 * m2];
    let mut gbv = vec![0.0; m2];
    let mut gw = vec![0.0; m2];
    let mut dq = vec![0.0; m2];
    for i in 0..n {
        let ti = &cache.t[i * m2..(i + 1) * m2];
        for m in 0..m2 {
            gw[m] += ds[i] * ti[m];
            dq[m] = ds[i] * w[m] * (1.0 - ti[m] * ti[m]);
            gbv[m] += dq[m];
        }
        let ui = &cache.u[i * m1..(i + 1) * m1];
        let dui = &mut du[i * m1..(i + 1) * m1];
        for j in 0..m1 {
            let row = &v[j * m2..(j + 1) * m2];
            let grow = &mut gv[j * m2..(j + 1) * m2];
            let mut acc = 0.0;
            for m in 0..m2 {
                grow[m] += ui[j] * dq[m];
                acc += row[m] * dq[m];
            }
            dui[j] += acc;
        }
    }
    g.tensor_mut(2).copy_from_slice(&gv);
    g.tensor_mut(3).copy_from_slice(&gbv);
    g.tensor_mut(4).copy_from_slice(&gw);

    // u = relu(Wᵀh + b1) ⊙ keep
    let mut gw1 = vec![0.0; dim * m1];
    let mut gb1 = vec![0.0; m1];
    let mut dpre = vec![0.0; m1];
    for i in 0..n {
        for j in 0..m1 {
            let scale = if cache.keep.is_empty() { 1.0 } else { cache.keep[i * m1 + j] };
            dpre[j] = if cache.pre[i * m1 + j] > 0.0 { du[i * m1 + j] * scale } else { 0.0 };
            gb1[j] += dpre[j];
        }
        for (d, &x) in cache.h[i * dim..(i + 1) * dim].iter().enumerate() {
            if x != 0.0 {
                for (gg, &dp) in gw1[d * m1..(d + 1) * m1].iter_mut().zip(&dpre) {
                    *gg += x * dp;
                }
            }
        }
    }
    g.tensor_mut(0).copy_from_slice(&gw1);
    g.tensor_mut(1).copy_from_slice(&gb1);
    Ok(g)
}
