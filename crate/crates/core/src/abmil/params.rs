use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AbmilError;
use crate::NUM_CLASSES;

/// Layer widths of the classifier: feature dimension, projection width `m1`
/// and attention width `m2`. The head always has [`NUM_CLASSES`] outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelShape {
    pub dim: usize,
    pub m1: usize,
    pub m2: usize,
}

impl ModelShape {
    pub fn new(dim: usize, m1: usize, m2: usize) -> Result<Self, AbmilError> {
        if dim == 0 || m1 == 0 || m2 == 0 {
            return Err(AbmilError::Shape(format!("all widths must be positive, got {dim}/{m1}/{m2}")));
        }
        Ok(ModelShape { dim, m1, m2 })
    }

    fn sizes(&self) -> [usize; 7] {
        let k = NUM_CLASSES;
        [self.dim * self.m1, self.m1, self.m1 * self.m2, self.m2, self.m2, self.m1 * k, k]
    }

    pub fn n_params(&self) -> usize {
        self.sizes().iter().sum()
    }
}

/// Names of the seven parameter tensors, in storage order.
pub const TENSOR_NAMES: [&str; 7] = ["W1", "b1", "V", "bv", "w", "W2", "b2"];

/// Trainable tensors of the attention-MIL classifier.
///
/// All tensors live in one contiguous buffer in the order of
/// [`TENSOR_NAMES`]; matrices are row-major with the input dimension first
/// (`W1` is `dim × m1`, `V` is `m1 × m2`, `W2` is `m1 × K`). The same type
/// carries gradients and optimiser moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AbmilParams {
    shape: ModelShape,
    offsets: [usize; 8],
    data: Vec<f64>,
}

impl AbmilParams {
    pub fn zeros(shape: ModelShape) -> Self {
        let mut offsets = [0usize; 8];
        for (i, s) in shape.sizes().iter().enumerate() {
            offsets[i + 1] = offsets[i] + s;
        }
        AbmilParams { shape, offsets, data: vec![0.0; offsets[7]] }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(shape: ModelShape, seed: u64) -> Self {
        let mut p = Self::zeros(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fans = [(shape.dim, shape.m1), (shape.m1, shape.m2), (shape.m2, 1), (shape.m1, NUM_CLASSES)];
        for (t, (fan_in, fan_out)) in [0usize, 2, 4, 5].into_iter().zip(fans) {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in p.tensor_mut(t) {
                *v = rng.random_range(-bound..bound);
            }
        }
        p
    }

    pub fn from_flat(shape: ModelShape, data: Vec<f64>) -> Result<Self, AbmilError> {
        let mut p = Self::zeros(shape);
        if data.len() != p.data.len() {
            return Err(AbmilError::Shape(format!("expected {} values, got {}", p.data.len(), data.len())));
        }
        p.data = data;
        Ok(p)
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn tensor(&self, i: usize) -> &[f64] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn w1(&self) -> &[f64] {
        self.tensor(0)
    }
    pub fn b1(&self) -> &[f64] {
        self.tensor(1)
    }
    pub fn v(&self) -> &[f64] {
        self.tensor(2)
    }
    pub fn bv(&self) -> &[f64] {
        self.tensor(3)
    }
    pub fn w(&self) -> &[f64] {
        self.tensor(4)
    }
    pub fn w2(&self) -> &[f64] {
        self.tensor(5)
    }
    pub fn b2(&self) -> &[f64] {
        self.tensor(6)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Content hash used to tie a forward cache to the parameters it saw.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let dims = [self.shape.dim as u64, self.shape.m1 as u64, self.shape.m2 as u64];
        for word in dims.into_iter().chain(self.data.iter().map(|v| v.to_bits())) {
            for b in word.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_views_partition_the_buffer() {
        let shape = ModelShape::new(3, 4, 2).unwrap();
        let p = AbmilParams::init(shape, 1);
        let total: usize = (0..7).map(|i| p.tensor(i).len()).sum();
        assert_eq!(total, shape.n_params());
        assert_eq!(p.w1().len(), 12);
        assert_eq!(p.w2().len(), 4 * NUM_CLASSES);
        assert!(p.b1().iter().all(|&b| b == 0.0));
        assert_ne!(p.fingerprint(), AbmilParams::init(shape, 2).fingerprint());
    }

    #[test]
    fn zero_width_is_rejected() {
        assert!(ModelShape::new(0, 4, 2).is_err());
        assert!(AbmilParams::from_flat(ModelShape::new(1, 1, 1).unwrap(), vec![0.0; 3]).is_err());
    }
}
