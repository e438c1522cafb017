//! A small fully connected embedding network with hand-written forward and
//! backward passes. Hidden layers use a rectifier; the output layer is
//! linear.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    /// Row-major `out_dim x in_dim` weights.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            w: vec![0.0; in_dim * out_dim],
            b: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }
}

/// Parametric map from input feature space to a D-dimensional embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dims: Vec<usize>,
    pub(crate) layers: Vec<Layer>,
    seed: u64,
}

/// Per-layer activations recorded by [`EmbeddingModel::forward_trace`] for
/// the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input followed by each layer's post-activation output.
    pub activations: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has the input")
    }

    /// Smallest |pre-activation| over all hidden units; near-zero values sit
    /// on the rectifier kink where numeric gradients are unreliable.
    pub fn min_hidden_preact_magnitude(&self) -> f64 {
        let n = self.pre_activations.len();
        self.pre_activations
            .iter()
            .take(n.saturating_sub(1))
            .flat_map(|z| z.iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

impl EmbeddingModel {
    /// Seeded model with weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`
    /// and zero biases. `dims` is `[F, H1, ..., D]`.
    pub fn new_seeded(dims: &[usize], seed: u64) -> Result<Self> {
        Self::check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (i, o) = (w[0], w[1]);
                let bound = 1.0 / (i as f64).sqrt();
                Layer {
                    w: (0..i * o).map(|_| rng.random_range(-bound..=bound)).collect(),
                    b: vec![0.0; o],
                    in_dim: i,
                    out_dim: o,
                }
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            layers,
            seed,
        })
    }

    /// All-zero parameters (maps everything to the zero vector).
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            seed: 0,
        })
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!(
                "layer sizes need at least [input, output], all positive: {dims:?}"
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Embed one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward_trace(x)?;
        Ok(trace.activations.pop().expect("trace has the output"))
    }

    /// Forward pass keeping every intermediate activation.
    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: self.input_dim(),
            });
        }
        let n_layers = self.layers.len();
        let mut activations = Vec::with_capacity(n_layers + 1);
        let mut pre_activations = Vec::with_capacity(n_layers);
        activations.push(x.to_vec());
        for (li, layer) in self.layers.iter().enumerate() {
            let input = activations.last().unwrap();
            let mut z = layer.b.clone();
            for o in 0..layer.out_dim {
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                z[o] += row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
            }
            let a = if li + 1 == n_layers {
                z.clone()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(ForwardTrace {
            activations,
            pre_activations,
        })
    }

    /// Backpropagate `grad_output` (dL/d embedding) through the recorded
    /// trace, accumulating parameter gradients into `grad`.
    pub fn backward_into(&self, trace: &ForwardTrace, grad_output: &[f64], grad: &mut ModelGrad) {
        assert_eq!(grad_output.len(), self.output_dim());
        let n_layers = self.layers.len();
        let mut delta = grad_output.to_vec();
        for li in (0..n_layers).rev() {
            let layer = &self.layers[li];
            if li + 1 != n_layers {
                // Rectifier: zero gradient where the unit was inactive.
                for (d, &z) in delta.iter_mut().zip(&trace.pre_activations[li]) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &trace.activations[li];
            let g = &mut grad.layers[li];
            for o in 0..layer.out_dim {
                g.b[o] += delta[o];
                let row = &mut g.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gw, &a) in row.iter_mut().zip(input) {
                    *gw += delta[o] * a;
                }
            }
            if li > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += delta[o] * w;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Flat view of all parameters, layer by layer, weights then bias.
    pub fn param(&self, idx: usize) -> f64 {
        let (l, off) = self.locate(idx);
        let layer = &self.layers[l];
        if off < layer.w.len() {
            layer.w[off]
        } else {
            layer.b[off - layer.w.len()]
        }
    }

    pub fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let (l, off) = self.locate(idx);
        let layer = &mut self.layers[l];
        if off < layer.w.len() {
            &mut layer.w[off]
        } else {
            let wl = layer.w.len();
            &mut layer.b[off - wl]
        }
    }

    fn locate(&self, mut idx: usize) -> (usize, usize) {
        for (l, layer) in self.layers.iter().enumerate() {
            let n = layer.w.len() + layer.b.len();
            if idx < n {
                return (l, idx);
            }
            idx -= n;
        }
        panic!("parameter index out of range");
    }

    pub(crate) fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

/// Parameter gradients with the same shape as the model.
#[derive(Debug, Clone)]
pub struct ModelGrad {
    pub(crate) layers: Vec<Layer>,
}

impl ModelGrad {
    pub fn zeros_like(model: &EmbeddingModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| Layer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.w.iter_mut().for_each(|v| *v = 0.0);
            l.b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn param(&self, idx: usize) -> f64 {
        let mut i = idx;
        for layer in &self.layers {
            let n = layer.w.len() + layer.b.len();
            if i < n {
                return if i < layer.w.len() {
                    layer.w[i]
                } else {
                    layer.b[i - layer.w.len()]
                };
            }
            i -= n;
        }
        panic!("parameter index out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_maps_to_zero() {
        let m = EmbeddingModel::zeros(&[3, 4, 2]).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer() {
        let mut m = EmbeddingModel::zeros(&[3, 3]).unwrap();
        for i in 0..3 {
            m.layers[0].w[i * 3 + i] = 1.0;
        }
        let x = vec![0.5, -1.5, 2.0];
        assert_eq!(m.forward(&x).unwrap(), x);
    }

    #[test]
    fn forward_matches_independent_trace() {
        // Independently coded matrix multiply for a seeded [2, 3, 2] model.
        let m = EmbeddingModel::new_seeded(&[2, 3, 2], 42).unwrap();
        let x = [0.7, -0.3];
        let l0 = &m.layers[0];
        let mut h = [0.0f64; 3];
        for o in 0..3 {
            let mut z = l0.b[o];
            for i in 0..2 {
                z += l0.w[o * 2 + i] * x[i];
            }
            h[o] = if z > 0.0 { z } else { 0.0 };
        }
        let l1 = &m.layers[1];
        let mut y = [0.0f64; 2];
        for o in 0..2 {
            let mut z = l1.b[o];
            for i in 0..3 {
                z += l1.w[o * 3 + i] * h[i];
            }
            y[o] = z;
        }
        let got = m.forward(&x).unwrap();
        assert!((got[0] - y[0]).abs() < 1e-15);
        assert!((got[1] - y[1]).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = EmbeddingModel::zeros(&[3, 2]).unwrap();
        assert!(m.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn seeded_init_is_reproducible_and_bounded() {
        let a = EmbeddingModel::new_seeded(&[8, 16, 4], 7).unwrap();
        let b = EmbeddingModel::new_seeded(&[8, 16, 4], 7).unwrap();
        assert_eq!(a, b);
        let bound0 = 1.0 / (8f64).sqrt();
        assert!(a.layers[0].w.iter().all(|w| w.abs() <= bound0));
        assert!(a.layers[0].b.iter().all(|&b| b == 0.0));
    }
}
