//! Mini-batch stochastic gradient descent with momentum over mined pairs or
//! triplets.
//!
//! Each epoch shuffles the sample order with a seeded generator and walks it
//! in mini-batches. Per batch, every member is embedded by forward
//! propagation, the loss gradient w.r.t. the embeddings is backpropagated to
//! parameter gradients, gradients are summed over the batch in ascending
//! sample-index order (fixed for determinism), and the parameters move by
//! `v <- momentum * v - lr * (g + weight_decay * w); w <- w + v`.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{contrastive_loss, symtriplet_loss, triplet_loss, LossConfig, LossKind};
use super::model::{EmbeddingModel, ModelGrad};
use crate::error::{Error, Result};

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 128,
            epochs: 2000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must be in [0, 1)".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig("weight_decay must be >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be > 0".into()));
        }
        Ok(())
    }
}

/// A pair sample for the contrastive loss; indices into the feature table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSample {
    pub a: usize,
    pub b: usize,
    pub positive: bool,
}

/// A triplet sample; indices into the feature table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripletSample {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Training set matching the loss kind.
#[derive(Debug, Clone)]
pub enum TrainSamples {
    Pairs(Vec<PairSample>),
    Triplets(Vec<TripletSample>),
}

impl TrainSamples {
    pub fn len(&self) -> usize {
        match self {
            TrainSamples::Pairs(v) => v.len(),
            TrainSamples::Triplets(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-epoch mean loss over all samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_mean_loss: Vec<f64>,
}

impl TrainReport {
    pub fn first(&self) -> f64 {
        *self.epoch_mean_loss.first().unwrap_or(&f64::NAN)
    }

    pub fn last(&self) -> f64 {
        *self.epoch_mean_loss.last().unwrap_or(&f64::NAN)
    }
}

/// Train the model in place, returning the loss trace.
pub fn train(
    model: &mut EmbeddingModel,
    features: &[Vec<f64>],
    samples: &TrainSamples,
    loss_cfg: &LossConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainReport> {
    loss_cfg.validate()?;
    train_cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    match (loss_cfg.kind, samples) {
        (LossKind::Contrastive, TrainSamples::Pairs(_)) => {}
        (LossKind::Triplet | LossKind::SymTriplet, TrainSamples::Triplets(_)) => {}
        (LossKind::Contrastive, _) => {
            return Err(Error::SampleKindMismatch {
                expected: "pairs",
            })
        }
        (_, _) => {
            return Err(Error::SampleKindMismatch {
                expected: "triplets",
            })
        }
    }

    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = ModelGrad::zeros_like(model);
    let mut velocity = ModelGrad::zeros_like(model);
    let mut trace = Vec::with_capacity(train_cfg.epochs);

    for epoch in 0..train_cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, chunk) in order.chunks(train_cfg.batch_size).enumerate() {
            let mut batch: Vec<usize> = chunk.to_vec();
            batch.sort_unstable(); // fixed accumulation order
            grad.fill_zero();
            let mut batch_loss = 0.0;
            for &si in &batch {
                batch_loss += accumulate_sample(model, features, samples, si, loss_cfg, &mut grad)?;
            }
            if !batch_loss.is_finite() || !grad.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += batch_loss;

            for (vl, (gl, ml)) in velocity
                .layers
                .iter_mut()
                .zip(grad.layers.iter().zip(model.layers.iter_mut()))
            {
                for ((v, g), w) in vl.w.iter_mut().zip(&gl.w).zip(ml.w.iter_mut()) {
                    *v = train_cfg.momentum * *v
                        - train_cfg.learning_rate * (g + train_cfg.weight_decay * *w);
                    *w += *v;
                }
                for ((v, g), b) in vl.b.iter_mut().zip(&gl.b).zip(ml.b.iter_mut()) {
                    *v = train_cfg.momentum * *v
                        - train_cfg.learning_rate * (g + train_cfg.weight_decay * *b);
                    *b += *v;
                }
            }
        }
        trace.push(epoch_loss / n as f64);
    }

    Ok(TrainReport {
        epoch_mean_loss: trace,
    })
}

/// Forward/backward one sample, adding its parameter gradient into `grad`;
/// returns the sample loss.
fn accumulate_sample(
    model: &EmbeddingModel,
    features: &[Vec<f64>],
    samples: &TrainSamples,
    index: usize,
    loss_cfg: &LossConfig,
    grad: &mut ModelGrad,
) -> Result<f64> {
    match samples {
        TrainSamples::Pairs(pairs) => {
            let p = pairs[index];
            let ta = model.forward_trace(&features[p.a])?;
            let tb = model.forward_trace(&features[p.b])?;
            let r = contrastive_loss(ta.output(), tb.output(), p.positive, loss_cfg);
            if r.loss > 0.0 {
                model.backward_into(&ta, &r.g1, grad);
                model.backward_into(&tb, &r.g2, grad);
            }
            Ok(r.loss)
        }
        TrainSamples::Triplets(triplets) => {
            let t = triplets[index];
            let ta = model.forward_trace(&features[t.anchor])?;
            let tp = model.forward_trace(&features[t.positive])?;
            let tn = model.forward_trace(&features[t.negative])?;
            let r = match loss_cfg.kind {
                LossKind::Triplet => triplet_loss(ta.output(), tp.output(), tn.output(), loss_cfg),
                LossKind::SymTriplet => {
                    symtriplet_loss(ta.output(), tp.output(), tn.output(), loss_cfg)
                }
                LossKind::Contrastive => unreachable!("checked in train()"),
            };
            if r.loss > 0.0 {
                model.backward_into(&ta, &r.g_anchor, grad);
                model.backward_into(&tp, &r.g_pos, grad);
                model.backward_into(&tn, &r.g_neg, grad);
            }
            Ok(r.loss)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_training_set_is_an_error() {
        let mut m = EmbeddingModel::new_seeded(&[2, 2], 0).unwrap();
        let e = train(
            &mut m,
            &[],
            &TrainSamples::Triplets(vec![]),
            &LossConfig::default(),
            &TrainConfig::default(),
        );
        assert!(matches!(e, Err(Error::EmptyTrainingSet)));
    }

    #[test]
    fn sample_kind_must_match_loss() {
        let mut m = EmbeddingModel::new_seeded(&[2, 2], 0).unwrap();
        let feats = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let pairs = TrainSamples::Pairs(vec![PairSample {
            a: 0,
            b: 1,
            positive: true,
        }]);
        let e = train(
            &mut m,
            &feats,
            &pairs,
            &LossConfig {
                kind: LossKind::SymTriplet,
                ..Default::default()
            },
            &TrainConfig::default(),
        );
        assert!(matches!(e, Err(Error::SampleKindMismatch { .. })));
    }

    #[test]
    fn inactive_triplets_leave_parameters_unchanged() {
        // Anchor == positive and negative far away: margin satisfied, zero
        // gradient everywhere; with weight_decay = 0 the model is untouched.
        let mut m = EmbeddingModel::new_seeded(&[1, 2], 3).unwrap();
        let before = m.clone();
        let feats = vec![vec![0.0], vec![0.0], vec![100.0]];
        let samples = TrainSamples::Triplets(vec![TripletSample {
            anchor: 0,
            positive: 1,
            negative: 2,
        }]);
        let cfg = TrainConfig {
            weight_decay: 0.0,
            epochs: 17,
            ..Default::default()
        };
        let report = train(&mut m, &feats, &samples, &LossConfig::default(), &cfg).unwrap();
        assert_eq!(m, before);
        assert!(report.epoch_mean_loss.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn loss_trace_is_deterministic_under_seed() {
        let feats: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64 * 0.1, (i % 3) as f64])
            .collect();
        let samples = TrainSamples::Triplets(
            (0..8)
                .map(|i| TripletSample {
                    anchor: i % 10,
                    positive: (i + 1) % 10,
                    negative: (i + 5) % 10,
                })
                .collect(),
        );
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            epochs: 5,
            batch_size: 3,
            seed: 11,
            ..Default::default()
        };
        let run = || {
            let mut m = EmbeddingModel::new_seeded(&[2, 4, 2], 9).unwrap();
            train(&mut m, &feats, &samples, &LossConfig::default(), &cfg).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b); // bitwise-identical trace
    }
}
