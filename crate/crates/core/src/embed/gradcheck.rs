//! Central-difference validation of the analytic parameter gradients.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{contrastive_loss, symtriplet_loss, triplet_loss, LossConfig, LossKind};
use super::model::{EmbeddingModel, ModelGrad};
use crate::error::{Error, Result};

/// One sample in model-input space.
#[derive(Debug, Clone)]
pub enum CheckSample {
    Pair {
        a: Vec<f64>,
        b: Vec<f64>,
        positive: bool,
    },
    Triplet {
        anchor: Vec<f64>,
        positive: Vec<f64>,
        negative: Vec<f64>,
    },
}

/// Result of checking one sample.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub loss: f64,
    pub max_rel_err: f64,
    pub params_checked: usize,
    pub pass: bool,
}

/// Aggregate over many resampled checks of one loss kind.
#[derive(Debug, Clone)]
pub struct GradCheckSummary {
    pub kind: LossKind,
    pub samples: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn total_loss(model: &EmbeddingModel, sample: &CheckSample, cfg: &LossConfig) -> Result<f64> {
    Ok(match sample {
        CheckSample::Pair { a, b, positive } => {
            contrastive_loss(&model.forward(a)?, &model.forward(b)?, *positive, cfg).loss
        }
        CheckSample::Triplet {
            anchor,
            positive,
            negative,
        } => {
            let (ea, ep, en) = (
                model.forward(anchor)?,
                model.forward(positive)?,
                model.forward(negative)?,
            );
            match cfg.kind {
                LossKind::Triplet => triplet_loss(&ea, &ep, &en, cfg).loss,
                LossKind::SymTriplet => symtriplet_loss(&ea, &ep, &en, cfg).loss,
                LossKind::Contrastive => {
                    return Err(Error::InvalidConfig(
                        "triplet sample with contrastive loss".into(),
                    ))
                }
            }
        }
    })
}

/// Signed distance of the sample to its hinge (None for the always-smooth
/// contrastive positive branch).
fn hinge_margin(model: &EmbeddingModel, sample: &CheckSample, cfg: &LossConfig) -> Result<Option<f64>> {
    use crate::distance::embed_distance;
    Ok(match sample {
        CheckSample::Pair { a, b, positive } => {
            if *positive {
                None
            } else {
                let d = embed_distance(&model.forward(a)?, &model.forward(b)?)?;
                Some(cfg.tau - d)
            }
        }
        CheckSample::Triplet {
            anchor,
            positive,
            negative,
        } => {
            let (ea, ep, en) = (
                model.forward(anchor)?,
                model.forward(positive)?,
                model.forward(negative)?,
            );
            let d_pos = embed_distance(&ea, &ep)?;
            let d_nk = embed_distance(&ea, &en)?;
            match cfg.kind {
                LossKind::Triplet => Some(d_pos - d_nk + cfg.alpha),
                LossKind::SymTriplet => {
                    let d_nl = embed_distance(&ep, &en)?;
                    Some(d_pos - 0.5 * (d_nk + d_nl) + cfg.alpha)
                }
                LossKind::Contrastive => None,
            }
        }
    })
}

fn analytic_grad(
    model: &EmbeddingModel,
    sample: &CheckSample,
    cfg: &LossConfig,
) -> Result<ModelGrad> {
    let mut grad = ModelGrad::zeros_like(model);
    match sample {
        CheckSample::Pair { a, b, positive } => {
            let ta = model.forward_trace(a)?;
            let tb = model.forward_trace(b)?;
            let r = contrastive_loss(ta.output(), tb.output(), *positive, cfg);
            if r.loss > 0.0 {
                model.backward_into(&ta, &r.g1, &mut grad);
                model.backward_into(&tb, &r.g2, &mut grad);
            }
        }
        CheckSample::Triplet {
            anchor,
            positive,
            negative,
        } => {
            let ta = model.forward_trace(anchor)?;
            let tp = model.forward_trace(positive)?;
            let tn = model.forward_trace(negative)?;
            let r = match cfg.kind {
                LossKind::Triplet => triplet_loss(ta.output(), tp.output(), tn.output(), cfg),
                LossKind::SymTriplet => {
                    symtriplet_loss(ta.output(), tp.output(), tn.output(), cfg)
                }
                LossKind::Contrastive => unreachable!("rejected by total_loss"),
            };
            if r.loss > 0.0 {
                model.backward_into(&ta, &r.g_anchor, &mut grad);
                model.backward_into(&tp, &r.g_pos, &mut grad);
                model.backward_into(&tn, &r.g_neg, &mut grad);
            }
        }
    }
    Ok(grad)
}

fn min_kink_margin(model: &EmbeddingModel, sample: &CheckSample) -> Result<f64> {
    let inputs: Vec<&[f64]> = match sample {
        CheckSample::Pair { a, b, .. } => vec![a, b],
        CheckSample::Triplet {
            anchor,
            positive,
            negative,
        } => vec![anchor, positive, negative],
    };
    let mut m = f64::INFINITY;
    for x in inputs {
        m = m.min(model.forward_trace(x)?.min_hidden_preact_magnitude());
    }
    Ok(m)
}

/// Compare analytic and central-difference parameter gradients on one
/// sample.
///
/// Samples sitting within `100 * epsilon` of a hinge, or with a hidden unit
/// within `100 * epsilon` of its rectifier kink, are rejected with
/// [`Error::RejectedSample`] so the caller can resample: the loss is not
/// differentiable there and finite differences straddle the corner.
/// Relative error uses `|a - n| / max(1, |a|, |n|)`.
pub fn grad_check(
    model: &EmbeddingModel,
    sample: &CheckSample,
    cfg: &LossConfig,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be > 0".into()));
    }
    let guard = 100.0 * epsilon;
    if let Some(m) = hinge_margin(model, sample, cfg)? {
        if m.abs() < guard {
            return Err(Error::RejectedSample(format!(
                "hinge margin {m:.3e} within guard {guard:.3e}"
            )));
        }
    }
    if min_kink_margin(model, sample)? < guard {
        return Err(Error::RejectedSample(format!(
            "hidden pre-activation within {guard:.3e} of the rectifier kink"
        )));
    }

    let analytic = analytic_grad(model, sample, cfg)?;
    let loss = total_loss(model, sample, cfg)?;

    let mut work = model.clone();
    let n = model.num_params();
    let mut max_rel = 0.0f64;
    for idx in 0..n {
        let orig = work.param(idx);
        *work.param_mut(idx) = orig + epsilon;
        let plus = total_loss(&work, sample, cfg)?;
        *work.param_mut(idx) = orig - epsilon;
        let minus = total_loss(&work, sample, cfg)?;
        *work.param_mut(idx) = orig;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic.param(idx);
        let rel = (a - numeric).abs() / 1.0f64.max(a.abs()).max(numeric.abs());
        max_rel = max_rel.max(rel);
    }

    Ok(GradCheckReport {
        loss,
        max_rel_err: max_rel,
        params_checked: n,
        pass: max_rel <= tolerance,
    })
}

/// Check `n_samples` seeded active samples of one loss kind against models
/// with one to three hidden layers, resampling away hinge- and kink-adjacent
/// draws.
pub fn run_grad_check(
    kind: LossKind,
    n_samples: usize,
    seed: u64,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = LossConfig {
        kind,
        ..Default::default()
    };
    let input_dim = 6;
    let layouts: [&[usize]; 3] = [&[6, 8, 4], &[6, 8, 8, 4], &[6, 8, 8, 8, 4]];

    let mut max_rel = 0.0f64;
    let mut done = 0;
    let mut attempts = 0;
    while done < n_samples {
        attempts += 1;
        if attempts > n_samples * 1000 {
            return Err(Error::RejectedSample(
                "could not draw enough active samples".into(),
            ));
        }
        let dims = layouts[done % layouts.len()];
        let model = EmbeddingModel::new_seeded(dims, rng.random())?;
        let mut vector = |scale: f64| -> Vec<f64> {
            (0..input_dim)
                .map(|_| rng.random_range(-scale..=scale))
                .collect()
        };
        let sample = match kind {
            LossKind::Contrastive => CheckSample::Pair {
                a: vector(1.0),
                b: vector(1.0),
                // Alternate branches; negatives need D < tau to be active.
                positive: done % 2 == 0,
            },
            _ => CheckSample::Triplet {
                anchor: vector(1.0),
                positive: vector(1.0),
                negative: vector(1.0),
            },
        };
        if total_loss(&model, &sample, &cfg)? <= 0.0 {
            continue;
        }
        match grad_check(&model, &sample, &cfg, epsilon, tolerance) {
            Ok(report) => {
                max_rel = max_rel.max(report.max_rel_err);
                done += 1;
            }
            Err(Error::RejectedSample(_)) => continue,
            Err(e) => return Err(e),
        }
    }

    Ok(GradCheckSummary {
        kind,
        samples: done,
        max_rel_err: max_rel,
        tolerance,
        pass: max_rel <= tolerance,
    })
}
