//! Seeded synthetic scenarios with known identities.
//!
//! Identity appearance centers sit on the vertices of a scaled simplex.
//! Every shot adds one shared appearance offset to all of its detections,
//! modelling the cross-shot variation the adaptation stage has to undo;
//! the offset directions live in the orthogonal complement of the identity
//! span so the identities stay recoverable in principle. Boxes move
//! linearly per shot, occlusions drop detections, and false positives
//! arrive as short runs with far-outlier features.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::GroundTruth;
use crate::types::{BBox, Detection, DetectionId, Shot};

/// Background label for false-positive detections.
pub const BACKGROUND: i64 = -1;

/// Context centers are this many times farther apart than face centers.
pub const CONTEXT_SCALE: f64 = 4.0;

/// Generator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_identities: usize,
    pub n_shots: usize,
    pub frames_per_shot: usize,
    pub detections_per_identity_per_shot: usize,
    pub feature_dim: usize,
    /// Distance scale between identity feature centers.
    pub identity_separation: f64,
    /// Norm of the per-(identity, shot) appearance drift.
    pub shot_shift_scale: f64,
    /// Componentwise feature noise.
    pub noise_sigma: f64,
    /// Probability that a detection's context feature tracks its true
    /// identity (otherwise it is random).
    pub context_fidelity: f64,
    /// Probability that a scheduled detection is dropped.
    pub occlusion_rate: f64,
    /// False-positive detections as a fraction of real detections per shot.
    pub fp_rate: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_identities: 4,
            n_shots: 3,
            frames_per_shot: 30,
            detections_per_identity_per_shot: 30,
            feature_dim: 16,
            identity_separation: 1.0,
            shot_shift_scale: 1.0,
            noise_sigma: 0.05,
            context_fidelity: 1.0,
            occlusion_rate: 0.0,
            fp_rate: 0.0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_identities == 0 {
            return Err(Error::InvalidConfig("n_identities must be >= 1".into()));
        }
        if self.n_shots == 0 || self.frames_per_shot == 0 {
            return Err(Error::InvalidConfig(
                "n_shots and frames_per_shot must be >= 1".into(),
            ));
        }
        if self.detections_per_identity_per_shot == 0 {
            return Err(Error::InvalidConfig(
                "detections_per_identity_per_shot must be >= 1".into(),
            ));
        }
        if self.detections_per_identity_per_shot > self.frames_per_shot {
            return Err(Error::InvalidConfig(
                "detections_per_identity_per_shot cannot exceed frames_per_shot".into(),
            ));
        }
        if self.feature_dim < self.n_identities {
            return Err(Error::InvalidConfig(
                "feature_dim must be at least n_identities (simplex placement)".into(),
            ));
        }
        if self.shot_shift_scale > 0.0 && self.feature_dim == self.n_identities {
            return Err(Error::InvalidConfig(
                "feature_dim must exceed n_identities when shot_shift_scale > 0".into(),
            ));
        }
        if self.identity_separation < 0.0 || self.shot_shift_scale < 0.0 || self.noise_sigma < 0.0
        {
            return Err(Error::InvalidConfig(
                "scales must be non-negative".into(),
            ));
        }
        for (name, p) in [
            ("context_fidelity", self.context_fidelity),
            ("occlusion_rate", self.occlusion_rate),
            ("fp_rate", self.fp_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must be in [0,1]")));
            }
        }
        Ok(())
    }
}

/// A generated scenario: detections, shots, and the hidden identity of every
/// detection (`BACKGROUND` for false positives).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub detections: Vec<Detection>,
    pub shots: Vec<Shot>,
    labels: BTreeMap<DetectionId, i64>,
}

impl Scenario {
    /// Hidden identity per detection; false positives map to
    /// [`BACKGROUND`].
    pub fn oracle_labels(&self) -> &BTreeMap<DetectionId, i64> {
        &self.labels
    }

    /// Ground-truth frame boxes of the real (non-background) detections.
    pub fn ground_truth(&self) -> Result<GroundTruth> {
        let mut gt = GroundTruth::new();
        for d in &self.detections {
            let label = self.labels[&d.id];
            if label != BACKGROUND {
                gt.push(d.frame, label as u64, d.bbox)?;
            }
        }
        Ok(gt)
    }
}

fn unit_vector_in_complement(rng: &mut ChaCha8Rng, dim: usize, zero_prefix: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    loop {
        let mut v: Vec<f64> = (0..dim)
            .map(|i| {
                if i < zero_prefix {
                    0.0
                } else {
                    normal.sample(rng)
                }
            })
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// Generate a scenario. Deterministic under the config seed.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");

    let f = cfg.feature_dim;
    // Identity centers: scaled simplex vertices along the first axes.
    let face_center = |i: usize| -> Vec<f64> {
        let mut c = vec![0.0; f];
        c[i] = cfg.identity_separation;
        c
    };
    // Context centers sit on the same simplex at 4x the scale: the context
    // cue stays steady across shots, so its separation has to dominate the
    // appearance drift for cross-shot grouping to be possible at all.
    let context_center = |i: usize| -> Vec<f64> {
        let mut c = vec![0.0; f];
        c[i] = CONTEXT_SCALE * cfg.identity_separation;
        c
    };

    // One appearance drift per shot, shared by every identity in it and
    // orthogonal to the identity span: a shot's lighting/camera change
    // moves everyone the same way, so within-shot contrasts survive while
    // cross-shot appearance does not.
    let mut drift = Vec::with_capacity(cfg.n_shots);
    for _ in 0..cfg.n_shots {
        let dir = if cfg.shot_shift_scale > 0.0 {
            unit_vector_in_complement(&mut rng, f, cfg.n_identities)
        } else {
            vec![0.0; f]
        };
        drift.push(dir.iter().map(|x| x * cfg.shot_shift_scale).collect::<Vec<f64>>());
    }

    let mut detections = Vec::new();
    let mut labels = BTreeMap::new();
    let mut next_id: DetectionId = 0;
    let mut shots = Vec::new();

    for shot in 0..cfg.n_shots {
        let start = (shot * (cfg.frames_per_shot + 5)) as i64;
        let end = start + cfg.frames_per_shot as i64 - 1;
        shots.push(Shot {
            shot_id: shot as u64,
            start_frame: start,
            end_frame: end,
        });

        let mut real_in_shot = 0usize;
        for identity in 0..cfg.n_identities {
            // Contiguous appearance window within the shot.
            let span = cfg.frames_per_shot - cfg.detections_per_identity_per_shot;
            let offset = if span > 0 {
                rng.random_range(0..=span) as i64
            } else {
                0
            };
            // Smooth linear motion on a coarse grid so identities stay
            // spatially separated.
            let col = (identity % 3) as f64;
            let row = (identity / 3) as f64;
            let mut cx = 250.0 + col * 550.0 + rng.random_range(-40.0..=40.0);
            let mut cy = 200.0 + row * 400.0 + rng.random_range(-40.0..=40.0);
            let vx = rng.random_range(-1.5..=1.5);
            let vy = rng.random_range(-1.5..=1.5);
            let w = rng.random_range(40.0..=70.0);
            let h = w * rng.random_range(1.0..=1.3);

            let drift_vec = &drift[shot];
            for step in 0..cfg.detections_per_identity_per_shot {
                let frame = start + offset + step as i64;
                cx += vx;
                cy += vy;
                if rng.random_range(0.0..1.0) < cfg.occlusion_rate {
                    continue;
                }
                let feature: Vec<f64> = face_center(identity)
                    .iter()
                    .zip(drift_vec)
                    .map(|(c, d)| c + d + cfg.noise_sigma * normal.sample(&mut rng))
                    .collect();
                let context = if rng.random_range(0.0..1.0) < cfg.context_fidelity {
                    context_center(identity)
                } else {
                    (0..f)
                        .map(|_| {
                            CONTEXT_SCALE * cfg.identity_separation * normal.sample(&mut rng)
                        })
                        .collect()
                };
                detections.push(Detection {
                    id: next_id,
                    frame,
                    bbox: BBox::new(cx - w / 2.0, cy - h / 2.0, w, h),
                    score: rng.random_range(0.7..=1.0),
                    feature,
                    context_feature: Some(context),
                });
                labels.insert(next_id, identity as i64);
                next_id += 1;
                real_in_shot += 1;
            }
        }

        // False positives: short runs with far-outlier features.
        let fp_target = (cfg.fp_rate * real_in_shot as f64).round() as usize;
        let mut emitted = 0usize;
        while emitted < fp_target {
            let run_len = 6.min(cfg.frames_per_shot).min(fp_target - emitted).max(1);
            let f0 = rng.random_range(0..=(cfg.frames_per_shot - run_len)) as i64;
            let cx = rng.random_range(100.0..=1800.0);
            let cy = rng.random_range(100.0..=900.0);
            let w = rng.random_range(30.0..=60.0);
            let h = w * 1.1;
            let dir = unit_vector_in_complement(&mut rng, f, 0);
            let center: Vec<f64> = dir
                .iter()
                .map(|x| -6.0 * cfg.identity_separation.max(1.0) * x)
                .collect();
            for step in 0..run_len {
                let feature: Vec<f64> = center
                    .iter()
                    .map(|c| c + cfg.noise_sigma * normal.sample(&mut rng))
                    .collect();
                let context: Vec<f64> = (0..f)
                    .map(|_| CONTEXT_SCALE * cfg.identity_separation * normal.sample(&mut rng))
                    .collect();
                detections.push(Detection {
                    id: next_id,
                    frame: start + f0 + step as i64,
                    bbox: BBox::new(cx - w / 2.0, cy - h / 2.0, w, h),
                    score: rng.random_range(0.5..=0.9),
                    feature,
                    context_feature: Some(context),
                });
                labels.insert(next_id, BACKGROUND);
                next_id += 1;
                emitted += 1;
            }
        }
    }

    Ok(Scenario {
        detections,
        shots,
        labels,
    })
}
