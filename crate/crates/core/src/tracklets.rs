//! Tracklet generation: two-threshold greedy linking of detections within
//! each shot.
//!
//! A detection extends an open tracklet only when its affinity to the
//! tracklet's last detection clears `theta_high` AND beats the second-best
//! candidate tracklet by at least `theta_high - theta_low`. Ambiguous
//! detections start fresh tracklets instead of risking an identity switch,
//! and runs shorter than [`MIN_TRACKLET_LEN`] detections are discarded.

use serde::{Deserialize, Serialize};

use crate::distance::sq_dist_unchecked;
use crate::error::{Error, Result};
use crate::sequence::Sequence;
use crate::types::{Detection, Tracklet};

/// Minimum number of detections a tracklet must keep to survive filtering.
pub const MIN_TRACKLET_LEN: usize = 5;

/// Weights and thresholds for the pairwise linking affinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkAffinityConfig {
    /// Appearance similarity weight.
    pub w_app: f64,
    /// Position similarity weight.
    pub w_pos: f64,
    /// Scale similarity weight.
    pub w_scale: f64,
    /// Accept threshold: a link must score strictly above this.
    pub theta_high: f64,
    /// Ambiguity threshold: the winning link must beat the runner-up by at
    /// least `theta_high - theta_low`.
    pub theta_low: f64,
    /// Maximum frame gap between linked detections.
    pub max_gap: i64,
}

impl Default for LinkAffinityConfig {
    fn default() -> Self {
        Self {
            w_app: 0.3,
            w_pos: 0.5,
            w_scale: 0.2,
            theta_high: 0.8,
            theta_low: 0.6,
            max_gap: 1,
        }
    }
}

impl LinkAffinityConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_app", self.w_app),
            ("w_pos", self.w_pos),
            ("w_scale", self.w_scale),
        ] {
            if w < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0")));
            }
        }
        let sum = self.w_app + self.w_pos + self.w_scale;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "affinity weights must sum to 1, got {sum}"
            )));
        }
        if !(0.0 <= self.theta_low && self.theta_low < self.theta_high && self.theta_high <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= theta_low < theta_high <= 1, got low={} high={}",
                self.theta_low, self.theta_high
            )));
        }
        if self.max_gap < 1 {
            return Err(Error::InvalidConfig("max_gap must be >= 1".into()));
        }
        Ok(())
    }

    fn margin(&self) -> f64 {
        self.theta_high - self.theta_low
    }
}

/// Linking affinity between two detections, in [0, 1].
///
/// `w_app * s_app + w_pos * s_pos + w_scale * s_scale` with
/// `s_app = exp(-||f1-f2||^2 / F)`,
/// `s_pos = exp(-||c1-c2||^2 / (w1*h1))` and
/// `s_scale = min(a1,a2) / max(a1,a2)` over the box areas.
///
/// Preconditions: `d1.frame < d2.frame`, the gap is at most `max_gap`, equal
/// feature dimensions. The caller guarantees both lie in one shot.
pub fn pair_affinity(d1: &Detection, d2: &Detection, cfg: &LinkAffinityConfig) -> Result<f64> {
    if d2.frame <= d1.frame {
        return Err(Error::AffinityPrecondition(format!(
            "d1.frame ({}) must precede d2.frame ({})",
            d1.frame, d2.frame
        )));
    }
    if d2.frame - d1.frame > cfg.max_gap {
        return Err(Error::AffinityPrecondition(format!(
            "frame gap {} exceeds max_gap {}",
            d2.frame - d1.frame,
            cfg.max_gap
        )));
    }
    if d1.feature.len() != d2.feature.len() {
        return Err(Error::DimensionMismatch {
            left: d1.feature.len(),
            right: d2.feature.len(),
        });
    }

    let f = d1.feature.len().max(1) as f64;
    let s_app = (-sq_dist_unchecked(&d1.feature, &d2.feature) / f).exp();

    let (cx1, cy1) = d1.bbox.center();
    let (cx2, cy2) = d2.bbox.center();
    let center_sq = (cx1 - cx2) * (cx1 - cx2) + (cy1 - cy2) * (cy1 - cy2);
    let s_pos = (-center_sq / d1.bbox.area()).exp();

    let (a1, a2) = (d1.bbox.area(), d2.bbox.area());
    let s_scale = a1.min(a2) / a1.max(a2);

    Ok(cfg.w_app * s_app + cfg.w_pos * s_pos + cfg.w_scale * s_scale)
}

struct OpenRun {
    /// Detection indices into the sequence, frame order.
    dets: Vec<usize>,
    last_frame: i64,
}

/// Build per-shot tracklets from a validated sequence.
///
/// Deterministic: detections are scanned in (frame, id) order, winners of a
/// contested tracklet are chosen by affinity then lowest detection id, and
/// the surviving tracklets are renumbered in (shot, first frame, first id)
/// order. Output tracklets never span shot boundaries and every detection
/// appears in at most one of them.
pub fn build_tracklets(seq: &Sequence, cfg: &LinkAffinityConfig) -> Result<Vec<Tracklet>> {
    cfg.validate()?;
    let dets = seq.detections();
    let mut finished: Vec<(usize, Vec<usize>)> = Vec::new(); // (shot index, det indices)

    for shot_idx in 0..seq.shots().len() {
        let mut open: Vec<OpenRun> = Vec::new();
        for (&frame, frame_dets) in seq.frames_of_shot(shot_idx) {
            // Runs too old to extend are closed for good.
            let mut i = 0;
            while i < open.len() {
                if frame - open[i].last_frame > cfg.max_gap {
                    let run = open.remove(i);
                    finished.push((shot_idx, run.dets));
                } else {
                    i += 1;
                }
            }

            // Detection-side rule: best affinity must clear theta_high and
            // beat the runner-up by the margin.
            let mut wants: Vec<(usize, usize, f64)> = Vec::new(); // (det idx, run slot, affinity)
            for &di in frame_dets {
                let mut best: Option<(usize, f64)> = None;
                let mut second: Option<f64> = None;
                for (slot, run) in open.iter().enumerate() {
                    let last = &dets[*run.dets.last().expect("open run is never empty")];
                    let a = pair_affinity(last, &dets[di], cfg)?;
                    match best {
                        Some((_, ba)) if a > ba => {
                            second = Some(ba);
                            best = Some((slot, a));
                        }
                        Some(_) => {
                            if second.is_none_or(|s| a > s) {
                                second = Some(a);
                            }
                        }
                        None => best = Some((slot, a)),
                    }
                }
                if let Some((slot, a)) = best {
                    let unambiguous = second.is_none_or(|s| a - s >= cfg.margin());
                    if a > cfg.theta_high && unambiguous {
                        wants.push((di, slot, a));
                    }
                }
            }

            // Tracklet-side conflicts: highest affinity wins, ties to the
            // lowest detection id (wants is already in id order per frame).
            let mut extended = vec![false; frame_dets.len()];
            let mut taken = vec![false; open.len()];
            let mut order: Vec<usize> = (0..wants.len()).collect();
            order.sort_by(|&x, &y| {
                wants[y].2.partial_cmp(&wants[x].2).unwrap().then(
                    dets[wants[x].0].id.cmp(&dets[wants[y].0].id),
                )
            });
            for w in order {
                let (di, slot, _) = wants[w];
                if !taken[slot] {
                    taken[slot] = true;
                    open[slot].dets.push(di);
                    open[slot].last_frame = frame;
                    let pos = frame_dets.iter().position(|&x| x == di).unwrap();
                    extended[pos] = true;
                }
            }

            for (pos, &di) in frame_dets.iter().enumerate() {
                if !extended[pos] {
                    open.push(OpenRun {
                        dets: vec![di],
                        last_frame: frame,
                    });
                }
            }
        }
        for run in open {
            finished.push((shot_idx, run.dets));
        }
    }

    let mut kept: Vec<(u64, Vec<usize>)> = finished
        .into_iter()
        .filter(|(_, run)| run.len() >= MIN_TRACKLET_LEN)
        .map(|(shot_idx, run)| (seq.shots()[shot_idx].shot_id, run))
        .collect();
    kept.sort_by_key(|(shot_id, run)| {
        (*shot_id, dets[run[0]].frame, dets[run[0]].id)
    });

    Ok(kept
        .into_iter()
        .enumerate()
        .map(|(tid, (shot_id, run))| Tracklet {
            tracklet_id: tid as u64,
            shot_id,
            detections: run.into_iter().map(|i| dets[i].id).collect(),
        })
        .collect())
}
