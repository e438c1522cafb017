//! Sequence validation and indexing.
//!
//! [`validate_sequence`] checks every input invariant once; the resulting
//! [`Sequence`] is immutable and indexed for per-shot, per-frame lookup, so
//! downstream stages can share it read-only across workers.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::types::{Detection, DetectionId, Shot};

/// A validated detection sequence with per-shot, per-frame indexes.
#[derive(Debug, Clone)]
pub struct Sequence {
    detections: Vec<Detection>,
    shots: Vec<Shot>,
    feature_dim: usize,
    context_dim: Option<usize>,
    all_have_context: bool,
    by_id: BTreeMap<DetectionId, usize>,
    /// Per shot (by index into `shots`): frame -> detection indices, each
    /// frame's list sorted by detection id.
    frames_by_shot: Vec<BTreeMap<i64, Vec<usize>>>,
    /// Shot index for each detection index.
    shot_of: Vec<usize>,
}

impl Sequence {
    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn shots(&self) -> &[Shot] {
        &self.shots
    }

    /// Declared appearance-feature dimension F (0 for an empty sequence).
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Context dimension C shared by the detections that carry one.
    pub fn context_dim(&self) -> Option<usize> {
        self.context_dim
    }

    /// `Some(C)` iff every detection carries a context feature.
    pub fn context_complete(&self) -> Option<usize> {
        if self.all_have_context {
            self.context_dim
        } else {
            None
        }
    }

    pub fn detection(&self, id: DetectionId) -> Option<&Detection> {
        self.by_id.get(&id).map(|&i| &self.detections[i])
    }

    pub fn detection_index(&self, id: DetectionId) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    /// Shot index (into [`Sequence::shots`]) containing the detection.
    pub fn shot_of(&self, det_index: usize) -> usize {
        self.shot_of[det_index]
    }

    /// Frame-ordered detection indices of one shot; within a frame, ordered
    /// by detection id.
    pub fn frames_of_shot(&self, shot_index: usize) -> &BTreeMap<i64, Vec<usize>> {
        &self.frames_by_shot[shot_index]
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Validate raw detections and shots, producing an indexed [`Sequence`].
///
/// Checks: positive box sizes, scores in [0,1], a single feature dimension
/// across the sequence, a single context dimension among detections that
/// carry one, unique detection ids, unique ordered non-overlapping shots,
/// and that every detection falls inside exactly one shot.
pub fn validate_sequence(detections: Vec<Detection>, shots: Vec<Shot>) -> Result<Sequence> {
    let mut shots = shots;
    shots.sort_by_key(|s| s.start_frame);
    for s in &shots {
        if s.end_frame < s.start_frame {
            return Err(Error::BadShotRange {
                shot_id: s.shot_id,
                start: s.start_frame,
                end: s.end_frame,
            });
        }
    }
    for w in shots.windows(2) {
        if w[0].shot_id == w[1].shot_id {
            return Err(Error::DuplicateShot {
                shot_id: w[0].shot_id,
            });
        }
        if w[1].start_frame <= w[0].end_frame {
            return Err(Error::ShotOverlap {
                a: w[0].shot_id,
                b: w[1].shot_id,
            });
        }
    }
    // Same-id shots that don't overlap frame-wise still collide.
    {
        let mut ids: Vec<u64> = shots.iter().map(|s| s.shot_id).collect();
        ids.sort_unstable();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateShot { shot_id: w[0] });
            }
        }
    }

    let mut detections = detections;
    detections.sort_by_key(|d| (d.frame, d.id));

    let feature_dim = detections.first().map(|d| d.feature.len()).unwrap_or(0);
    let mut context_dim: Option<usize> = None;
    let mut all_have_context = true;

    let mut by_id = BTreeMap::new();
    let mut frames_by_shot: Vec<BTreeMap<i64, Vec<usize>>> =
        vec![BTreeMap::new(); shots.len()];
    let mut shot_of = Vec::with_capacity(detections.len());

    for (idx, d) in detections.iter().enumerate() {
        if d.bbox.w <= 0.0 || d.bbox.h <= 0.0 {
            return Err(Error::BadBox {
                id: d.id,
                w: d.bbox.w,
                h: d.bbox.h,
            });
        }
        if !(0.0..=1.0).contains(&d.score) {
            return Err(Error::BadScore {
                id: d.id,
                score: d.score,
            });
        }
        if d.feature.len() != feature_dim {
            return Err(Error::FeatureDim {
                id: d.id,
                got: d.feature.len(),
                expected: feature_dim,
            });
        }
        match &d.context_feature {
            Some(c) => match context_dim {
                Some(dim) if c.len() != dim => {
                    return Err(Error::ContextDim {
                        id: d.id,
                        got: c.len(),
                        expected: dim,
                    });
                }
                Some(_) => {}
                None => context_dim = Some(c.len()),
            },
            None => all_have_context = false,
        }
        if by_id.insert(d.id, idx).is_some() {
            return Err(Error::DuplicateId { id: d.id });
        }
        let shot_idx = shots
            .iter()
            .position(|s| s.contains(d.frame))
            .ok_or(Error::OutOfShot {
                id: d.id,
                frame: d.frame,
            })?;
        shot_of.push(shot_idx);
        frames_by_shot[shot_idx]
            .entry(d.frame)
            .or_default()
            .push(idx);
    }

    Ok(Sequence {
        detections,
        shots,
        feature_dim,
        context_dim,
        all_have_context: all_have_context && context_dim.is_some(),
        by_id,
        frames_by_shot,
        shot_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BBox;

    fn det(id: u64, frame: i64) -> Detection {
        Detection {
            id,
            frame,
            bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
            score: 1.0,
            feature: vec![0.0, 0.0],
            context_feature: None,
        }
    }

    fn shot(shot_id: u64, start: i64, end: i64) -> Shot {
        Shot {
            shot_id,
            start_frame: start,
            end_frame: end,
        }
    }

    #[test]
    fn empty_sequence_is_valid() {
        let seq = validate_sequence(vec![], vec![shot(0, 0, 10)]).unwrap();
        assert!(seq.is_empty());
        assert_eq!(seq.feature_dim(), 0);
    }

    #[test]
    fn out_of_shot_detection_is_rejected() {
        let err = validate_sequence(vec![det(1, 10)], vec![shot(0, 0, 5)]).unwrap_err();
        assert!(matches!(err, Error::OutOfShot { id: 1, frame: 10 }));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let err =
            validate_sequence(vec![det(7, 1), det(7, 2)], vec![shot(0, 0, 5)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { id: 7 }));
    }

    #[test]
    fn inconsistent_feature_dim_is_rejected() {
        let mut d2 = det(2, 2);
        d2.feature = vec![0.0, 0.0, 0.0];
        let err = validate_sequence(vec![det(1, 1), d2], vec![shot(0, 0, 5)]).unwrap_err();
        assert!(matches!(err, Error::FeatureDim { id: 2, .. }));
    }

    #[test]
    fn overlapping_shots_are_rejected() {
        let err = validate_sequence(vec![], vec![shot(0, 0, 5), shot(1, 5, 9)]).unwrap_err();
        assert!(matches!(err, Error::ShotOverlap { a: 0, b: 1 }));
    }

    #[test]
    fn context_completeness_tracked() {
        let mut d1 = det(1, 1);
        d1.context_feature = Some(vec![1.0]);
        let seq = validate_sequence(vec![d1, det(2, 2)], vec![shot(0, 0, 5)]).unwrap();
        assert_eq!(seq.context_dim(), Some(1));
        assert_eq!(seq.context_complete(), None);
    }

    #[test]
    fn frame_index_orders_by_id() {
        let seq = validate_sequence(
            vec![det(5, 3), det(2, 3), det(9, 4)],
            vec![shot(0, 0, 5)],
        )
        .unwrap();
        let frames = seq.frames_of_shot(0);
        let ids: Vec<u64> = frames[&3]
            .iter()
            .map(|&i| seq.detections()[i].id)
            .collect();
        assert_eq!(ids, vec![2, 5]);
    }
}
