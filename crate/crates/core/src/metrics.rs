//! Scoring: weighted clustering purity, the CLEAR-MOT family, and the
//! identification metrics (IDP/IDR/IDF1).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linker::{hungarian, CostMatrix, FORBIDDEN};
use crate::types::{BBox, DetectionId};

/// Per-frame identity-labelled boxes. At most one box per identity per
/// frame.
#[derive(Debug, Clone, Default)]
pub struct FrameBoxes {
    frames: BTreeMap<i64, Vec<(u64, BBox)>>,
}

impl FrameBoxes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, frame: i64, id: u64, bbox: BBox) -> Result<()> {
        let list = self.frames.entry(frame).or_default();
        if list.iter().any(|&(existing, _)| existing == id) {
            return Err(Error::DuplicateGroundTruthBox {
                identity: id,
                frame,
            });
        }
        list.push((id, bbox));
        list.sort_by_key(|&(id, _)| id);
        Ok(())
    }

    pub fn frames(&self) -> &BTreeMap<i64, Vec<(u64, BBox)>> {
        &self.frames
    }

    pub fn total_boxes(&self) -> usize {
        self.frames.values().map(|v| v.len()).sum()
    }

    pub fn frame_span(&self) -> Option<(i64, i64)> {
        let min = *self.frames.keys().next()?;
        let max = *self.frames.keys().last()?;
        Some((min, max))
    }

    pub fn identities(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self
            .frames
            .values()
            .flat_map(|v| v.iter().map(|&(id, _)| id))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Ground truth is the same shape as hypotheses.
pub type GroundTruth = FrameBoxes;
pub type Hypotheses = FrameBoxes;

/// CLEAR-MOT counts and ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearMotReport {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// False alarms per frame (over the ground-truth frame span).
    pub faf: f64,
    pub ids: usize,
    pub frag: usize,
    pub mota: f64,
    /// Mean IoU of matched pairs (higher is better).
    pub motp: f64,
    pub false_positives: usize,
    pub misses: usize,
    pub matches: usize,
    pub gt_total: usize,
    pub hyp_total: usize,
}

/// Identification precision/recall and their harmonic mean.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub idp: f64,
    pub idr: f64,
    pub idf1: f64,
    /// Correctly identified detections under the optimal identity
    /// assignment.
    pub idtp: usize,
}

/// Everything evaluate emits for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MotReport {
    pub clear: ClearMotReport,
    pub identity: IdentityReport,
}

/// Cluster-size-weighted purity: `W = (1/M) * sum_c m_c * p_c` where `p_c`
/// is the fraction of cluster `c` belonging to its dominant identity.
///
/// Every clustered detection must have a label; an empty clustering is an
/// error.
pub fn weighted_purity(
    clusters: &[Vec<DetectionId>],
    labels: &BTreeMap<DetectionId, i64>,
) -> Result<f64> {
    let total: usize = clusters.iter().map(|c| c.len()).sum();
    if total == 0 {
        return Err(Error::EmptyClustering);
    }
    let mut weighted = 0.0;
    for cluster in clusters {
        if cluster.is_empty() {
            continue;
        }
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for &d in cluster {
            let label = labels.get(&d).ok_or(Error::MissingLabel { id: d })?;
            *counts.entry(*label).or_insert(0) += 1;
        }
        let dominant = *counts.values().max().expect("non-empty cluster");
        weighted += dominant as f64; // m_c * (dominant / m_c)
    }
    Ok(weighted / total as f64)
}

fn div_or_zero(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Frame-by-frame CLEAR-MOT scoring.
///
/// Matching keeps the previous frame's (gt, hyp) pairs whenever both boxes
/// are still present with IoU at or above the threshold, then matches the
/// remainder with the Hungarian algorithm on 1 - IoU (pairs under the
/// threshold are forbidden). An identity switch is counted when a ground
/// truth matches a different hypothesis id than it last did; a
/// fragmentation is counted at every interruption, i.e. whenever a ground
/// truth tracked at its previous appearance goes unmatched while it still
/// has a box. Hypotheses outside the ground-truth frame span are an error.
pub fn clear_mot(
    hyps: &Hypotheses,
    gt: &GroundTruth,
    iou_threshold: f64,
) -> Result<ClearMotReport> {
    let (gt_min, gt_max) = gt.frame_span().ok_or(Error::EmptyGroundTruth)?;
    if let Some((h_min, h_max)) = hyps.frame_span() {
        if h_min < gt_min || h_max > gt_max {
            return Err(Error::FrameRangeMismatch {
                hyp_min: h_min,
                hyp_max: h_max,
                gt_min,
                gt_max,
            });
        }
    }

    let empty: Vec<(u64, BBox)> = Vec::new();
    let mut current: BTreeMap<u64, u64> = BTreeMap::new(); // gt -> hyp matched last frame
    let mut last_matched: BTreeMap<u64, u64> = BTreeMap::new(); // gt -> hyp ever
    let mut tracked_at_prev_appearance: BTreeMap<u64, bool> = BTreeMap::new();

    let mut ids = 0usize;
    let mut frag = 0usize;
    let mut false_positives = 0usize;
    let mut misses = 0usize;
    let mut matches = 0usize;
    let mut iou_sum = 0.0f64;

    for frame in gt_min..=gt_max {
        let gt_boxes = gt.frames().get(&frame).unwrap_or(&empty);
        let hyp_boxes = hyps.frames().get(&frame).unwrap_or(&empty);
        let find =
            |list: &[(u64, BBox)], id: u64| list.iter().find(|&&(i, _)| i == id).map(|&(_, b)| b);

        // Carry over still-valid pairs.
        let mut matched_gt: BTreeMap<u64, (u64, f64)> = BTreeMap::new();
        let mut used_hyp: Vec<u64> = Vec::new();
        for (&g, &h) in &current {
            if let (Some(gb), Some(hb)) = (find(gt_boxes, g), find(hyp_boxes, h)) {
                let iou = gb.iou(&hb);
                if iou >= iou_threshold {
                    matched_gt.insert(g, (h, iou));
                    used_hyp.push(h);
                }
            }
        }

        // Hungarian over the remainder, maximizing IoU via cost 1 - IoU.
        let free_gt: Vec<(u64, BBox)> = gt_boxes
            .iter()
            .filter(|(g, _)| !matched_gt.contains_key(g))
            .copied()
            .collect();
        let free_hyp: Vec<(u64, BBox)> = hyp_boxes
            .iter()
            .filter(|(h, _)| !used_hyp.contains(h))
            .copied()
            .collect();
        if !free_gt.is_empty() && !free_hyp.is_empty() {
            let mut cost = CostMatrix::new(free_gt.len(), free_hyp.len(), FORBIDDEN);
            for (i, (_, gb)) in free_gt.iter().enumerate() {
                for (j, (_, hb)) in free_hyp.iter().enumerate() {
                    let iou = gb.iou(hb);
                    if iou >= iou_threshold {
                        cost.set(i, j, 1.0 - iou);
                    }
                }
            }
            for (i, j) in hungarian(&cost).pairs() {
                let (g, gb) = free_gt[i];
                let (h, hb) = free_hyp[j];
                matched_gt.insert(g, (h, gb.iou(&hb)));
            }
        }

        // Bookkeeping.
        current = matched_gt.iter().map(|(&g, &(h, _))| (g, h)).collect();
        for (&g, &(h, iou)) in &matched_gt {
            matches += 1;
            iou_sum += iou;
            match last_matched.get(&g) {
                Some(&prev) if prev != h => ids += 1,
                _ => {}
            }
            last_matched.insert(g, h);
        }
        misses += gt_boxes.len() - matched_gt.len();
        false_positives += hyp_boxes.len() - matched_gt.len();

        for &(g, _) in gt_boxes {
            let tracked_now = matched_gt.contains_key(&g);
            if let Some(&was_tracked) = tracked_at_prev_appearance.get(&g) {
                if was_tracked && !tracked_now {
                    frag += 1;
                }
            }
            tracked_at_prev_appearance.insert(g, tracked_now);
        }
    }

    let gt_total = gt.total_boxes();
    let hyp_total = hyps.total_boxes();
    let n_frames = (gt_max - gt_min + 1) as f64;
    let recall = div_or_zero(matches as f64, gt_total as f64);
    let precision = div_or_zero(matches as f64, hyp_total as f64);
    Ok(ClearMotReport {
        recall,
        precision,
        f1: div_or_zero(2.0 * precision * recall, precision + recall),
        faf: false_positives as f64 / n_frames,
        ids,
        frag,
        mota: 1.0 - (misses + false_positives + ids) as f64 / gt_total as f64,
        motp: div_or_zero(iou_sum, matches as f64),
        false_positives,
        misses,
        matches,
        gt_total,
        hyp_total,
    })
}

/// Count of frames where trajectories `g` and `h` both have a box with IoU
/// at or above the threshold.
fn overlap_count(
    gt: &GroundTruth,
    hyps: &Hypotheses,
    g: u64,
    h: u64,
    iou_threshold: f64,
) -> usize {
    let mut count = 0;
    for (frame, gt_boxes) in gt.frames() {
        let Some(hyp_boxes) = hyps.frames().get(frame) else {
            continue;
        };
        let gb = gt_boxes.iter().find(|&&(id, _)| id == g).map(|&(_, b)| b);
        let hb = hyp_boxes.iter().find(|&&(id, _)| id == h).map(|&(_, b)| b);
        if let (Some(gb), Some(hb)) = (gb, hb) {
            if gb.iou(&hb) >= iou_threshold {
                count += 1;
            }
        }
    }
    count
}

/// Identification metrics under the optimal one-to-one assignment of ground
/// truth identities to hypothesis identities over whole trajectories.
///
/// The assignment maximizes the total number of correctly identified
/// detections (equivalently, minimizes mismatches); IDP divides by all
/// hypothesis detections, IDR by all ground-truth detections, and IDF1 is
/// their harmonic mean.
pub fn identity_metrics(
    hyps: &Hypotheses,
    gt: &GroundTruth,
    iou_threshold: f64,
) -> Result<IdentityReport> {
    gt.frame_span().ok_or(Error::EmptyGroundTruth)?;
    if let (Some((h_min, h_max)), Some((g_min, g_max))) = (hyps.frame_span(), gt.frame_span()) {
        if h_min < g_min || h_max > g_max {
            return Err(Error::FrameRangeMismatch {
                hyp_min: h_min,
                hyp_max: h_max,
                gt_min: g_min,
                gt_max: g_max,
            });
        }
    }

    let gt_ids = gt.identities();
    let hyp_ids = hyps.identities();
    let mut idtp = 0usize;
    if !gt_ids.is_empty() && !hyp_ids.is_empty() {
        // Maximize total overlap: minimize (max_overlap - overlap). The
        // square padding keeps unmatched identities at zero overlap.
        let n = gt_ids.len().max(hyp_ids.len());
        let mut overlaps = vec![vec![0usize; n]; n];
        let mut max_overlap = 0usize;
        for (i, &g) in gt_ids.iter().enumerate() {
            for (j, &h) in hyp_ids.iter().enumerate() {
                let o = overlap_count(gt, hyps, g, h, iou_threshold);
                overlaps[i][j] = o;
                max_overlap = max_overlap.max(o);
            }
        }
        let mut cost = CostMatrix::new(n, n, 0.0);
        for i in 0..n {
            for j in 0..n {
                cost.set(i, j, (max_overlap - overlaps[i][j]) as f64);
            }
        }
        idtp = hungarian(&cost)
            .pairs()
            .map(|(i, j)| overlaps[i][j])
            .sum();
    }

    let idp = div_or_zero(idtp as f64, hyps.total_boxes() as f64);
    let idr = div_or_zero(idtp as f64, gt.total_boxes() as f64);
    Ok(IdentityReport {
        idp,
        idr,
        idf1: div_or_zero(2.0 * idp * idr, idp + idr),
        idtp,
    })
}

/// Run both metric families.
pub fn mot_report(hyps: &Hypotheses, gt: &GroundTruth, iou_threshold: f64) -> Result<MotReport> {
    Ok(MotReport {
        clear: clear_mot(hyps, gt, iou_threshold)?,
        identity: identity_metrics(hyps, gt, iou_threshold)?,
    })
}
