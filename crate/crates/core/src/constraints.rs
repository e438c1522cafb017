//! Constraint mining over tracklets.
//!
//! Without any labels, tracklet structure already pins down identities:
//! detections within one tracklet share an identity (positive pairs), and
//! tracklets that overlap in a frame cannot (negative pairs). Context
//! features extend this across shots by agglomerating tracklet descriptors
//! and accepting tight groups as same-identity, and transitive propagation
//! closes the relation: positives merge tracklets into components, and a
//! negative edge between components implies negatives between all their
//! members.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::embed_distance;
use crate::error::{Error, Result};
use crate::linker::{agglomerate, DistanceMatrix, Linkage, StopRule};
use crate::sequence::Sequence;
use crate::types::{DetectionId, Tracklet, TrackletId};

/// Unordered id pair, stored with the smaller id first.
fn pair(a: u64, b: u64) -> (u64, u64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Mined same/different-identity evidence at detection and tracklet level.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    /// Unordered detection pairs known to share an identity.
    pub positives: BTreeSet<(DetectionId, DetectionId)>,
    /// Unordered detection pairs known to differ.
    pub negatives: BTreeSet<(DetectionId, DetectionId)>,
    /// (anchor, positive, negative) detection triples.
    pub triplets: Vec<(DetectionId, DetectionId, DetectionId)>,
    /// Tracklet pairs marked same-identity.
    pub tracklet_pos: BTreeSet<(TrackletId, TrackletId)>,
    /// Tracklet pairs marked different-identity.
    pub tracklet_neg: BTreeSet<(TrackletId, TrackletId)>,
}

/// Contextual grouping parameters. A group is accepted as same-identity
/// only when its widest internal descriptor distance stays below
/// `merge_threshold - min_confidence_margin`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextConfig {
    pub merge_threshold: f64,
    /// Defaults to `0.2 * merge_threshold` when not given.
    #[serde(default)]
    pub min_confidence_margin: Option<f64>,
}

impl ContextConfig {
    pub fn new(merge_threshold: f64) -> Self {
        Self {
            merge_threshold,
            min_confidence_margin: None,
        }
    }

    pub fn margin(&self) -> f64 {
        self.min_confidence_margin
            .unwrap_or(0.2 * self.merge_threshold)
    }

    pub fn validate(&self) -> Result<()> {
        if self.merge_threshold <= 0.0 {
            return Err(Error::InvalidConfig("merge_threshold must be > 0".into()));
        }
        if self.margin() < 0.0 {
            return Err(Error::InvalidConfig(
                "min_confidence_margin must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// What contextual mining did, for the run manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextReport {
    /// True when some detection lacked a context feature and the stage was
    /// skipped.
    pub skipped_missing_context: bool,
    /// Contextually grouped pairs dropped because co-occurrence already
    /// marked them negative.
    pub conflicts_resolved_negative: usize,
    /// Accepted high-confidence groups.
    pub groups_accepted: usize,
    /// Tracklet pairs added to `tracklet_pos`.
    pub pairs_added: usize,
}

fn tracklet_frames(t: &Tracklet, seq: &Sequence) -> BTreeSet<i64> {
    t.detections
        .iter()
        .map(|&id| seq.detection(id).expect("validated sequence").frame)
        .collect()
}

/// Positive pairs from within tracklets, negative pairs from tracklets that
/// co-occur in a frame.
pub fn mine_spatiotemporal(tracklets: &[Tracklet], seq: &Sequence) -> ConstraintSet {
    let mut cs = ConstraintSet::default();
    for t in tracklets {
        for (i, &a) in t.detections.iter().enumerate() {
            for &b in &t.detections[i + 1..] {
                cs.positives.insert(pair(a, b));
            }
        }
    }
    let frames: Vec<BTreeSet<i64>> = tracklets
        .iter()
        .map(|t| tracklet_frames(t, seq))
        .collect();
    for i in 0..tracklets.len() {
        for j in (i + 1)..tracklets.len() {
            if frames[i].intersection(&frames[j]).next().is_some() {
                cs.tracklet_neg
                    .insert(pair(tracklets[i].tracklet_id, tracklets[j].tracklet_id));
                for &a in &tracklets[i].detections {
                    for &b in &tracklets[j].detections {
                        cs.negatives.insert(pair(a, b));
                    }
                }
            }
        }
    }
    cs
}

/// Mean concatenated `[feature, context]` descriptor of a tracklet.
fn tracklet_descriptor(t: &Tracklet, seq: &Sequence) -> Option<Vec<f64>> {
    let mut acc: Option<Vec<f64>> = None;
    for &id in &t.detections {
        let d = seq.detection(id).expect("validated sequence");
        let ctx = d.context_feature.as_ref()?;
        let concat: Vec<f64> = d.feature.iter().chain(ctx).copied().collect();
        match &mut acc {
            Some(a) => a.iter_mut().zip(&concat).for_each(|(x, y)| *x += y),
            None => acc = Some(concat),
        }
    }
    let n = t.len() as f64;
    acc.map(|mut a| {
        a.iter_mut().for_each(|x| *x /= n);
        a
    })
}

/// Group tracklets on mean `[feature, context]` descriptors and accept
/// high-confidence groups as same-identity pairs.
///
/// Clustering reuses the across-shot machinery: group-average linkage to
/// `merge_threshold` with frame-overlapping pairs held at infinity. Pairs
/// already negative from co-occurrence stay negative (counted in the
/// report); when any detection lacks a context feature the stage is skipped
/// and reported.
pub fn mine_contextual(
    cs: &mut ConstraintSet,
    tracklets: &[Tracklet],
    seq: &Sequence,
    cfg: &ContextConfig,
) -> Result<ContextReport> {
    cfg.validate()?;
    let mut report = ContextReport::default();
    let descriptors: Vec<Option<Vec<f64>>> = tracklets
        .iter()
        .map(|t| tracklet_descriptor(t, seq))
        .collect();
    if descriptors.iter().any(|d| d.is_none()) {
        report.skipped_missing_context = true;
        return Ok(report);
    }
    let descriptors: Vec<Vec<f64>> = descriptors.into_iter().flatten().collect();
    let frames: Vec<BTreeSet<i64>> = tracklets
        .iter()
        .map(|t| tracklet_frames(t, seq))
        .collect();

    let n = tracklets.len();
    let mut base = DistanceMatrix::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = if frames[i].intersection(&frames[j]).next().is_some() {
                f64::INFINITY
            } else {
                embed_distance(&descriptors[i], &descriptors[j])?
            };
            base.set(i, j, d);
        }
    }

    let clustering = agglomerate(
        &base,
        Linkage::GroupAverage,
        StopRule::Threshold(cfg.merge_threshold),
    );
    let accept_below = cfg.merge_threshold - cfg.margin();
    for group in &clustering.clusters {
        if group.len() < 2 {
            continue;
        }
        let mut widest = 0.0f64;
        for (gi, &i) in group.iter().enumerate() {
            for &j in &group[gi + 1..] {
                widest = widest.max(base.get(i, j));
            }
        }
        if widest >= accept_below {
            continue;
        }
        report.groups_accepted += 1;
        for (gi, &i) in group.iter().enumerate() {
            for &j in &group[gi + 1..] {
                let p = pair(tracklets[i].tracklet_id, tracklets[j].tracklet_id);
                if cs.tracklet_neg.contains(&p) {
                    report.conflicts_resolved_negative += 1;
                } else if cs.tracklet_pos.insert(p) {
                    report.pairs_added += 1;
                }
            }
        }
    }
    Ok(report)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins, keeping component ids stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Close the constraint relation transitively.
///
/// Positive tracklet pairs merge into connected components; every negative
/// edge between two components induces negatives between ALL their members.
/// Detection-level positives gain all cross-tracklet pairs within a
/// component, and detection-level negatives are regenerated from the closed
/// tracklet relation. Idempotent: running it on its own output changes
/// nothing. A pair that would end up both positive and negative is a
/// contradiction and is reported as an error.
pub fn propagate_transitive(cs: &ConstraintSet, tracklets: &[Tracklet]) -> Result<ConstraintSet> {
    let index_of: BTreeMap<TrackletId, usize> = tracklets
        .iter()
        .enumerate()
        .map(|(i, t)| (t.tracklet_id, i))
        .collect();
    let resolve = |id: TrackletId| -> Result<usize> {
        index_of
            .get(&id)
            .copied()
            .ok_or(Error::UnknownId {
                id,
                what: "tracklet constraint",
            })
    };

    let mut uf = UnionFind::new(tracklets.len());
    for &(a, b) in &cs.tracklet_pos {
        uf.union(resolve(a)?, resolve(b)?);
    }

    // Contradictions: a negative edge inside one component.
    let mut contradictions = Vec::new();
    for &(a, b) in &cs.tracklet_neg {
        if uf.find(resolve(a)?) == uf.find(resolve(b)?) {
            contradictions.push((a, b));
        }
    }
    if !contradictions.is_empty() {
        return Err(Error::ConstraintContradiction {
            pairs: contradictions,
        });
    }

    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..tracklets.len() {
        members.entry(uf.find(i)).or_default().push(i);
    }

    let mut closed = ConstraintSet {
        positives: cs.positives.clone(),
        ..Default::default()
    };

    // Positive closure: cliques within components, at tracklet and
    // detection level.
    for comp in members.values() {
        for (ci, &i) in comp.iter().enumerate() {
            for &j in &comp[ci + 1..] {
                closed
                    .tracklet_pos
                    .insert(pair(tracklets[i].tracklet_id, tracklets[j].tracklet_id));
                for &a in &tracklets[i].detections {
                    for &b in &tracklets[j].detections {
                        closed.positives.insert(pair(a, b));
                    }
                }
            }
        }
    }

    // Negative closure: expand each edge to the component cross product.
    let mut root_pairs = BTreeSet::new();
    for &(a, b) in &cs.tracklet_neg {
        let (ra, rb) = (uf.find(resolve(a)?), uf.find(resolve(b)?));
        root_pairs.insert((ra.min(rb), ra.max(rb)));
    }
    for (ra, rb) in root_pairs {
        for &i in &members[&ra] {
            for &j in &members[&rb] {
                closed
                    .tracklet_neg
                    .insert(pair(tracklets[i].tracklet_id, tracklets[j].tracklet_id));
                for &a in &tracklets[i].detections {
                    for &b in &tracklets[j].detections {
                        closed.negatives.insert(pair(a, b));
                    }
                }
            }
        }
    }

    debug_assert!(closed.positives.is_disjoint(&closed.negatives));
    Ok(closed)
}

/// Enumerate (anchor, positive, negative) triples for every negative
/// tracklet pair, both orientations, anchor and positive drawn from one
/// tracklet. Pairs whose full cross product exceeds `max_per_negpair` are
/// subsampled uniformly without replacement under the seed.
pub fn generate_triplets(
    cs: &ConstraintSet,
    tracklets: &[Tracklet],
    max_per_negpair: usize,
    seed: u64,
) -> Vec<(DetectionId, DetectionId, DetectionId)> {
    let index_of: BTreeMap<TrackletId, usize> = tracklets
        .iter()
        .enumerate()
        .map(|(i, t)| (t.tracklet_id, i))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    for &(i, j) in &cs.tracklet_neg {
        let (ti, tj) = (&tracklets[index_of[&i]], &tracklets[index_of[&j]]);
        let (ni, nj) = (ti.len() as u64, tj.len() as u64);
        let fwd = ni * ni.saturating_sub(1) * nj; // anchored in i
        let bwd = nj * nj.saturating_sub(1) * ni; // anchored in j
        let total = fwd + bwd;
        if total == 0 {
            continue;
        }

        let decode = |idx: u64| -> (DetectionId, DetectionId, DetectionId) {
            if idx < fwd {
                let m = (idx % nj) as usize;
                let rest = idx / nj;
                let l_off = (rest % (ni - 1)) as usize;
                let k = (rest / (ni - 1)) as usize;
                let l = if l_off < k { l_off } else { l_off + 1 };
                (ti.detections[k], ti.detections[l], tj.detections[m])
            } else {
                let idx = idx - fwd;
                let m = (idx % ni) as usize;
                let rest = idx / ni;
                let l_off = (rest % (nj - 1)) as usize;
                let k = (rest / (nj - 1)) as usize;
                let l = if l_off < k { l_off } else { l_off + 1 };
                (tj.detections[k], tj.detections[l], ti.detections[m])
            }
        };

        if total as usize <= max_per_negpair {
            out.extend((0..total).map(decode));
        } else {
            // Floyd's algorithm: a uniform size-k subset of 0..total.
            let k = max_per_negpair as u64;
            let mut chosen = BTreeSet::new();
            for t in (total - k)..total {
                let r = rng.random_range(0..=t);
                if !chosen.insert(r) {
                    chosen.insert(t);
                }
            }
            out.extend(chosen.into_iter().map(decode));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::validate_sequence;
    use crate::types::{BBox, Detection, Shot};

    fn det(id: u64, frame: i64, feature: Vec<f64>, ctx: Option<Vec<f64>>) -> Detection {
        Detection {
            id,
            frame,
            bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
            score: 1.0,
            feature,
            context_feature: ctx,
        }
    }

    fn shot(shot_id: u64, s: i64, e: i64) -> Shot {
        Shot {
            shot_id,
            start_frame: s,
            end_frame: e,
        }
    }

    fn tl(id: u64, shot_id: u64, dets: &[u64]) -> Tracklet {
        Tracklet {
            tracklet_id: id,
            shot_id,
            detections: dets.to_vec(),
        }
    }

    fn simple_seq(spec: &[(u64, i64)]) -> Sequence {
        let max_frame = spec.iter().map(|&(_, f)| f).max().unwrap_or(0);
        validate_sequence(
            spec.iter()
                .map(|&(id, f)| det(id, f, vec![0.0], None))
                .collect(),
            vec![shot(0, 0, max_frame)],
        )
        .unwrap()
    }

    #[test]
    fn single_tracklet_yields_all_within_pairs() {
        let seq = simple_seq(&[(0, 0), (1, 1), (2, 2)]);
        let cs = mine_spatiotemporal(&[tl(0, 0, &[0, 1, 2])], &seq);
        assert_eq!(cs.positives.len(), 3); // C(3,2)
        assert!(cs.negatives.is_empty());
        assert!(cs.tracklet_neg.is_empty());
    }

    #[test]
    fn cooccurring_tracklets_yield_cross_negatives() {
        // Two tracklets of length 2 sharing frame 5.
        let seq = simple_seq(&[(0, 5), (1, 6), (2, 5), (3, 7)]);
        let cs = mine_spatiotemporal(&[tl(0, 0, &[0, 1]), tl(1, 0, &[2, 3])], &seq);
        assert_eq!(cs.positives.len(), 2);
        assert_eq!(cs.negatives.len(), 4);
        assert_eq!(cs.tracklet_neg, BTreeSet::from([(0, 1)]));
    }

    #[test]
    fn disjoint_shots_yield_no_negatives() {
        let seq = validate_sequence(
            vec![
                det(0, 0, vec![0.0], None),
                det(1, 1, vec![0.0], None),
                det(2, 10, vec![0.0], None),
                det(3, 11, vec![0.0], None),
            ],
            vec![shot(0, 0, 5), shot(1, 10, 15)],
        )
        .unwrap();
        let cs = mine_spatiotemporal(&[tl(0, 0, &[0, 1]), tl(1, 1, &[2, 3])], &seq);
        assert!(cs.negatives.is_empty());
    }

    fn fig3_like() -> (Sequence, Vec<Tracklet>) {
        // Shot 0: T0 and T1 co-occur. Shot 1: T2..T5 co-occur. Context
        // makes T0 and T2 the same identity, one far outlier style.
        let mut dets = Vec::new();
        let ctx = |v: f64| Some(vec![v]);
        // Shot 0 frames 0-1.
        dets.push(det(0, 0, vec![0.0], ctx(0.0)));
        dets.push(det(1, 1, vec![0.0], ctx(0.0)));
        dets.push(det(10, 0, vec![5.0], ctx(5.0)));
        dets.push(det(11, 1, vec![5.0], ctx(5.0)));
        // Shot 1 frames 10-11.
        dets.push(det(20, 10, vec![0.0], ctx(0.0)));
        dets.push(det(21, 11, vec![0.0], ctx(0.0)));
        dets.push(det(30, 10, vec![9.0], ctx(9.0)));
        dets.push(det(31, 11, vec![9.0], ctx(9.0)));
        dets.push(det(40, 10, vec![14.0], ctx(14.0)));
        dets.push(det(41, 11, vec![14.0], ctx(14.0)));
        dets.push(det(50, 10, vec![20.0], ctx(20.0)));
        dets.push(det(51, 11, vec![20.0], ctx(20.0)));
        let seq =
            validate_sequence(dets, vec![shot(0, 0, 5), shot(1, 10, 15)]).unwrap();
        let tracklets = vec![
            tl(0, 0, &[0, 1]),
            tl(1, 0, &[10, 11]),
            tl(2, 1, &[20, 21]),
            tl(3, 1, &[30, 31]),
            tl(4, 1, &[40, 41]),
            tl(5, 1, &[50, 51]),
        ];
        (seq, tracklets)
    }

    #[test]
    fn contextual_match_links_across_shots() {
        let (seq, tracklets) = fig3_like();
        let mut cs = mine_spatiotemporal(&tracklets, &seq);
        let report =
            mine_contextual(&mut cs, &tracklets, &seq, &ContextConfig::new(1.0)).unwrap();
        assert!(!report.skipped_missing_context);
        assert_eq!(cs.tracklet_pos, BTreeSet::from([(0, 2)]));
    }

    #[test]
    fn all_cooccurring_tracklets_yield_no_contextual_pairs() {
        // Identical descriptors but every pair overlaps in frames.
        let seq = simple_seq(&[(0, 0), (1, 1), (2, 0), (3, 1)]);
        let seq = {
            let dets = seq
                .detections()
                .iter()
                .map(|d| det(d.id, d.frame, vec![0.0], Some(vec![0.0])))
                .collect();
            validate_sequence(dets, vec![shot(0, 0, 5)]).unwrap()
        };
        let tracklets = vec![tl(0, 0, &[0, 1]), tl(1, 0, &[2, 3])];
        let mut cs = mine_spatiotemporal(&tracklets, &seq);
        let report =
            mine_contextual(&mut cs, &tracklets, &seq, &ContextConfig::new(1.0)).unwrap();
        assert!(cs.tracklet_pos.is_empty());
        assert_eq!(report.pairs_added, 0);
    }

    #[test]
    fn missing_context_skips_and_reports() {
        let seq = simple_seq(&[(0, 0), (1, 1)]);
        let tracklets = vec![tl(0, 0, &[0, 1])];
        let mut cs = mine_spatiotemporal(&tracklets, &seq);
        let report =
            mine_contextual(&mut cs, &tracklets, &seq, &ContextConfig::new(1.0)).unwrap();
        assert!(report.skipped_missing_context);
        assert!(cs.tracklet_pos.is_empty());
    }

    #[test]
    fn propagation_derives_fig3_negatives() {
        let (seq, tracklets) = fig3_like();
        let mut cs = mine_spatiotemporal(&tracklets, &seq);
        mine_contextual(&mut cs, &tracklets, &seq, &ContextConfig::new(1.0)).unwrap();
        let closed = propagate_transitive(&cs, &tracklets).unwrap();
        // T0~T2 merged; negatives spread across the component.
        for p in [(0, 1), (1, 2), (0, 3), (0, 4), (0, 5), (2, 3), (2, 4), (2, 5)] {
            assert!(closed.tracklet_neg.contains(&p), "missing {p:?}");
        }
        // And the component pair itself is positive, never negative.
        assert!(closed.tracklet_pos.contains(&(0, 2)));
        assert!(!closed.tracklet_neg.contains(&(0, 2)));
    }

    #[test]
    fn propagation_without_positives_is_identity() {
        let seq = simple_seq(&[(0, 5), (1, 6), (2, 5), (3, 7)]);
        let tracklets = vec![tl(0, 0, &[0, 1]), tl(1, 0, &[2, 3])];
        let cs = mine_spatiotemporal(&tracklets, &seq);
        let closed = propagate_transitive(&cs, &tracklets).unwrap();
        assert_eq!(closed, cs);
    }

    #[test]
    fn simple_transitive_negative() {
        // pos {(A,C)}, neg {(A,B)} derives (B,C).
        let seq = simple_seq(&[(0, 0), (1, 0), (2, 5)]);
        let tracklets = vec![tl(0, 0, &[0]), tl(1, 0, &[1]), tl(2, 0, &[2])];
        let mut cs = mine_spatiotemporal(&tracklets, &seq); // neg (0,1)
        assert!(cs.tracklet_neg.contains(&(0, 1)));
        cs.tracklet_pos.insert((0, 2));
        let closed = propagate_transitive(&cs, &tracklets).unwrap();
        assert!(closed.tracklet_neg.contains(&(1, 2)));
    }

    #[test]
    fn propagation_is_idempotent() {
        let (seq, tracklets) = fig3_like();
        let mut cs = mine_spatiotemporal(&tracklets, &seq);
        mine_contextual(&mut cs, &tracklets, &seq, &ContextConfig::new(1.0)).unwrap();
        let once = propagate_transitive(&cs, &tracklets).unwrap();
        let twice = propagate_transitive(&once, &tracklets).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn contradiction_is_reported() {
        let seq = simple_seq(&[(0, 0), (1, 0)]);
        let tracklets = vec![tl(0, 0, &[0]), tl(1, 0, &[1])];
        let mut cs = mine_spatiotemporal(&tracklets, &seq); // neg (0,1)
        cs.tracklet_pos.insert((0, 1));
        let e = propagate_transitive(&cs, &tracklets);
        assert!(
            matches!(e, Err(Error::ConstraintContradiction { pairs }) if pairs == vec![(0, 1)])
        );
    }

    #[test]
    fn triplet_counts_small_tracklets() {
        // Lengths (2,1): 2 anchored in the pair tracklet, none in the
        // singleton.
        let seq = simple_seq(&[(0, 0), (1, 1), (2, 0)]);
        let tracklets = vec![tl(0, 0, &[0, 1]), tl(1, 0, &[2])];
        let cs = mine_spatiotemporal(&tracklets, &seq);
        let triplets = generate_triplets(&cs, &tracklets, 1000, 0);
        assert_eq!(triplets.len(), 2);
        assert!(triplets.contains(&(0, 1, 2)));
        assert!(triplets.contains(&(1, 0, 2)));
    }

    #[test]
    fn no_negative_pairs_no_triplets() {
        let seq = simple_seq(&[(0, 0), (1, 1)]);
        let tracklets = vec![tl(0, 0, &[0, 1])];
        let cs = mine_spatiotemporal(&tracklets, &seq);
        assert!(generate_triplets(&cs, &tracklets, 1000, 0).is_empty());
    }

    #[test]
    fn subsampling_caps_and_reproduces() {
        // Lengths (2,2): full count 2*1*2 + 2*1*2 = 8, capped at 4.
        let seq = simple_seq(&[(0, 0), (1, 1), (2, 0), (3, 1)]);
        let tracklets = vec![tl(0, 0, &[0, 1]), tl(1, 0, &[2, 3])];
        let cs = mine_spatiotemporal(&tracklets, &seq);
        let a = generate_triplets(&cs, &tracklets, 4, 99);
        let b = generate_triplets(&cs, &tracklets, 4, 99);
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
        let full = generate_triplets(&cs, &tracklets, 8, 99);
        assert_eq!(full.len(), 8);
    }

    #[test]
    fn every_triplet_respects_the_constraint_structure() {
        let (seq, tracklets) = fig3_like();
        let mut cs = mine_spatiotemporal(&tracklets, &seq);
        mine_contextual(&mut cs, &tracklets, &seq, &ContextConfig::new(1.0)).unwrap();
        let closed = propagate_transitive(&cs, &tracklets).unwrap();
        let triplets = generate_triplets(&closed, &tracklets, 1000, 5);
        assert!(!triplets.is_empty());
        let owner: BTreeMap<u64, u64> = tracklets
            .iter()
            .flat_map(|t| t.detections.iter().map(|&d| (d, t.tracklet_id)))
            .collect();
        for (a, p, n) in triplets {
            assert_eq!(owner[&a], owner[&p], "anchor/positive not same tracklet");
            assert!(closed
                .tracklet_neg
                .contains(&pair(owner[&a], owner[&n])));
        }
    }
}
