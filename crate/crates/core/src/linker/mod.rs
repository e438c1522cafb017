//! Two-step association: Hungarian linking of tracklets within each shot,
//! then agglomerative clustering of shot-level tracklets across shots.

pub mod hac;
pub mod hungarian;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hac::{agglomerate, DistanceMatrix, HacResult, Linkage, MergeStep, StopRule};
pub use hungarian::{hungarian, Assignment, CostMatrix, FORBIDDEN};

use crate::distance::sq_dist_unchecked;
use crate::error::{Error, Result};
use crate::sequence::Sequence;
use crate::types::{DetectionId, Tracklet, Trajectory};

/// Embeddings keyed by detection id.
pub type EmbeddingTable = BTreeMap<DetectionId, Vec<f64>>;

/// Association thresholds and weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkerConfig {
    /// Stop threshold for across-shot clustering.
    pub theta: f64,
    /// Clusters with fewer tracklets than this AND fewer frames than
    /// `min_cluster_frames` are removed.
    pub min_cluster_tracklets: usize,
    pub min_cluster_frames: usize,
    /// Maximum admissible within-shot linking cost.
    pub within_shot_gate: f64,
    /// Within-shot cost weights: appearance, kinematic, temporal.
    pub w_app: f64,
    pub w_kin: f64,
    pub w_time: f64,
    pub linkage: Linkage,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        Self {
            theta: 5.0,
            min_cluster_tracklets: 4,
            min_cluster_frames: 50,
            within_shot_gate: 10.0,
            w_app: 0.6,
            w_kin: 0.2,
            w_time: 0.2,
            linkage: Linkage::GroupAverage,
        }
    }
}

impl LinkerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta <= 0.0 {
            return Err(Error::InvalidConfig("theta must be > 0".into()));
        }
        if self.within_shot_gate <= 0.0 {
            return Err(Error::InvalidConfig(
                "within_shot_gate must be > 0".into(),
            ));
        }
        for (name, w) in [
            ("w_app", self.w_app),
            ("w_kin", self.w_kin),
            ("w_time", self.w_time),
        ] {
            if w < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

fn embedding_of<'a>(emb: &'a EmbeddingTable, id: DetectionId) -> Result<&'a [f64]> {
    emb.get(&id)
        .map(|v| v.as_slice())
        .ok_or(Error::MissingEmbedding { id })
}

fn tracklet_frames(t: &Tracklet, seq: &Sequence) -> Vec<i64> {
    t.detections
        .iter()
        .map(|&id| seq.detection(id).expect("validated sequence").frame)
        .collect()
}

fn frames_overlap(a: &[i64], b: &[i64]) -> bool {
    // Both sorted (tracklet invariant).
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => return true,
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    false
}

/// Mean squared embedding distance over all cross pairs of two tracklets,
/// or infinity when they share a frame.
pub fn tracklet_mean_distance(
    ti: &Tracklet,
    tj: &Tracklet,
    seq: &Sequence,
    emb: &EmbeddingTable,
) -> Result<f64> {
    if frames_overlap(&tracklet_frames(ti, seq), &tracklet_frames(tj, seq)) {
        return Ok(f64::INFINITY);
    }
    let mut sum = 0.0;
    for &a in &ti.detections {
        let ea = embedding_of(emb, a)?;
        for &b in &tj.detections {
            let eb = embedding_of(emb, b)?;
            if ea.len() != eb.len() {
                return Err(Error::DimensionMismatch {
                    left: ea.len(),
                    right: eb.len(),
                });
            }
            sum += sq_dist_unchecked(ea, eb);
        }
    }
    Ok(sum / (ti.len() as f64 * tj.len() as f64))
}

/// Pairwise tracklet distance matrix (parallel over pairs).
pub fn distance_matrix(
    tracklets: &[Tracklet],
    seq: &Sequence,
    emb: &EmbeddingTable,
) -> Result<DistanceMatrix> {
    let n = tracklets.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let computed: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| tracklet_mean_distance(&tracklets[i], &tracklets[j], seq, emb))
        .collect();
    let mut m = DistanceMatrix::new(n);
    for (&(i, j), d) in pairs.iter().zip(computed) {
        m.set(i, j, d?);
    }
    Ok(m)
}

/// Link the tracklets of one shot into shot-level tracklets.
///
/// Cost between a tracklet `i` ending before `j` starts combines the mean
/// embedding distance, a constant-velocity kinematic gap (squared center
/// error of `i`'s extrapolated last box against `j`'s first box, normalized
/// by `i`'s last box area), and the frame gap normalized by the shot span.
/// Pairs over `within_shot_gate` are forbidden; the Hungarian assignment
/// picks at most one successor and predecessor per tracklet and the
/// resulting chains merge.
pub fn link_within_shot(
    tracklets: &[Tracklet],
    seq: &Sequence,
    emb: &EmbeddingTable,
    cfg: &LinkerConfig,
) -> Result<Vec<Tracklet>> {
    cfg.validate()?;
    let n = tracklets.len();
    if n <= 1 {
        return Ok(tracklets.to_vec());
    }
    let shot_id = tracklets[0].shot_id;
    debug_assert!(tracklets.iter().all(|t| t.shot_id == shot_id));
    let shot = seq
        .shots()
        .iter()
        .find(|s| s.shot_id == shot_id)
        .expect("tracklet shot exists");

    let mut cost = CostMatrix::new(n, n, FORBIDDEN);
    for i in 0..n {
        let ti = &tracklets[i];
        let last = seq.detection(*ti.detections.last().unwrap()).unwrap();
        // Second-to-last detection for the velocity estimate; a singleton
        // tracklet gets zero velocity.
        let prev = seq
            .detection(ti.detections[ti.len().saturating_sub(2)])
            .unwrap();
        for j in 0..n {
            if i == j {
                continue;
            }
            let tj = &tracklets[j];
            let first = seq.detection(tj.detections[0]).unwrap();
            if first.frame <= last.frame {
                continue; // j must start strictly after i ends
            }
            let gap = (first.frame - last.frame) as f64;

            let app = tracklet_mean_distance(ti, tj, seq, emb)?;

            let (lx, ly) = last.bbox.center();
            let (px, py) = prev.bbox.center();
            let dt = (last.frame - prev.frame).max(1) as f64;
            let (vx, vy) = ((lx - px) / dt, (ly - py) / dt);
            let (fx, fy) = first.bbox.center();
            let (ex, ey) = (lx + vx * gap, ly + vy * gap);
            let kin = ((ex - fx) * (ex - fx) + (ey - fy) * (ey - fy)) / last.bbox.area();

            let time = (gap - 1.0) / shot.span() as f64;

            let c = cfg.w_app * app + cfg.w_kin * kin + cfg.w_time * time;
            if c <= cfg.within_shot_gate {
                cost.set(i, j, c);
            }
        }
    }

    let assignment = hungarian(&cost);
    let mut successor: Vec<Option<usize>> = assignment.row_to_col.clone();
    let mut has_pred = vec![false; n];
    for s in successor.iter().flatten() {
        has_pred[*s] = true;
    }

    // Walk chains from their heads, merging detection lists in frame order.
    let mut merged = Vec::new();
    for head in 0..n {
        if has_pred[head] {
            continue;
        }
        let mut dets = Vec::new();
        let mut cur = Some(head);
        while let Some(i) = cur {
            dets.extend_from_slice(&tracklets[i].detections);
            cur = successor[i].take();
        }
        merged.push(Tracklet {
            tracklet_id: 0, // renumbered by the caller across shots
            shot_id,
            detections: dets,
        });
    }
    merged.sort_by_key(|t| {
        let first = t.detections[0];
        let d = seq.detection(first).unwrap();
        (d.frame, d.id)
    });
    for (i, t) in merged.iter_mut().enumerate() {
        t.tracklet_id = i as u64;
    }
    Ok(merged)
}

/// Outcome of clustering tracklets to a requested cluster count.
#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    /// Member tracklet indices per cluster.
    pub clusters: Vec<Vec<usize>>,
    /// Cluster count actually reached (can exceed the request when only
    /// infinite distances remain).
    pub achieved: usize,
}

/// Agglomerate to exactly `k` clusters, ignoring the stop threshold; stops
/// early (reporting the achieved count) if infinite distances make `k`
/// unreachable.
pub fn cluster_to_k(
    tracklets: &[Tracklet],
    seq: &Sequence,
    emb: &EmbeddingTable,
    k: usize,
    linkage: Linkage,
) -> Result<ClusterOutcome> {
    if k < 1 || k > tracklets.len() {
        return Err(Error::InvalidConfig(format!(
            "k must be in [1, {}], got {k}",
            tracklets.len()
        )));
    }
    let m = distance_matrix(tracklets, seq, emb)?;
    let r = agglomerate(&m, linkage, StopRule::Clusters(k));
    Ok(ClusterOutcome {
        achieved: r.clusters.len(),
        clusters: r.clusters,
    })
}

/// Cluster shot-level tracklets across shots into identity-labelled
/// trajectories.
///
/// Group-average clustering stops once the closest pair exceeds `theta`;
/// clusters failing BOTH size minimums (fewer than `min_cluster_tracklets`
/// tracklets and fewer than `min_cluster_frames` detections) are removed.
/// Survivors get identities 1..K in order of first frame.
pub fn link_across_shots(
    tracklets: &[Tracklet],
    seq: &Sequence,
    emb: &EmbeddingTable,
    cfg: &LinkerConfig,
) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let m = distance_matrix(tracklets, seq, emb)?;
    let r = agglomerate(&m, cfg.linkage, StopRule::Threshold(cfg.theta));

    let mut kept: Vec<(i64, Vec<usize>)> = Vec::new();
    for members in r.clusters {
        let n_tracklets = members.len();
        let n_frames: usize = members.iter().map(|&i| tracklets[i].len()).sum();
        if n_tracklets < cfg.min_cluster_tracklets && n_frames < cfg.min_cluster_frames {
            continue;
        }
        let first_frame = members
            .iter()
            .map(|&i| {
                seq.detection(tracklets[i].detections[0])
                    .expect("validated")
                    .frame
            })
            .min()
            .expect("cluster is non-empty");
        kept.push((first_frame, members));
    }
    kept.sort();

    let trajectories: Vec<Trajectory> = kept
        .into_iter()
        .enumerate()
        .map(|(idx, (_, members))| {
            let mut ids: Vec<u64> =
                members.iter().map(|&i| tracklets[i].tracklet_id).collect();
            ids.sort_unstable();
            Trajectory {
                identity: idx as u64 + 1,
                tracklet_ids: ids,
            }
        })
        .collect();

    // Hard invariant: no two tracklets of one trajectory share a frame.
    debug_assert!(trajectories.iter().all(|tr| {
        let members: Vec<&Tracklet> = tr
            .tracklet_ids
            .iter()
            .map(|&id| {
                tracklets
                    .iter()
                    .find(|t| t.tracklet_id == id)
                    .expect("member exists")
            })
            .collect();
        members.iter().enumerate().all(|(i, a)| {
            members.iter().skip(i + 1).all(|b| {
                !frames_overlap(&tracklet_frames(a, seq), &tracklet_frames(b, seq))
            })
        })
    }));

    Ok(trajectories)
}
