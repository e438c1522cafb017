//! Bottom-up agglomerative clustering over a precomputed distance matrix.
//!
//! Pairs at infinite distance (frame-overlapping tracklets) are never
//! merged, and any cluster pair containing such a base pair stays infinite.
//! Cluster-to-cluster distances follow the configured linkage; the default
//! group average equals the mean of all cross-cluster base distances.

use serde::{Deserialize, Serialize};

/// Linkage rule for the distance between merged clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    /// Mean over all cross-cluster base pairs.
    GroupAverage,
    /// Minimum over all cross-cluster base pairs.
    Single,
    /// Maximum over all cross-cluster base pairs.
    Complete,
}

impl Default for Linkage {
    fn default() -> Self {
        Linkage::GroupAverage
    }
}

/// When to stop merging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once the smallest cluster distance exceeds the threshold.
    Threshold(f64),
    /// Stop once this many clusters remain (or earlier if only infinite
    /// distances are left).
    Clusters(usize),
}

/// One merge, for conformance checking: cluster ids are the smallest member
/// index of each side, `a < b`, at the recorded distance.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

/// Clustering outcome. `clusters` holds sorted member indices, ordered by
/// smallest member.
#[derive(Debug, Clone, PartialEq)]
pub struct HacResult {
    pub clusters: Vec<Vec<usize>>,
    pub merges: Vec<MergeStep>,
    /// True when a `Clusters(k)` stop could not be reached because every
    /// remaining pair was infinite.
    pub stopped_infinite: bool,
}

/// Symmetric base distance matrix; `f64::INFINITY` marks pairs that must
/// never share a cluster.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                m.set(i, j, d);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, d: f64) {
        self.data[i * self.n + j] = d;
        self.data[j * self.n + i] = d;
    }
}

struct Cluster {
    /// Smallest member index; doubles as the cluster id.
    id: usize,
    members: Vec<usize>,
}

/// Run agglomerative clustering. Ties on the minimum distance break toward
/// the smallest `(id_a, id_b)` pair, so the merge sequence is deterministic.
pub fn agglomerate(base: &DistanceMatrix, linkage: Linkage, stop: StopRule) -> HacResult {
    let n = base.len();
    let mut clusters: Vec<Cluster> = (0..n)
        .map(|i| Cluster {
            id: i,
            members: vec![i],
        })
        .collect();

    // Active cluster-pair state, indexed by position in `clusters`.
    // `dist` is the linkage value; `blocked` records whether any cross pair
    // is infinite (which overrides the linkage value).
    let mut dist = vec![0.0f64; n * n];
    let mut blocked = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = base.get(i, j);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
            if d.is_infinite() {
                blocked[i * n + j] = true;
                blocked[j * n + i] = true;
            }
        }
    }
    let eff = |dist: &[f64], blocked: &[bool], n: usize, i: usize, j: usize| -> f64 {
        if blocked[i * n + j] {
            f64::INFINITY
        } else {
            dist[i * n + j]
        }
    };

    let mut merges = Vec::new();
    let mut stopped_infinite = false;

    loop {
        match stop {
            StopRule::Clusters(k) => {
                if clusters.len() <= k.max(1) {
                    break;
                }
            }
            StopRule::Threshold(_) => {}
        }
        if clusters.len() < 2 {
            break;
        }

        let m = clusters.len();
        let mut best: Option<(f64, usize, usize)> = None; // (distance, pos_i, pos_j)
        for i in 0..m {
            for j in (i + 1)..m {
                let d = eff(&dist, &blocked, n, clusters[i].id, clusters[j].id);
                if !d.is_finite() {
                    continue;
                }
                let key = (
                    clusters[i].id.min(clusters[j].id),
                    clusters[i].id.max(clusters[j].id),
                );
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        let bkey = (
                            clusters[bi].id.min(clusters[bj].id),
                            clusters[bi].id.max(clusters[bj].id),
                        );
                        d < bd || (d == bd && key < bkey)
                    }
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }

        let (d, pi, pj) = match best {
            Some(b) => b,
            None => {
                if matches!(stop, StopRule::Clusters(k) if clusters.len() > k) {
                    stopped_infinite = true;
                }
                break;
            }
        };
        if let StopRule::Threshold(theta) = stop {
            if d > theta {
                break;
            }
        }

        let (id_i, id_j) = (clusters[pi].id, clusters[pj].id);
        merges.push(MergeStep {
            a: id_i.min(id_j),
            b: id_i.max(id_j),
            distance: d,
        });

        // Lance-Williams update of all distances to the merged cluster,
        // stored under the surviving id min(id_i, id_j).
        let (keep, gone) = (id_i.min(id_j), id_i.max(id_j));
        let (size_keep, size_gone) = {
            let si = clusters[pi].members.len() as f64;
            let sj = clusters[pj].members.len() as f64;
            if clusters[pi].id == keep {
                (si, sj)
            } else {
                (sj, si)
            }
        };
        for c in &clusters {
            if c.id == id_i || c.id == id_j {
                continue;
            }
            let k = c.id;
            let dk_keep = dist[k * n + keep];
            let dk_gone = dist[k * n + gone];
            let merged = match linkage {
                Linkage::GroupAverage => {
                    (size_keep * dk_keep + size_gone * dk_gone) / (size_keep + size_gone)
                }
                Linkage::Single => dk_keep.min(dk_gone),
                Linkage::Complete => dk_keep.max(dk_gone),
            };
            let b = blocked[k * n + keep] || blocked[k * n + gone];
            dist[k * n + keep] = merged;
            dist[keep * n + k] = merged;
            blocked[k * n + keep] = b;
            blocked[keep * n + k] = b;
        }

        // Fold pj into pi (or vice versa) keeping the smaller id.
        let (into, from) = if clusters[pi].id == keep { (pi, pj) } else { (pj, pi) };
        let moved = std::mem::take(&mut clusters[from].members);
        clusters[into].members.extend(moved);
        clusters[into].members.sort_unstable();
        clusters.remove(from);
    }

    clusters.sort_by_key(|c| c.id);
    HacResult {
        clusters: clusters.into_iter().map(|c| c.members).collect(),
        merges,
        stopped_infinite,
    }
}
