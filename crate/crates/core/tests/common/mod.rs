//! Independent reference implementations used as oracles. These deliberately
//! avoid the library's algorithms: assignment by exhaustive enumeration,
//! clustering by recomputing every cluster distance from the base matrix,
//! and gradients by central finite differences.

#![allow(dead_code)]

use shotlink::linker::{CostMatrix, Linkage, MergeStep, StopRule};

/// Exhaustive assignment oracle: maximum cardinality over finite entries,
/// then minimum total cost. Returns (matched pairs, total cost).
pub fn brute_force_assignment(cost: &CostMatrix) -> (usize, f64) {
    fn recurse(
        cost: &CostMatrix,
        row: usize,
        used: &mut Vec<bool>,
        count: usize,
        total: f64,
        best: &mut (usize, f64),
    ) {
        if row == cost.rows() {
            if count > best.0 || (count == best.0 && total < best.1) {
                *best = (count, total);
            }
            return;
        }
        // Leave this row unmatched.
        recurse(cost, row + 1, used, count, total, best);
        for col in 0..cost.cols() {
            if !used[col] && cost.get(row, col).is_finite() {
                used[col] = true;
                recurse(cost, row + 1, used, count + 1, total + cost.get(row, col), best);
                used[col] = false;
            }
        }
    }
    let mut best = (0usize, f64::INFINITY);
    let mut used = vec![false; cost.cols()];
    recurse(cost, 0, &mut used, 0, 0.0, &mut best);
    if best.0 == 0 {
        best.1 = 0.0;
    }
    (best.0, best.1)
}

/// Naive agglomerative clustering: every step recomputes all cluster-pair
/// distances from the base matrix (no incremental updates), merges the
/// closest pair with ties to the smallest (id, id), and applies the same
/// stop rules as the library.
pub fn reference_hac(
    base: &[Vec<f64>],
    linkage: Linkage,
    stop: StopRule,
) -> (Vec<Vec<usize>>, Vec<MergeStep>) {
    let n = base.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::new();

    loop {
        if let StopRule::Clusters(k) = stop {
            if clusters.len() <= k.max(1) {
                break;
            }
        }
        if clusters.len() < 2 {
            break;
        }

        let cluster_distance = |a: &[usize], b: &[usize]| -> f64 {
            let mut acc: f64 = match linkage {
                Linkage::GroupAverage => 0.0,
                Linkage::Single => f64::INFINITY,
                Linkage::Complete => f64::NEG_INFINITY,
            };
            for &i in a {
                for &j in b {
                    let d = base[i][j];
                    if d.is_infinite() {
                        return f64::INFINITY;
                    }
                    match linkage {
                        Linkage::GroupAverage => acc += d,
                        Linkage::Single => acc = acc.min(d),
                        Linkage::Complete => acc = acc.max(d),
                    }
                }
            }
            match linkage {
                Linkage::GroupAverage => acc / (a.len() * b.len()) as f64,
                _ => acc,
            }
        };

        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let d = cluster_distance(&clusters[i], &clusters[j]);
                if !d.is_finite() {
                    continue;
                }
                let key = (clusters[i][0].min(clusters[j][0]), clusters[i][0].max(clusters[j][0]));
                let take = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        let bkey = (
                            clusters[bi][0].min(clusters[bj][0]),
                            clusters[bi][0].max(clusters[bj][0]),
                        );
                        d < bd || (d == bd && key < bkey)
                    }
                };
                if take {
                    best = Some((d, i, j));
                }
            }
        }

        let (d, i, j) = match best {
            Some(b) => b,
            None => break,
        };
        if let StopRule::Threshold(theta) = stop {
            if d > theta {
                break;
            }
        }
        let a_id = clusters[i][0];
        let b_id = clusters[j][0];
        merges.push(MergeStep {
            a: a_id.min(b_id),
            b: a_id.max(b_id),
            distance: d,
        });
        let absorbed = clusters.remove(j);
        clusters[i].extend(absorbed);
        clusters[i].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
    }

    clusters.sort_by_key(|c| c[0]);
    (clusters, merges)
}

/// Central finite differences of a scalar function of a vector.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut work = x.to_vec();
    for i in 0..x.len() {
        let orig = work[i];
        work[i] = orig + eps;
        let plus = f(&work);
        work[i] = orig - eps;
        let minus = f(&work);
        work[i] = orig;
        g.push((plus - minus) / (2.0 * eps));
    }
    g
}

/// Relative error with a unit floor, matching the library's convention.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0f64.max(a.abs()).max(b.abs())
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| rel_err(x, y))
        .fold(0.0, f64::max)
}
