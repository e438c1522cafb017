//! Minimum-cost bipartite assignment with forbidden entries.

/// Marks an entry that must never be assigned.
pub const FORBIDDEN: f64 = f64::INFINITY;

/// Rectangular cost matrix; `FORBIDDEN` entries are never assigned.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, fill: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![fill; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        let mut m = Self::new(r, c, 0.0);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged cost matrix");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Result of [`hungarian`]: per-row assigned column (or `None`) and the total
/// cost over assigned pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<Option<usize>>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| (r, c)))
    }
}

/// Solve the assignment problem: among assignments of maximum cardinality
/// over the allowed (finite) entries, return one of minimum total cost.
///
/// Rows that can only meet forbidden entries are left unassigned. The
/// augmenting-path scan is deterministic, so identical inputs always produce
/// identical assignments; ties between equal-cost solutions resolve in
/// row-major scan order.
pub fn hungarian(cost: &CostMatrix) -> Assignment {
    if cost.rows() == 0 || cost.cols() == 0 {
        return Assignment {
            row_to_col: vec![None; cost.rows()],
            total_cost: 0.0,
        };
    }

    // Work on a transposed copy when rows exceed cols so the solver always
    // sees rows <= cols.
    let transposed = cost.rows() > cost.cols();
    let (n, m) = if transposed {
        (cost.cols(), cost.rows())
    } else {
        (cost.rows(), cost.cols())
    };
    let at = |r: usize, c: usize| -> f64 {
        if transposed {
            cost.get(c, r)
        } else {
            cost.get(r, c)
        }
    };

    // Forbidden entries are replaced by a finite penalty larger than any
    // possible sum of real costs, so minimum cost implies first maximizing
    // the number of real assignments. Using a sum-scaled penalty (instead of
    // e.g. 1e300) keeps the dual updates well-conditioned.
    let mut finite_sum = 1.0;
    for r in 0..n {
        for c in 0..m {
            let v = at(r, c);
            if v.is_finite() {
                finite_sum += v.abs();
            }
        }
    }
    let big = finite_sum;
    let w = |r: usize, c: usize| -> f64 {
        let v = at(r, c);
        if v.is_finite() {
            v
        } else {
            big
        }
    };

    // Augmenting-path algorithm with potentials (O(n^2 m)), 1-based columns
    // with column 0 as the virtual start.
    let mut potential_row = vec![0.0f64; n + 1];
    let mut potential_col = vec![0.0f64; m + 1];
    let mut col_match = vec![0usize; m + 1]; // 0 = unmatched; else row+1

    for row in 1..=n {
        col_match[0] = row;
        let mut j0 = 0usize;
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut prev = vec![0usize; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = col_match[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = w(i0 - 1, j - 1) - potential_row[i0] - potential_col[j];
                    if cur < min_to[j] {
                        min_to[j] = cur;
                        prev[j] = j0;
                    }
                    if min_to[j] < delta {
                        delta = min_to[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    potential_row[col_match[j]] += delta;
                    potential_col[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if col_match[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        while j0 != 0 {
            let j1 = prev[j0];
            col_match[j0] = col_match[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![None; cost.rows()];
    let mut total = 0.0;
    for j in 1..=m {
        let i = col_match[j];
        if i == 0 {
            continue;
        }
        let (r, c) = if transposed { (j - 1, i - 1) } else { (i - 1, j - 1) };
        // Drop pairs that were only matched through the penalty.
        if cost.get(r, c).is_finite() {
            row_to_col[r] = Some(c);
            total += cost.get(r, c);
        }
    }

    Assignment {
        row_to_col,
        total_cost: total,
    }
}
