//! Exact k-th nearest-neighbor distances under the Euclidean norm.

mod kdtree;

use serde::{Deserialize, Serialize};

use crate::data::PointSet;
use crate::error::{Error, Result};
use kdtree::{squared_distance, KdTree};

/// Below this many points a quadratic scan beats building a tree.
const BRUTE_FORCE_MAX: usize = 96;
/// Above this dimension the tree prunes too little to pay off.
const TREE_MAX_DIM: usize = 10;

/// Distance from every point to its k-th nearest other point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnResult {
    pub k: usize,
    pub distances: Vec<f64>,
    /// Number of distances that are exactly zero (duplicate points).
    pub zero_count: usize,
}

impl KnnResult {
    fn new(k: usize, distances: Vec<f64>) -> Self {
        let zero_count = distances.iter().filter(|&&d| d == 0.0).count();
        KnnResult {
            k,
            distances,
            zero_count,
        }
    }
}

fn check_k(m: usize, k: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::param(format!(
            "k-NN needs at least 2 points, got {m}"
        )));
    }
    if k == 0 || k > m - 1 {
        return Err(Error::param(format!(
            "k must lie in 1..={} for {m} points, got {k}",
            m - 1
        )));
    }
    Ok(())
}

/// For each point, the Euclidean distance to its k-th closest point among
/// the others. The point itself is excluded by index, so duplicates of it
/// count as neighbors at distance zero.
pub fn knn_distances(points: &PointSet, k: usize) -> Result<KnnResult> {
    let m = points.len();
    check_k(m, k)?;
    if points.dim() == 1 {
        return knn_distances_1d(points.as_flat(), k);
    }
    let sq: Vec<f64> = if m <= BRUTE_FORCE_MAX || points.dim() > TREE_MAX_DIM {
        brute_force_sq(points, k)
    } else {
        let tree = KdTree::build(points);
        (0..m).map(|i| tree.kth_neighbor_sq(i, k)).collect()
    };
    Ok(KnnResult::new(k, sq.into_iter().map(f64::sqrt).collect()))
}

fn brute_force_sq(points: &PointSet, k: usize) -> Vec<f64> {
    let m = points.len();
    let mut buf = Vec::with_capacity(m - 1);
    (0..m)
        .map(|i| {
            let p = points.row(i);
            buf.clear();
            buf.extend(
                (0..m)
                    .filter(|&j| j != i)
                    .map(|j| squared_distance(p, points.row(j))),
            );
            *buf.select_nth_unstable_by(k - 1, f64::total_cmp).1
        })
        .collect()
}

/// One-dimensional fast path: sort once, then walk outwards from each
/// point. Same contract and same values as [`knn_distances`] with d = 1.
pub fn knn_distances_1d(values: &[f64], k: usize) -> Result<KnnResult> {
    let m = values.len();
    check_k(m, k)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    let mut distances = vec![0.0; m];
    for (pos, &orig) in order.iter().enumerate() {
        let x = sorted[pos];
        let (mut lo, mut hi) = (pos, pos + 1);
        let mut kth = 0.0;
        for _ in 0..k {
            let left = (lo > 0).then(|| x - sorted[lo - 1]);
            let right = (hi < m).then(|| sorted[hi] - x);
            kth = match (left, right) {
                (Some(l), Some(r)) if l <= r => {
                    lo -= 1;
                    l
                }
                (Some(l), None) => {
                    lo -= 1;
                    l
                }
                (_, Some(r)) => {
                    hi += 1;
                    r
                }
                (None, None) => unreachable!("k <= m - 1"),
            };
        }
        distances[orig] = kth;
    }
    Ok(KnnResult::new(k, distances))
}
