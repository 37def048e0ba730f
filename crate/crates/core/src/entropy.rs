//! k-NN entropy estimators: the unweighted Kozachenko–Leonenko form and the
//! weighted form evaluated over the atoms of a random discrete measure.

use serde::{Deserialize, Serialize};

use crate::data::PointSet;
use crate::dp::DPApproximation;
use crate::error::{Error, Result};
use crate::knn::{knn_distances, KnnResult};
use crate::special::{harmonic_number, unit_ball_log_volume, EULER_GAMMA};

/// Distances that are exactly zero are replaced by this before taking logs.
pub const DEFAULT_DISTANCE_FLOOR: f64 = 1e-10;

/// Tolerance on Σ weights = 1.
const WEIGHT_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Differential entropy in nats.
    pub value: f64,
    pub k: usize,
    /// Number of points the neighbors were searched among.
    pub m: usize,
    pub zero_distance_count: usize,
}

fn log_distances(knn: &KnnResult, floor: f64) -> Result<Vec<f64>> {
    if knn.zero_count == knn.distances.len() {
        return Err(Error::degenerate(format!(
            "every point has {} or more exact duplicates",
            knn.k
        )));
    }
    Ok(knn.distances.iter().map(|&r| r.max(floor).ln()).collect())
}

/// k-NN Kozachenko–Leonenko estimate
/// `(d/n)·Σ log R_i + log V_d − L_{k−1} + γ + log(n − 1)`.
pub fn knn_entropy(data: &PointSet, k: usize) -> Result<EntropyEstimate> {
    knn_entropy_with_floor(data, k, DEFAULT_DISTANCE_FLOOR)
}

pub fn knn_entropy_with_floor(data: &PointSet, k: usize, floor: f64) -> Result<EntropyEstimate> {
    let n = data.len();
    let d = data.dim() as f64;
    let knn = knn_distances(data, k)?;
    let logs = log_distances(&knn, floor)?;
    let mean_log = logs.iter().sum::<f64>() / n as f64;
    let value = d * mean_log + unit_ball_log_volume(data.dim()) - harmonic_number(k - 1)
        + EULER_GAMMA
        + ((n - 1) as f64).ln();
    Ok(EntropyEstimate {
        value,
        k,
        m: n,
        zero_distance_count: knn.zero_count,
    })
}

/// Weighted k-NN entropy over atoms `points` with probabilities `weights`:
/// `Σ_i w_i·log((m−1)·V_d·R_i^d / k) − L_{k−1} + γ + log k`, where `R_i` is
/// the distance from atom i to its k-th nearest other atom.
pub fn weighted_knn_entropy(
    points: &PointSet,
    weights: &[f64],
    k: usize,
    floor: f64,
) -> Result<EntropyEstimate> {
    let m = points.len();
    if weights.len() != m {
        return Err(Error::Contract(format!(
            "{} weights for {m} atoms",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
        return Err(Error::Contract("negative or NaN weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Contract(format!("weights sum to {total}, not 1")));
    }
    let knn = knn_distances(points, k)?;
    let logs = log_distances(&knn, floor)?;
    let d = points.dim() as f64;
    let kf = k as f64;
    let constant = ((m - 1) as f64).ln() + unit_ball_log_volume(points.dim()) - kf.ln();
    let weighted: f64 = weights
        .iter()
        .zip(&logs)
        .map(|(w, lr)| w * (constant + d * lr))
        .sum();
    Ok(EntropyEstimate {
        value: weighted - harmonic_number(k - 1) + EULER_GAMMA + kf.ln(),
        k,
        m,
        zero_distance_count: knn.zero_count,
    })
}

/// Posterior entropy of one finite Dirichlet-process draw, evaluated over its
/// atoms exactly as stored.
pub fn weighted_posterior_entropy(dp: &DPApproximation, k: usize) -> Result<EntropyEstimate> {
    weighted_knn_entropy(dp.atoms(), dp.weights(), k, DEFAULT_DISTANCE_FLOOR)
}
