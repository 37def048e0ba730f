//! Mutual information from posterior draws of a Dirichlet process.
//!
//! One draw: sample `P_N` from the finite posterior approximation, compute
//! the weighted k-NN entropy of `P_N` and of each of its coordinate
//! marginals, and return `Σ_j H(P_N,j) − H(P_N)`. The estimate is the
//! midhinge of the positive parts of ℓ such draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dp::{
    distinct_rows, sample_collapsed_with, sample_dp_posterior, DPApproximation, JitterPolicy,
    PriorSpec,
};
use crate::entropy::{knn_entropy, weighted_knn_entropy, DEFAULT_DISTANCE_FLOOR};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::stats_dist::BaseMeasure;

/// How duplicated atoms of a posterior draw are made usable by the k-NN
/// entropy.
///
/// With a small concentration almost every atom is a copy of a data row, so
/// k-th neighbor distances among raw atoms are mostly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatePolicy {
    /// Merge identical atoms into one support point carrying their summed
    /// weight, and evaluate the entropy over the distinct support.
    #[default]
    Collapse,
    /// Perturb data-sourced atoms with Gaussian noise of
    /// `jitter_scale × column sd` and keep all N atoms.
    Jitter,
}

/// Which random measure the marginal entropies are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMode {
    /// Coordinate projections of the joint draw, same weights.
    #[default]
    Projected,
    /// A fresh posterior draw per coordinate.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuartileMethod {
    /// Quantile p sits at 0-based rank p·(m−1), interpolating linearly
    /// between neighboring order statistics.
    #[default]
    LinearInterpolation,
    /// Smallest order statistic whose rank is at least ⌈p·m⌉.
    NearestRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// DP concentration.
    pub a: f64,
    pub k: usize,
    /// Atoms per posterior draw (N).
    pub atoms: usize,
    /// Posterior draws (ℓ).
    pub draws: usize,
    pub jitter_scale: f64,
    pub epsilon_floor: f64,
    pub quartile_method: QuartileMethod,
    pub seed: u64,
    pub duplicates: DuplicatePolicy,
    pub marginals: MarginalMode,
    /// Base measure G; `None` means N_d(0, I_d).
    pub base: Option<BaseMeasure>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            a: 0.05,
            k: 3,
            atoms: 1000,
            draws: 1000,
            jitter_scale: 0.01,
            epsilon_floor: DEFAULT_DISTANCE_FLOOR,
            quartile_method: QuartileMethod::LinearInterpolation,
            seed: 0,
            duplicates: DuplicatePolicy::Collapse,
            marginals: MarginalMode::Projected,
            base: None,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::param(format!("a must be positive, got {}", self.a)));
        }
        if self.k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        if self.atoms < 2 || self.k > self.atoms - 1 {
            return Err(Error::param(format!(
                "need k <= N - 1, got k = {} with N = {}",
                self.k, self.atoms
            )));
        }
        if self.draws < 4 {
            return Err(Error::param(format!(
                "need at least 4 posterior draws for quartiles, got {}",
                self.draws
            )));
        }
        JitterPolicy::new(self.jitter_scale)?;
        if !(self.epsilon_floor.is_finite() && self.epsilon_floor > 0.0) {
            return Err(Error::param("distance floor must be positive"));
        }
        Ok(())
    }

    fn prior(&self, dim: usize) -> Result<PriorSpec> {
        let base = match &self.base {
            Some(b) => b.clone(),
            None => BaseMeasure::standard_normal(dim)?,
        };
        PriorSpec::new(self.a, base)
    }

    fn jitter(&self) -> JitterPolicy {
        match self.duplicates {
            DuplicatePolicy::Collapse => JitterPolicy::NONE,
            DuplicatePolicy::Jitter => JitterPolicy {
                scale: self.jitter_scale,
            },
        }
    }
}

/// One posterior mutual-information draw (before truncation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiDraw {
    pub value: f64,
    /// Zero k-NN distances across the joint and marginal evaluations.
    pub zero_distances: usize,
    /// Points the joint k-NN search ran over.
    pub support: usize,
}

fn check_data(data: &Dataset, k: usize) -> Result<()> {
    if data.dim() < 2 {
        return Err(Error::param(format!(
            "mutual information needs at least 2 columns, got {}",
            data.dim()
        )));
    }
    if data.len() < k + 1 {
        return Err(Error::param(format!(
            "need at least k + 1 = {} observations, got {}",
            k + 1,
            data.len()
        )));
    }
    if let Some(j) = data.constant_column() {
        return Err(Error::degenerate(format!("column {j} is constant")));
    }
    Ok(())
}

/// Weighted entropy of `dp` as given; callers collapse first if needed.
fn entropy_of(dp: &DPApproximation, config: &EstimatorConfig, what: &str) -> Result<(f64, usize)> {
    if dp.len() <= config.k {
        return Err(Error::degenerate(format!(
            "{what}: only {} distinct support points for k = {}",
            dp.len(),
            config.k
        )));
    }
    let h = weighted_knn_entropy(dp.atoms(), dp.weights(), config.k, config.epsilon_floor)
        .map_err(|e| match e {
            Error::Degenerate(m) => Error::degenerate(format!("{what}: {m}")),
            e => e,
        })?;
    Ok((h.value, h.zero_distance_count))
}

/// Data-dependent state shared by all draws of one estimate.
struct Sampler<'a> {
    data: &'a Dataset,
    config: &'a EstimatorConfig,
    prior: PriorSpec,
    reps: Vec<usize>,
    ids: Vec<usize>,
}

impl<'a> Sampler<'a> {
    fn new(data: &'a Dataset, config: &'a EstimatorConfig) -> Result<Self> {
        config.validate()?;
        check_data(data, config.k)?;
        let (reps, ids) = match config.duplicates {
            DuplicatePolicy::Collapse => distinct_rows(data),
            DuplicatePolicy::Jitter => (Vec::new(), Vec::new()),
        };
        Ok(Sampler {
            data,
            config,
            prior: config.prior(data.dim())?,
            reps,
            ids,
        })
    }

    fn posterior(&self, rng: &mut Rng) -> Result<DPApproximation> {
        let c = self.config;
        match c.duplicates {
            DuplicatePolicy::Collapse => {
                sample_collapsed_with(self.data, &self.reps, &self.ids, &self.prior, c.atoms, rng)
                    .map_err(|e| match e {
                        Error::Degenerate(m) => Error::degenerate(format!("joint: {m}")),
                        e => e,
                    })
            }
            DuplicatePolicy::Jitter => {
                sample_dp_posterior(self.data, &self.prior, c.atoms, c.jitter(), rng)
            }
        }
    }

    fn marginal(&self, dp: &DPApproximation, j: usize, what: &str) -> Result<DPApproximation> {
        let m = dp.project(j)?;
        match self.config.duplicates {
            DuplicatePolicy::Collapse => m
                .collapsed()
                .map_err(|e| Error::degenerate(format!("{what}: {e}"))),
            DuplicatePolicy::Jitter => Ok(m),
        }
    }

    fn draw(&self, rng: &mut Rng) -> Result<MiDraw> {
        let dp = self.posterior(rng)?;
        let (joint, mut zeros) = entropy_of(&dp, self.config, "joint")?;
        let mut marginal_sum = 0.0;
        for j in 0..self.data.dim() {
            let what = format!("column {j}");
            let projected = match self.config.marginals {
                MarginalMode::Projected => self.marginal(&dp, j, &what)?,
                MarginalMode::Independent => self.marginal(&self.posterior(rng)?, j, &what)?,
            };
            let (h, z) = entropy_of(&projected, self.config, &what)?;
            marginal_sum += h;
            zeros += z;
        }
        Ok(MiDraw {
            value: marginal_sum - joint,
            zero_distances: zeros,
            support: dp.len(),
        })
    }
}

/// One draw of the posterior mutual information.
pub fn mi_posterior_draw(
    data: &Dataset,
    config: &EstimatorConfig,
    rng: &mut Rng,
) -> Result<MiDraw> {
    Sampler::new(data, config)?.draw(rng)
}

pub fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// Quantile `p ∈ [0, 1]` of already sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64, method: QuartileMethod) -> f64 {
    let m = sorted.len();
    debug_assert!(m > 0);
    match method {
        QuartileMethod::LinearInterpolation => {
            let h = p * (m - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(m - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
        QuartileMethod::NearestRank => {
            let rank = (p * m as f64).ceil().max(1.0) as usize;
            sorted[rank.min(m) - 1]
        }
    }
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// (Q1 + Q3) / 2.
pub fn midhinge(values: &[f64], method: QuartileMethod) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::param("midhinge of an empty sample"));
    }
    let s = sorted_copy(values);
    Ok(0.5 * (quantile_sorted(&s, 0.25, method) + quantile_sorted(&s, 0.75, method)))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// The ℓ posterior draws for one dataset and their summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MIPosteriorSample {
    /// Positive parts of the draws.
    pub draws: Vec<f64>,
    /// Draws before truncation at zero.
    pub raw_draws: Vec<f64>,
    /// Midhinge of `draws`; the point estimate.
    pub estimate: f64,
    pub config: EstimatorConfig,
    pub zero_distance_counts: Vec<usize>,
    /// Draws whose zero-distance count exceeded 10% of the points searched.
    pub flagged_draws: usize,
}

impl MIPosteriorSample {
    pub fn mean(&self) -> f64 {
        mean(&self.draws)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&sorted_copy(&self.draws), p, self.config.quartile_method)
    }

    pub fn raw_mean(&self) -> f64 {
        mean(&self.raw_draws)
    }

    pub fn raw_midhinge(&self) -> f64 {
        midhinge(&self.raw_draws, self.config.quartile_method).expect("non-empty")
    }
}

/// Runs the full estimator: ℓ independent posterior draws, each on its own
/// random stream `(seed, draw index)`, truncated at zero and summarized by
/// the midhinge.
pub fn estimate_mi(data: &Dataset, config: &EstimatorConfig) -> Result<MIPosteriorSample> {
    let sampler = Sampler::new(data, config)?;
    let results: Vec<MiDraw> = (0..config.draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(config.seed, i as u64);
            sampler.draw(&mut rng).map_err(|e| Error::Draw {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let raw_draws: Vec<f64> = results.iter().map(|d| d.value).collect();
    let draws: Vec<f64> = raw_draws.iter().copied().map(positive_part).collect();
    let zero_distance_counts: Vec<usize> = results.iter().map(|d| d.zero_distances).collect();
    let flagged_draws = results
        .iter()
        .filter(|d| d.zero_distances * 10 > d.support * (data.dim() + 1))
        .count();
    let estimate = midhinge(&draws, config.quartile_method)?;
    Ok(MIPosteriorSample {
        draws,
        raw_draws,
        estimate,
        config: config.clone(),
        zero_distance_counts,
        flagged_draws,
    })
}

/// Plug-in baseline: Σ_j H_kNN(column j) − H_kNN(joint), every term the
/// unweighted k-NN estimate on the observed data.
pub fn knn_mi_plain(data: &Dataset, k: usize) -> Result<f64> {
    check_data(data, k)?;
    let joint = knn_entropy(data, k)?.value;
    let mut sum = 0.0;
    for j in 0..data.dim() {
        let col = Dataset::from_column(data.column(j))?;
        sum += knn_entropy(&col, k)
            .map_err(|e| Error::degenerate(format!("column {j}: {e}")))?
            .value;
    }
    Ok(sum - joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats_dist::{CovarianceMatrix, Family};
    use proptest::prelude::*;

    fn normal(n: usize, cov: CovarianceMatrix, seed: u64) -> Dataset {
        Family::normal(vec![0.0; cov.dim()], cov)
            .unwrap()
            .sample(n, &mut rng::stream(seed, 1234))
            .unwrap()
    }

    #[test]
    fn positive_part_values() {
        assert_eq!(positive_part(-0.1), 0.0);
        assert_eq!(positive_part(0.45), 0.45);
        assert_eq!(positive_part(0.0), 0.0);
    }

    #[test]
    fn midhinge_rule() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = sorted_copy(&v);
        assert_eq!(
            quantile_sorted(&s, 0.25, QuartileMethod::LinearInterpolation),
            25.75
        );
        assert_eq!(
            quantile_sorted(&s, 0.75, QuartileMethod::LinearInterpolation),
            75.25
        );
        assert_eq!(
            midhinge(&v, QuartileMethod::LinearInterpolation).unwrap(),
            50.5
        );
        assert_eq!(
            midhinge(&[2.5; 7], QuartileMethod::LinearInterpolation).unwrap(),
            2.5
        );
        assert_eq!(
            midhinge(&[2.5; 7], QuartileMethod::NearestRank).unwrap(),
            2.5
        );
        assert_eq!(
            midhinge(&[4.0], QuartileMethod::LinearInterpolation).unwrap(),
            4.0
        );
        assert!(midhinge(&[], QuartileMethod::LinearInterpolation).is_err());
        assert_eq!(midhinge(&v, QuartileMethod::NearestRank).unwrap(), 50.0);
    }

    proptest! {
        #[test]
        fn midhinge_is_order_free(mut v in prop::collection::vec(-1e6f64..1e6, 1..200), seed in 0u64..100) {
            use rand::seq::SliceRandom;
            let a = midhinge(&v, QuartileMethod::LinearInterpolation).unwrap();
            v.shuffle(&mut rng::stream(seed, 0));
            prop_assert_eq!(a, midhinge(&v, QuartileMethod::LinearInterpolation).unwrap());
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(a >= lo && a <= hi);
        }
    }

    #[test]
    fn config_validation() {
        let ok = EstimatorConfig::default();
        ok.validate().unwrap();
        for bad in [
            EstimatorConfig {
                draws: 3,
                ..ok.clone()
            },
            EstimatorConfig {
                a: 0.0,
                ..ok.clone()
            },
            EstimatorConfig { k: 0, ..ok.clone() },
            EstimatorConfig {
                k: 1000,
                ..ok.clone()
            },
            EstimatorConfig {
                jitter_scale: -1.0,
                ..ok.clone()
            },
        ] {
            assert!(
                matches!(bad.validate(), Err(Error::Parameter(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn draws_are_deterministic() {
        let data = normal(50, CovarianceMatrix::sigma(2).unwrap(), 1);
        let cfg = EstimatorConfig::default();
        let a = mi_posterior_draw(&data, &cfg, &mut rng::stream(5, 0)).unwrap();
        let b = mi_posterior_draw(&data, &cfg, &mut rng::stream(5, 0)).unwrap();
        assert_eq!(a, b);
        let cfg = EstimatorConfig {
            draws: 40,
            seed: 3,
            ..cfg
        };
        assert_eq!(
            estimate_mi(&data, &cfg).unwrap(),
            estimate_mi(&data, &cfg).unwrap()
        );
    }

    #[test]
    fn schedule_independence() {
        let data = normal(30, CovarianceMatrix::sigma(3).unwrap(), 2);
        let cfg = EstimatorConfig {
            draws: 64,
            seed: 11,
            ..Default::default()
        };
        let a = estimate_mi(&data, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| estimate_mi(&data, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sample_invariants() {
        let data = normal(40, CovarianceMatrix::identity(3).unwrap(), 3);
        let cfg = EstimatorConfig {
            draws: 100,
            seed: 1,
            ..Default::default()
        };
        let s = estimate_mi(&data, &cfg).unwrap();
        assert_eq!(s.draws.len(), 100);
        assert!(s.draws.iter().all(|&d| d >= 0.0));
        assert!(s.estimate >= 0.0);
        assert!(s.raw_draws.iter().any(|&d| d < 0.0));
        for (p, r) in s.draws.iter().zip(&s.raw_draws) {
            assert_eq!(*p, positive_part(*r));
        }
        assert_eq!(s.flagged_draws, 0);
        assert!(s.quantile(0.25) <= s.median() && s.median() <= s.quantile(0.75));
    }

    #[test]
    fn functional_dependence_gives_large_mi() {
        let x = normal(50, CovarianceMatrix::identity(1).unwrap(), 4);
        let rows: Vec<[f64; 2]> = x.rows().map(|r| [r[0], r[0]]).collect();
        let data = Dataset::from_rows(&rows).unwrap();
        for policy in [DuplicatePolicy::Collapse, DuplicatePolicy::Jitter] {
            let cfg = EstimatorConfig {
                duplicates: policy,
                ..Default::default()
            };
            let d = mi_posterior_draw(&data, &cfg, &mut rng::stream(1, 0)).unwrap();
            assert!(d.value > 1.0, "{policy:?}: {}", d.value);
        }
    }

    #[test]
    fn independent_posterior_mean_near_zero() {
        let data = normal(50, CovarianceMatrix::identity(2).unwrap(), 5);
        let cfg = EstimatorConfig::default();
        let mut r = rng::stream(6, 0);
        let m: f64 = (0..1000)
            .map(|_| mi_posterior_draw(&data, &cfg, &mut r).unwrap().value)
            .sum::<f64>()
            / 1000.0;
        assert!(m.abs() < 0.15, "{m}");
    }

    #[test]
    fn degenerate_inputs() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 1.0]).collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let err = estimate_mi(&data, &EstimatorConfig::default()).unwrap_err();
        assert!(
            matches!(err, Error::Degenerate(ref m) if m.contains("column 1")),
            "{err}"
        );
        let one = Dataset::from_column(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(matches!(
            estimate_mi(&one, &EstimatorConfig::default()),
            Err(Error::Parameter(_))
        ));
        let tiny = Dataset::from_rows(&[[1.0, 2.0], [2.0, 1.0], [3.0, 5.0]]).unwrap();
        assert!(estimate_mi(&tiny, &EstimatorConfig::default()).is_err());
        // Two distinct values in a column cannot support k = 3.
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, (i % 2) as f64]).collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let err = estimate_mi(
            &data,
            &EstimatorConfig {
                draws: 8,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(
            matches!(err.root(), Error::Degenerate(m) if m.contains("column 1")),
            "{err}"
        );
    }

    #[test]
    fn plain_baseline_scale_invariance() {
        let data = normal(300, CovarianceMatrix::sigma(3).unwrap(), 7);
        let base = knn_mi_plain(&data, 3).unwrap();
        let scaled = data
            .map(|j, v| v * [2.0, 0.3, 11.0][j] + [1.0, -4.0, 0.0][j])
            .unwrap();
        // Only column scaling, which shifts joint and marginal terms equally.
        assert!((knn_mi_plain(&scaled, 3).unwrap() - base).abs() < 0.2);
        let uniform = data.map(|_, v| v * 2.5).unwrap();
        assert!((knn_mi_plain(&uniform, 3).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn plain_baseline_consistency() {
        let mut ind = 0.0;
        let mut dep = 0.0;
        for seed in 0..50 {
            ind += knn_mi_plain(
                &normal(2000, CovarianceMatrix::identity(2).unwrap(), seed),
                3,
            )
            .unwrap();
            dep += knn_mi_plain(
                &normal(2000, CovarianceMatrix::sigma(2).unwrap(), 100 + seed),
                3,
            )
            .unwrap();
        }
        assert!((ind / 50.0).abs() < 0.05, "{}", ind / 50.0);
        assert!((dep / 50.0 - 0.066).abs() < 0.05, "{}", dep / 50.0);
    }
}
