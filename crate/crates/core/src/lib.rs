//! Bayesian nonparametric estimation of mutual information.
//!
//! The estimator draws finite approximations of the Dirichlet-process
//! posterior given the data, evaluates a weighted k-nearest-neighbor
//! entropy of each draw's joint and marginal measures, and summarizes the
//! positive parts of the resulting mutual-information draws by their
//! midhinge.
//!
//! ```no_run
//! use bnpmi::{estimate_mi, EstimatorConfig, Family, rng};
//!
//! let data = Family::standard_normal(2)?.sample(50, &mut rng::stream(1, 0))?;
//! let out = estimate_mi(&data, &EstimatorConfig::default())?;
//! println!("MI ≈ {:.3} nats", out.estimate);
//! # Ok::<(), bnpmi::Error>(())
//! ```

pub mod data;
pub mod dp;
pub mod entropy;
mod error;
pub mod harness;
pub mod knn;
pub mod mi;
pub mod rng;
pub mod special;
pub mod stats_dist;

pub use data::{load_csv, ColumnRef, ColumnSelection, Dataset, LoadedData, PointSet};
pub use dp::{
    sample_collapsed_dp_posterior, sample_dp_posterior, DPApproximation, JitterPolicy, PriorSpec,
};
pub use entropy::{knn_entropy, weighted_posterior_entropy, EntropyEstimate};
pub use error::{Error, Result};
pub use harness::{
    compare_summaries, run_experiment, sweep_k, sweep_prior, Cell, ExperimentPlan,
    ExperimentResult, Manifest, SummaryKind,
};
pub use knn::{knn_distances, knn_distances_1d, KnnResult};
pub use mi::{
    estimate_mi, knn_mi_plain, mi_posterior_draw, midhinge, positive_part, DuplicatePolicy,
    EstimatorConfig, MIPosteriorSample, MarginalMode, QuartileMethod,
};
pub use stats_dist::{BaseMeasure, CovarianceMatrix, Family, ScenarioSpec};
