//! Monte Carlo experiments: replicate datasets from a scenario, run one or
//! more estimator configurations on each, and aggregate averages and MSEs
//! against the scenario's true mutual information.
//!
//! Replicate `r` uses seed `derive_seed(master_seed, r)`. Its dataset is
//! drawn from stream `(seed, DATA_STREAM)` and every cell runs the
//! estimator with `config.seed = seed`, so cells see the same data and the
//! same posterior random streams.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mi::{estimate_mi, knn_mi_plain, EstimatorConfig, MIPosteriorSample};
use crate::rng::{self, derive_seed};
use crate::stats_dist::{BaseMeasure, ScenarioSpec};

/// Stream index reserved for generating a replicate's dataset. Posterior
/// draws use streams `0..ℓ`.
pub const DATA_STREAM: u64 = u64::MAX;

/// A labelled estimator configuration; one column of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub config: EstimatorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub replicates: usize,
    pub cells: Vec<Cell>,
    /// When set, also run the plain k-NN baseline with this k.
    pub baseline_k: Option<usize>,
    pub master_seed: u64,
}

impl ExperimentPlan {
    pub fn single(
        scenario: ScenarioSpec,
        n: usize,
        replicates: usize,
        config: EstimatorConfig,
        master_seed: u64,
    ) -> Self {
        ExperimentPlan {
            scenario,
            n,
            replicates,
            cells: vec![Cell {
                label: "bnp".into(),
                config,
            }],
            baseline_k: None,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::param("need at least one replicate"));
        }
        if self.cells.is_empty() {
            return Err(Error::param("plan has no estimator configurations"));
        }
        for c in &self.cells {
            c.config.validate()?;
            if let Some(b) = &c.config.base {
                if b.dim() != self.scenario.dim() {
                    return Err(Error::param(format!(
                        "cell '{}': base measure dimension {} vs scenario dimension {}",
                        c.label,
                        b.dim(),
                        self.scenario.dim()
                    )));
                }
            }
            if self.n < c.config.k + 1 {
                return Err(Error::param(format!(
                    "cell '{}': n = {} is too small for k = {}",
                    c.label, self.n, c.config.k
                )));
            }
        }
        Ok(())
    }

    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        derive_seed(self.master_seed, replicate as u64)
    }

    /// The dataset replicate `replicate` is run on.
    pub fn replicate_data(&self, replicate: usize) -> Result<Dataset> {
        let mut r = rng::stream(self.replicate_seed(replicate), DATA_STREAM);
        self.scenario.sample(self.n, &mut r)
    }
}

/// Per-replicate summaries of one cell's posterior sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    /// Midhinge of the positive parts (the point estimate).
    pub estimate: f64,
    /// Mean of the positive parts.
    pub mean_pos: f64,
    /// Midhinge of the untruncated draws.
    pub midhinge_raw: f64,
    /// Mean of the untruncated draws.
    pub mean_raw: f64,
    pub flagged_draws: usize,
}

impl From<&MIPosteriorSample> for ReplicateSummary {
    fn from(s: &MIPosteriorSample) -> Self {
        ReplicateSummary {
            estimate: s.estimate,
            mean_pos: s.mean(),
            midhinge_raw: s.raw_midhinge(),
            mean_raw: s.raw_mean(),
            flagged_draws: s.flagged_draws,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub label: String,
    pub config: EstimatorConfig,
    /// Indexed by replicate.
    pub replicates: Vec<ReplicateSummary>,
}

impl CellResult {
    pub fn estimates(&self) -> Vec<f64> {
        self.replicates.iter().map(|r| r.estimate).collect()
    }

    pub fn average(&self) -> f64 {
        mean(&self.estimates())
    }

    pub fn mse(&self, truth: f64) -> f64 {
        mse(&self.estimates(), truth)
    }

    /// (average, MSE) of each posterior summary, in the order
    /// [`SummaryKind::ALL`].
    pub fn summary_table(&self, truth: f64) -> Vec<(SummaryKind, f64, f64)> {
        SummaryKind::ALL
            .iter()
            .map(|&kind| {
                let v: Vec<f64> = self.replicates.iter().map(|r| kind.pick(r)).collect();
                (kind, mean(&v), mse(&v, truth))
            })
            .collect()
    }
}

/// The four posterior summaries compared in the mean-versus-midhinge table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SummaryKind {
    MeanRaw,
    MidhingeRaw,
    MeanPositive,
    MidhingePositive,
}

impl SummaryKind {
    pub const ALL: [SummaryKind; 4] = [
        SummaryKind::MeanRaw,
        SummaryKind::MidhingeRaw,
        SummaryKind::MeanPositive,
        SummaryKind::MidhingePositive,
    ];

    pub fn pick(self, r: &ReplicateSummary) -> f64 {
        match self {
            SummaryKind::MeanRaw => r.mean_raw,
            SummaryKind::MidhingeRaw => r.midhinge_raw,
            SummaryKind::MeanPositive => r.mean_pos,
            SummaryKind::MidhingePositive => r.estimate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SummaryKind::MeanRaw => "mean(pos)",
            SummaryKind::MidhingeRaw => "midhinge(pos)",
            SummaryKind::MeanPositive => "mean(pos+)",
            SummaryKind::MidhingePositive => "midhinge(pos+)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub plan: ExperimentPlan,
    pub cells: Vec<CellResult>,
    /// Plain k-NN baseline per replicate, when requested.
    pub baseline: Option<Vec<f64>>,
    pub replicate_seeds: Vec<u64>,
    pub runtime_secs: f64,
}

impl ExperimentResult {
    pub fn true_mi(&self) -> Option<f64> {
        self.plan.scenario.true_mi
    }

    pub fn cell(&self, label: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.label == label)
    }

    pub fn baseline_average(&self) -> Option<f64> {
        self.baseline.as_deref().map(mean)
    }

    pub fn baseline_mse(&self) -> Option<f64> {
        Some(mse(self.baseline.as_deref()?, self.true_mi()?))
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean of squared deviations from `truth`.
pub fn mse(v: &[f64], truth: f64) -> f64 {
    v.iter().map(|x| (x - truth).powi(2)).sum::<f64>() / v.len() as f64
}

struct ReplicateOutcome {
    cells: Vec<ReplicateSummary>,
    baseline: Option<f64>,
}

fn run_replicate(plan: &ExperimentPlan, replicate: usize) -> Result<ReplicateOutcome> {
    let seed = plan.replicate_seed(replicate);
    let data = plan.replicate_data(replicate)?;
    let cells = plan
        .cells
        .iter()
        .map(|cell| {
            let config = EstimatorConfig {
                seed,
                ..cell.config.clone()
            };
            estimate_mi(&data, &config).map(|s| ReplicateSummary::from(&s))
        })
        .collect::<Result<_>>()?;
    let baseline = plan
        .baseline_k
        .map(|k| knn_mi_plain(&data, k))
        .transpose()?;
    Ok(ReplicateOutcome { cells, baseline })
}

/// Runs every replicate of `plan`. Output does not depend on the number of
/// worker threads. A failing replicate aborts the experiment and the error
/// names its seed.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let start = Instant::now();
    let outcomes: Vec<ReplicateOutcome> = (0..plan.replicates)
        .into_par_iter()
        .map(|r| {
            run_replicate(plan, r).map_err(|e| {
                let seed = plan.replicate_seed(r);
                let msg = format!("replicate {r} (seed {seed}): {e}");
                match e.root() {
                    Error::Degenerate(_) => Error::Degenerate(msg),
                    Error::Parameter(_) => Error::Parameter(msg),
                    _ => Error::Data(msg),
                }
            })
        })
        .collect::<Result<_>>()?;

    let cells = plan
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| CellResult {
            label: c.label.clone(),
            config: c.config.clone(),
            replicates: outcomes.iter().map(|o| o.cells[i]).collect(),
        })
        .collect();
    let baseline = plan
        .baseline_k
        .map(|_| outcomes.iter().map(|o| o.baseline.unwrap()).collect());
    Ok(ExperimentResult {
        plan: plan.clone(),
        cells,
        baseline,
        replicate_seeds: (0..plan.replicates)
            .map(|r| plan.replicate_seed(r))
            .collect(),
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// One cell per k in `k_list`, labelled `k=<k>`.
pub fn sweep_k(
    scenario: &ScenarioSpec,
    n: usize,
    k_list: &[usize],
    replicates: usize,
    config: &EstimatorConfig,
    master_seed: u64,
) -> Result<ExperimentResult> {
    if k_list.is_empty() {
        return Err(Error::param("empty k list"));
    }
    let cells = k_list
        .iter()
        .map(|&k| Cell {
            label: format!("k={k}"),
            config: EstimatorConfig {
                k,
                ..config.clone()
            },
        })
        .collect();
    run_experiment(&ExperimentPlan {
        scenario: scenario.clone(),
        n,
        replicates,
        cells,
        baseline_k: None,
        master_seed,
    })
}

/// One cell per (a, G) pair, labelled `a=<a>;G=<base>`.
pub fn sweep_prior(
    scenario: &ScenarioSpec,
    n: usize,
    a_list: &[f64],
    bases: &[BaseMeasure],
    replicates: usize,
    config: &EstimatorConfig,
    master_seed: u64,
) -> Result<ExperimentResult> {
    if a_list.is_empty() || bases.is_empty() {
        return Err(Error::param("empty a list or base-measure list"));
    }
    let cells = a_list
        .iter()
        .flat_map(|&a| {
            bases.iter().map(move |g| Cell {
                label: prior_label(a, g),
                config: EstimatorConfig {
                    a,
                    base: Some(g.clone()),
                    ..config.clone()
                },
            })
        })
        .collect();
    run_experiment(&ExperimentPlan {
        scenario: scenario.clone(),
        n,
        replicates,
        cells,
        baseline_k: None,
        master_seed,
    })
}

pub fn prior_label(a: f64, base: &BaseMeasure) -> String {
    format!("a={a};G={}", base.family())
}

/// Mean and midhinge of the raw and positive-part draws, averaged over
/// replicates, with MSEs. Rows in [`SummaryKind::ALL`] order.
pub fn compare_summaries(
    scenario: &ScenarioSpec,
    n: usize,
    replicates: usize,
    config: &EstimatorConfig,
    master_seed: u64,
) -> Result<Vec<(SummaryKind, f64, f64)>> {
    let truth = scenario
        .true_mi
        .ok_or_else(|| Error::param("scenario has no closed-form MI"))?;
    let res = run_experiment(&ExperimentPlan::single(
        scenario.clone(),
        n,
        replicates,
        config.clone(),
        master_seed,
    ))?;
    Ok(res.cells[0].summary_table(truth))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (cell, replicate).
pub fn write_raw_csv<W: Write>(res: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cell",
        "replicate",
        "seed",
        "estimate",
        "mean_pos",
        "midhinge_raw",
        "mean_raw",
        "baseline",
        "flagged_draws",
    ])?;
    for cell in &res.cells {
        for (r, s) in cell.replicates.iter().enumerate() {
            let baseline = res.baseline.as_ref().map(|b| b[r]);
            w.write_record([
                cell.label.clone(),
                r.to_string(),
                res.replicate_seeds[r].to_string(),
                s.estimate.to_string(),
                s.mean_pos.to_string(),
                s.midhinge_raw.to_string(),
                s.mean_raw.to_string(),
                opt(baseline),
                s.flagged_draws.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// One row per cell.
pub fn write_summary_csv<W: Write>(res: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cell",
        "scenario",
        "n",
        "replicates",
        "a",
        "k",
        "atoms",
        "draws",
        "true_mi",
        "average",
        "mse",
        "baseline_average",
        "baseline_mse",
    ])?;
    let truth = res.true_mi();
    for cell in &res.cells {
        let c = &cell.config;
        w.write_record([
            cell.label.clone(),
            res.plan.scenario.to_string(),
            res.plan.n.to_string(),
            res.plan.replicates.to_string(),
            c.a.to_string(),
            c.k.to_string(),
            c.atoms.to_string(),
            c.draws.to_string(),
            opt(truth),
            cell.average().to_string(),
            opt(truth.map(|t| cell.mse(t))),
            opt(res.baseline_average()),
            opt(res.baseline_mse()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub true_mi: Option<f64>,
    pub plan: ExperimentPlan,
    pub replicate_seeds: Vec<u64>,
    pub runtime_secs: f64,
}

impl Manifest {
    pub fn new(res: &ExperimentResult) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: res.plan.scenario.to_string(),
            true_mi: res.true_mi(),
            plan: res.plan.clone(),
            replicate_seeds: res.replicate_seeds.clone(),
            runtime_secs: res.runtime_secs,
        }
    }
}
