//! Text, JSON and CSV renderings of estimates and experiment results.
//! Text rounds to three decimals (MSEs to four); JSON keeps full precision.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use bnpmi::harness::{ExperimentResult, SummaryKind};
use bnpmi::{ColumnSelection, EstimatorConfig, LoadedData, MIPosteriorSample};

pub fn config_text(c: &EstimatorConfig) -> String {
    let base = c
        .base
        .as_ref()
        .map_or_else(|| "standard normal".to_string(), |b| b.family().to_string());
    format!(
        "effective configuration:\n  a = {}\n  k = {}\n  atoms (N) = {}\n  draws (l) = {}\n  seed = {}\n  \
         duplicates = {:?}\n  jitter scale = {}\n  marginals = {:?}\n  quartiles = {:?}\n  base measure = {base}\n",
        c.a,
        c.k,
        c.atoms,
        c.draws,
        c.seed,
        c.duplicates,
        c.jitter_scale,
        c.marginals,
        c.quartile_method
    )
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub input: String,
    pub columns: Vec<String>,
    pub total_rows: usize,
    pub rejected_rows: usize,
    pub subsample: Option<usize>,
    pub subsample_seed: u64,
    pub n: usize,
    pub d: usize,
    pub config: EstimatorConfig,
    pub estimate: f64,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub raw_mean: f64,
    pub raw_midhinge: f64,
    pub flagged_draws: usize,
    pub draws: Vec<f64>,
}

impl EstimateReport {
    pub fn new(
        input: &Path,
        loaded: &LoadedData,
        sel: &ColumnSelection,
        s: &MIPosteriorSample,
    ) -> Self {
        EstimateReport {
            input: input.display().to_string(),
            columns: loaded.column_names.clone(),
            total_rows: loaded.total_rows,
            rejected_rows: loaded.rejected_rows,
            subsample: sel.subsample,
            subsample_seed: sel.subsample_seed,
            n: loaded.data.len(),
            d: loaded.data.dim(),
            config: s.config.clone(),
            estimate: s.estimate,
            mean: s.mean(),
            median: s.median(),
            q1: s.quantile(0.25),
            q3: s.quantile(0.75),
            raw_mean: s.raw_mean(),
            raw_midhinge: s.raw_midhinge(),
            flagged_draws: s.flagged_draws,
            draws: s.draws.clone(),
        }
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "input: {}", self.input);
        let _ = writeln!(out, "columns: {}", self.columns.join(", "));
        let _ = write!(
            out,
            "rows: {} used of {} ({} rejected)",
            self.n, self.total_rows, self.rejected_rows
        );
        if let Some(m) = self.subsample {
            let _ = write!(out, ", subsample {m} with seed {}", self.subsample_seed);
        }
        out.push('\n');
        out.push_str(&config_text(&self.config));
        let _ = writeln!(out, "mutual information (midhinge): {:.3}", self.estimate);
        let _ = writeln!(
            out,
            "posterior draws: mean {:.3}, median {:.3}, Q1 {:.3}, Q3 {:.3}",
            self.mean, self.median, self.q1, self.q3
        );
        let _ = writeln!(
            out,
            "untruncated draws: mean {:.3}, midhinge {:.3}",
            self.raw_mean, self.raw_midhinge
        );
        if self.flagged_draws > 0 {
            let _ = writeln!(
                out,
                "warning: {} draws had many zero neighbor distances",
                self.flagged_draws
            );
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut out =
            String::from("n,d,estimate,mean,median,q1,q3,raw_mean,raw_midhinge,flagged_draws\n");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.estimate,
            self.mean,
            self.median,
            self.q1,
            self.q3,
            self.raw_mean,
            self.raw_midhinge,
            self.flagged_draws
        );
        out
    }
}

pub fn experiment_header(res: &ExperimentResult) -> String {
    let p = &res.plan;
    let mut out = format!(
        "scenario: {}\ntrue MI: {}\nn = {}, replicates = {}, master seed = {}\n",
        p.scenario,
        res.true_mi()
            .map_or("unknown".into(), |t| format!("{t:.3}")),
        p.n,
        p.replicates,
        p.master_seed
    );
    if let Some(c) = p.cells.first() {
        out.push_str(&config_text(&c.config));
    }
    out
}

pub fn experiment_text(res: &ExperimentResult) -> String {
    let mut out = experiment_header(res);
    let truth = res.true_mi();
    let _ = writeln!(out, "{:<32} {:>8} {:>8}", "cell", "average", "MSE");
    for c in &res.cells {
        let mse = truth.map_or("-".into(), |t| format!("{:.4}", c.mse(t)));
        let _ = writeln!(out, "{:<32} {:>8.3} {:>8}", c.label, c.average(), mse);
    }
    if let Some(avg) = res.baseline_average() {
        let mse = res.baseline_mse().map_or("-".into(), |m| format!("{m:.4}"));
        let label = format!("plain k-NN (k={})", res.plan.baseline_k.unwrap_or(0));
        let _ = writeln!(out, "{label:<32} {avg:>8.3} {mse:>8}");
    }
    let _ = writeln!(out, "runtime: {:.1} s", res.runtime_secs);
    out
}

#[derive(Serialize)]
pub struct CellJson {
    pub label: String,
    pub config: EstimatorConfig,
    pub average: f64,
    pub mse: Option<f64>,
    pub estimates: Vec<f64>,
}

#[derive(Serialize)]
pub struct ExperimentJson {
    pub scenario: String,
    pub true_mi: Option<f64>,
    pub n: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub cells: Vec<CellJson>,
    pub baseline_average: Option<f64>,
    pub baseline_mse: Option<f64>,
    pub replicate_seeds: Vec<u64>,
}

pub fn experiment_json(res: &ExperimentResult) -> ExperimentJson {
    let truth = res.true_mi();
    ExperimentJson {
        scenario: res.plan.scenario.to_string(),
        true_mi: truth,
        n: res.plan.n,
        replicates: res.plan.replicates,
        master_seed: res.plan.master_seed,
        cells: res
            .cells
            .iter()
            .map(|c| CellJson {
                label: c.label.clone(),
                config: c.config.clone(),
                average: c.average(),
                mse: truth.map(|t| c.mse(t)),
                estimates: c.estimates(),
            })
            .collect(),
        baseline_average: res.baseline_average(),
        baseline_mse: res.baseline_mse(),
        replicate_seeds: res.replicate_seeds.clone(),
    }
}

pub fn compare_text(res: &ExperimentResult, table: &[(SummaryKind, f64, f64)]) -> String {
    let mut out = experiment_header(res);
    let _ = writeln!(out, "{:<16} {:>8} {:>8}", "summary", "average", "MSE");
    for (k, avg, mse) in table {
        let _ = writeln!(out, "{:<16} {avg:>8.3} {mse:>8.4}", k.name());
    }
    out
}

#[derive(Serialize)]
pub struct CompareRow {
    pub summary: &'static str,
    pub average: f64,
    pub mse: f64,
}

#[derive(Serialize)]
pub struct CompareJson {
    pub scenario: String,
    pub true_mi: Option<f64>,
    pub n: usize,
    pub replicates: usize,
    pub config: EstimatorConfig,
    pub rows: Vec<CompareRow>,
}

pub fn compare_json(res: &ExperimentResult, table: &[(SummaryKind, f64, f64)]) -> CompareJson {
    CompareJson {
        scenario: res.plan.scenario.to_string(),
        true_mi: res.true_mi(),
        n: res.plan.n,
        replicates: res.plan.replicates,
        config: res.cells[0].config.clone(),
        rows: table
            .iter()
            .map(|&(k, average, mse)| CompareRow {
                summary: k.name(),
                average,
                mse,
            })
            .collect(),
    }
}

pub fn compare_csv(table: &[(SummaryKind, f64, f64)]) -> String {
    let mut out = String::from("summary,average,mse\n");
    for (k, avg, mse) in table {
        let _ = writeln!(out, "{},{avg},{mse}", k.name());
    }
    out
}
