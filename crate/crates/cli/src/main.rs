use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bnpmi::harness::{self, ExperimentResult, Manifest};
use bnpmi::{
    BaseMeasure, ColumnRef, ColumnSelection, DuplicatePolicy, Error, EstimatorConfig, Family,
    MarginalMode, QuartileMethod, ScenarioSpec,
};

mod report;
mod settings;

use settings::Settings;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser)]
#[command(
    name = "bnpmi",
    version,
    about = "Bayesian nonparametric mutual information estimation"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BNPMI_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the mutual information among columns of a CSV file.
    Estimate(EstimateArgs),
    /// Monte Carlo experiment on a synthetic scenario.
    Simulate(ExperimentArgs),
    /// Experiment over a list of k values (`k=1..20` or `k=1,3,5`).
    SweepK(ExperimentArgs),
    /// Experiment over concentrations `a=...` and base measures `--base`.
    SweepPrior(PriorArgs),
    /// Mean and midhinge of raw and positive-part draws, with MSEs.
    Compare(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Duplicates {
    Collapse,
    Jitter,
}

#[derive(Clone, Copy, ValueEnum)]
enum Marginals {
    Projected,
    Independent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quartiles {
    Linear,
    NearestRank,
}

#[derive(Args)]
struct EstimatorArgs {
    /// DP concentration.
    #[arg(long, default_value_t = 0.05)]
    a: f64,
    /// Neighbor order.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Atoms per posterior draw (N).
    #[arg(long, default_value_t = 1000)]
    atoms: usize,
    /// Posterior draws (ℓ).
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise scale, relative to column sd, for `--duplicates jitter`.
    #[arg(long, default_value_t = 0.01)]
    jitter_scale: f64,
    #[arg(long, value_enum, default_value_t = Duplicates::Collapse)]
    duplicates: Duplicates,
    #[arg(long, value_enum, default_value_t = Marginals::Projected)]
    marginals: Marginals,
    #[arg(long, value_enum, default_value_t = Quartiles::Linear)]
    quartiles: Quartiles,
    /// Base measure G as a scenario family (default N_d(0, I)).
    #[arg(long)]
    base: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

impl EstimatorArgs {
    fn config(&self) -> Result<EstimatorConfig, Error> {
        let base = self.base.as_deref().map(parse_base).transpose()?;
        let c = EstimatorConfig {
            a: self.a,
            k: self.k,
            atoms: self.atoms,
            draws: self.draws,
            jitter_scale: self.jitter_scale,
            quartile_method: match self.quartiles {
                Quartiles::Linear => QuartileMethod::LinearInterpolation,
                Quartiles::NearestRank => QuartileMethod::NearestRank,
            },
            seed: self.seed,
            duplicates: match self.duplicates {
                Duplicates::Collapse => DuplicatePolicy::Collapse,
                Duplicates::Jitter => DuplicatePolicy::Jitter,
            },
            marginals: match self.marginals {
                Marginals::Projected => MarginalMode::Projected,
                Marginals::Independent => MarginalMode::Independent,
            },
            base,
            ..Default::default()
        };
        c.validate()?;
        Ok(c)
    }
}

fn parse_base(s: &str) -> Result<BaseMeasure, Error> {
    BaseMeasure::new(s.parse::<Family>()?)
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Comma-separated column names or 0-based indices (default: all).
    #[arg(long, value_delimiter = ',')]
    columns: Vec<ColumnRef>,
    /// Estimate on a random subsample of this many rows.
    #[arg(long)]
    subsample: Option<usize>,
    /// Seed for the subsample (default: --seed).
    #[arg(long)]
    subsample_seed: Option<u64>,
    #[command(flatten)]
    est: EstimatorArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Scenario, e.g. `normal:d=4:cov=sigma` or `student:df=3:d=4`.
    scenario: String,
    /// Settings `n=50`, `r=200`, and for sweep-k `k=1..20`.
    settings: Vec<String>,
    /// Also run the plain k-NN baseline with this k.
    #[arg(long)]
    baseline_k: Option<usize>,
    /// Directory for summary.csv, raw.csv and manifest.json.
    #[arg(long, default_value = "bnpmi-results")]
    out_dir: PathBuf,
    #[command(flatten)]
    est: EstimatorArgs,
}

#[derive(Args)]
struct PriorArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Base measures to sweep (repeatable; default N_d(0, I)).
    #[arg(long = "sweep-base")]
    bases: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot start {t} worker threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let out = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
        Command::SweepK(a) => sweep_k(a),
        Command::SweepPrior(a) => sweep_prior(a),
        Command::Compare(a) => compare(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Parameter(_) | Error::Factorization(_) => EXIT_USAGE,
        Error::Degenerate(_) => EXIT_DEGENERATE,
        Error::Data(_) | Error::Io { .. } | Error::Csv(_) | Error::Json(_) => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

fn estimate(args: EstimateArgs) -> Result<(), Error> {
    let config = args.est.config()?;
    let selection = ColumnSelection {
        columns: args.columns.clone(),
        subsample: args.subsample,
        subsample_seed: args.subsample_seed.unwrap_or(config.seed),
    };
    let loaded = bnpmi::load_csv(&args.input, &selection)?;
    if let Some(j) = loaded.data.constant_column() {
        return Err(Error::Degenerate(format!(
            "column '{}' is constant",
            loaded.column_names[j]
        )));
    }
    let sample = bnpmi::estimate_mi(&loaded.data, &config)?;
    let rep = report::EstimateReport::new(&args.input, &loaded, &selection, &sample);
    match args.est.format {
        Format::Text => print!("{}", rep.text()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&rep)?),
        Format::Csv => {
            eprint!("{}", report::config_text(&config));
            print!("{}", rep.csv());
        }
    }
    Ok(())
}

struct Prepared {
    scenario: ScenarioSpec,
    settings: Settings,
    config: EstimatorConfig,
}

fn prepare(args: &ExperimentArgs) -> Result<Prepared, Error> {
    let scenario: ScenarioSpec = args.scenario.parse()?;
    let settings = Settings::parse(&args.settings)?;
    let config = args.est.config()?;
    Ok(Prepared {
        scenario,
        settings,
        config,
    })
}

fn finish(args: &ExperimentArgs, res: &ExperimentResult) -> Result<(), Error> {
    write_outputs(&args.out_dir, res)?;
    let fmt = args.est.format;
    match fmt {
        Format::Text => print!("{}", report::experiment_text(res)),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report::experiment_json(res))?
        ),
        Format::Csv => {
            eprint!("{}", report::experiment_header(res));
            harness::write_summary_csv(res, std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn write_outputs(dir: &Path, res: &ExperimentResult) -> Result<(), Error> {
    let io = |e: std::io::Error, p: &Path| Error::Io {
        path: p.to_path_buf(),
        source: e,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    let create = |name: &str| {
        let p = dir.join(name);
        std::fs::File::create(&p).map_err(|e| io(e, &p))
    };
    harness::write_summary_csv(res, create("summary.csv")?)?;
    harness::write_raw_csv(res, create("raw.csv")?)?;
    serde_json::to_writer_pretty(create("manifest.json")?, &Manifest::new(res))?;
    Ok(())
}

fn simulate(args: ExperimentArgs) -> Result<(), Error> {
    let p = prepare(&args)?;
    let mut plan = harness::ExperimentPlan::single(
        p.scenario,
        p.settings.n,
        p.settings.replicates,
        p.config.clone(),
        p.config.seed,
    );
    plan.baseline_k = args.baseline_k;
    let res = harness::run_experiment(&plan)?;
    finish(&args, &res)
}

fn sweep_k(args: ExperimentArgs) -> Result<(), Error> {
    let p = prepare(&args)?;
    let ks = p
        .settings
        .k
        .clone()
        .ok_or_else(|| Error::Parameter("sweep-k needs k=LIST (e.g. k=1..20)".into()))?;
    let res = harness::sweep_k(
        &p.scenario,
        p.settings.n,
        &ks,
        p.settings.replicates,
        &p.config,
        p.config.seed,
    )?;
    finish(&args, &res)
}

fn sweep_prior(args: PriorArgs) -> Result<(), Error> {
    let p = prepare(&args.exp)?;
    let a_list = p.settings.a.clone().unwrap_or_else(|| vec![p.config.a]);
    let bases = if args.bases.is_empty() {
        vec![p
            .config
            .base
            .clone()
            .map_or_else(|| BaseMeasure::standard_normal(p.scenario.dim()), Ok)?]
    } else {
        args.bases
            .iter()
            .map(|b| parse_base(b))
            .collect::<Result<_, _>>()?
    };
    let res = harness::sweep_prior(
        &p.scenario,
        p.settings.n,
        &a_list,
        &bases,
        p.settings.replicates,
        &p.config,
        p.config.seed,
    )?;
    finish(&args.exp, &res)
}

fn compare(args: ExperimentArgs) -> Result<(), Error> {
    let p = prepare(&args)?;
    let truth = p
        .scenario
        .true_mi
        .ok_or_else(|| Error::Parameter("compare needs a scenario with a closed-form MI".into()))?;
    let plan = harness::ExperimentPlan::single(
        p.scenario,
        p.settings.n,
        p.settings.replicates,
        p.config.clone(),
        p.config.seed,
    );
    let res = harness::run_experiment(&plan)?;
    write_outputs(&args.out_dir, &res)?;
    let table = res.cells[0].summary_table(truth);
    match args.est.format {
        Format::Text => print!("{}", report::compare_text(&res, &table)),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report::compare_json(&res, &table))?
        ),
        Format::Csv => {
            eprint!("{}", report::experiment_header(&res));
            print!("{}", report::compare_csv(&table));
        }
    }
    Ok(())
}
