//! Acceptance suite. One test per criterion; each prints a
//! `[PASS]` / `[FAIL]` line to stderr (bypassing the harness capture so the
//! lines show up in plain `cargo test` output) and then asserts.
//!
//! Experiment cells use ℓ = 500 posterior draws, N = 1000 atoms, a = 0.05,
//! k = 3 unless a criterion says otherwise. Cells reused by several
//! criteria are computed once per process.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use bnpmi::dp::dirichlet_weights;
use bnpmi::entropy::{knn_entropy, weighted_knn_entropy, DEFAULT_DISTANCE_FLOOR};
use bnpmi::harness::{mean, mse, ExperimentResult, SummaryKind};
use bnpmi::stats_dist::{gaussian_true_mi, student_true_mi};
use bnpmi::*;

const MASTER_SEED: u64 = 20_240_611;
const DRAWS: usize = 500;

fn config() -> EstimatorConfig {
    EstimatorConfig {
        draws: DRAWS,
        ..Default::default()
    }
}

fn report(criterion: u32, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[{tag}] criterion {criterion}: {detail}");
}

fn scenario(s: &str) -> ScenarioSpec {
    s.parse().unwrap()
}

type CellKey = (String, usize, usize);

/// BNP at defaults plus the plain k = 3 baseline, cached by
/// (scenario, n, r).
fn cell(spec: &str, n: usize, r: usize) -> &'static ExperimentResult {
    static CELLS: OnceLock<Mutex<HashMap<CellKey, &'static OnceLock<ExperimentResult>>>> =
        OnceLock::new();
    let slot = {
        let mut map = CELLS.get_or_init(Default::default).lock().unwrap();
        *map.entry((spec.to_string(), n, r))
            .or_insert_with(|| Box::leak(Box::new(OnceLock::new())))
    };
    slot.get_or_init(|| {
        let mut plan = ExperimentPlan::single(scenario(spec), n, r, config(), MASTER_SEED);
        plan.baseline_k = Some(3);
        run_experiment(&plan).unwrap()
    })
}

#[test]
fn criterion_1_closed_form_oracles() {
    let g = |c: CovarianceMatrix| gaussian_true_mi(&c);
    let cases = [
        ("N2(I)", g(CovarianceMatrix::identity(2).unwrap()), 0.0),
        ("N2(Sigma)", g(CovarianceMatrix::sigma(2).unwrap()), 0.066),
        ("N4(Sigma)", g(CovarianceMatrix::sigma(4).unwrap()), 0.450),
        ("N2(A)", g(CovarianceMatrix::last_pair(2).unwrap()), 0.143),
        ("N3(A)", g(CovarianceMatrix::last_pair(3).unwrap()), 0.143),
        ("N4(A)", g(CovarianceMatrix::last_pair(4).unwrap()), 0.143),
        ("t3 d=2", student_true_mi(3.0, 2).unwrap(), 0.042),
        ("t3 d=4", student_true_mi(3.0, 4).unwrap(), 0.195),
        ("t3 d=3", student_true_mi(3.0, 3).unwrap(), 0.110),
        ("t20 d=2", student_true_mi(20.0, 2).unwrap(), 0.001),
        ("t20 d=4", student_true_mi(20.0, 4).unwrap(), 0.006),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, got, want) in cases {
        let ok = (got - want).abs() <= 0.0015;
        pass &= ok;
        parts.push(format!("{name}={got:.4}{}", if ok { "" } else { "(!)" }));
    }

    // Direct quadrature of ∫∫ f log(f / f₁f₂) for the bivariate normal with
    // variances 1, 2 and covariance 0.5.
    let (s11, s22, s12) = (1.0f64, 2.0f64, 0.5f64);
    let det = s11 * s22 - s12 * s12;
    let h = 0.02;
    let lim = 10.0;
    let steps = (2.0 * lim / h) as i64;
    let mut integral = 0.0;
    for i in 0..steps {
        let x = -lim + (i as f64 + 0.5) * h;
        for j in 0..steps {
            let y = -lim * s22.sqrt() + (j as f64 + 0.5) * h * s22.sqrt();
            let q = (s22 * x * x - 2.0 * s12 * x * y + s11 * y * y) / det;
            let f = (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt());
            if f > 0.0 {
                let fx = (-0.5 * x * x / s11).exp() / (2.0 * std::f64::consts::PI * s11).sqrt();
                let fy = (-0.5 * y * y / s22).exp() / (2.0 * std::f64::consts::PI * s22).sqrt();
                integral += f * (f / (fx * fy)).ln() * h * h * s22.sqrt();
            }
        }
    }
    let closed = g(CovarianceMatrix::sigma(2).unwrap());
    let quad_ok = (integral - closed).abs() < 1e-6;
    pass &= quad_ok;
    report(
        1,
        pass,
        &format!(
            "{} ; quadrature {integral:.7} vs closed form {closed:.7}",
            parts.join(" ")
        ),
    );
    assert!(pass);
}

struct Target {
    spec: &'static str,
    n: usize,
    mean: f64,
    mse: f64,
}

const TABLE3: [Target; 6] = [
    Target {
        spec: "normal:d=2:cov=identity",
        n: 20,
        mean: 0.084,
        mse: 0.0207,
    },
    Target {
        spec: "normal:d=4:cov=identity",
        n: 50,
        mean: 0.053,
        mse: 0.0105,
    },
    Target {
        spec: "normal:d=4:cov=sigma",
        n: 50,
        mean: 0.401,
        mse: 0.0362,
    },
    Target {
        spec: "normal:d=2:cov=a",
        n: 50,
        mean: 0.160,
        mse: 0.0116,
    },
    Target {
        spec: "student:df=3:d=4",
        n: 50,
        mean: 0.211,
        mse: 0.0378,
    },
    Target {
        spec: "maxwell:c=10:d=2",
        n: 50,
        mean: 0.060,
        mse: 0.0141,
    },
];

#[test]
fn criterion_2_reference_averages_and_mse() {
    let mut pass = true;
    for t in &TABLE3 {
        let res = cell(t.spec, t.n, 200);
        let truth = res.true_mi().unwrap();
        let avg = res.cells[0].average();
        let m = res.cells[0].mse(truth);
        let ratio = m / t.mse;
        let ok = (avg - t.mean).abs() <= 0.04 && (0.5..=2.0).contains(&ratio);
        pass &= ok;
        report(
            2,
            ok,
            &format!(
                "{} n={}: average {avg:.3} (target {:.3} ± 0.04), MSE {m:.4} (target {:.4}, ratio {ratio:.2})",
                t.spec, t.n, t.mean, t.mse
            ),
        );
    }
    assert!(pass, "some reference cells are out of tolerance");
}

#[test]
fn criterion_3_midhinge_positive_part_is_best_summary() {
    let mut pass = true;
    for spec in ["normal:d=4:cov=identity", "normal:d=4:cov=sigma"] {
        let res = cell(spec, 50, 200);
        let truth = res.true_mi().unwrap();
        let table = res.cells[0].summary_table(truth);
        let best = table
            .iter()
            .find(|(k, _, _)| *k == SummaryKind::MidhingePositive)
            .unwrap()
            .2;
        let strictly_smallest = table
            .iter()
            .filter(|(k, _, _)| *k != SummaryKind::MidhingePositive)
            .all(|&(_, _, m)| best < m);
        let non_negative = res.cells[0]
            .replicates
            .iter()
            .all(|r| r.estimate >= 0.0 && r.mean_pos >= 0.0);
        let ok = strictly_smallest && non_negative;
        pass &= ok;
        let cells: Vec<String> = table
            .iter()
            .map(|(k, avg, m)| format!("{}={avg:.3}({m:.4})", k.name()))
            .collect();
        report(3, ok, &format!("{spec} n=50: {}", cells.join(" ")));
    }
    assert!(pass);
}

#[test]
fn criterion_4_prior_robustness() {
    let s = scenario("normal:d=3:cov=a");
    let bases: Vec<BaseMeasure> = [
        "normal:d=3:cov=identity",
        "normal:d=3:cov=b:mean=3",
        "spherical:d=3:logsd=0.5",
    ]
    .iter()
    .map(|b| BaseMeasure::new(b.parse().unwrap()).unwrap())
    .collect();
    let small = sweep_prior(&s, 30, &[0.05], &bases, 100, &config(), MASTER_SEED).unwrap();
    let avgs: Vec<f64> = small.cells.iter().map(|c| c.average()).collect();
    let spread = avgs.iter().copied().fold(f64::MIN, f64::max)
        - avgs.iter().copied().fold(f64::MAX, f64::min);
    let ok_small = spread < 0.05;
    report(
        4,
        ok_small,
        &format!("a=0.05: averages {avgs:.3?}, max pairwise difference {spread:.4} (< 0.05)"),
    );

    let large = sweep_prior(&s, 30, &[10.0], &bases[1..2], 100, &config(), MASTER_SEED).unwrap();
    let avg = large.cells[0].average();
    let ok_large = avg > 1.0;
    report(
        4,
        ok_large,
        &format!("a=10, G=N3(3,B3): average {avg:.3} (> 1.0)"),
    );
    assert!(ok_small && ok_large);
}

#[test]
fn criterion_5_error_grows_with_k() {
    let mut pass = true;
    for spec in ["normal:d=4:cov=sigma", "student:df=3:d=4"] {
        let s = scenario(spec);
        let truth = s.true_mi.unwrap();
        let res = sweep_k(&s, 50, &[3, 15, 20], 100, &config(), MASTER_SEED).unwrap();
        let err: Vec<f64> = res
            .cells
            .iter()
            .map(|c| (c.average() - truth).abs())
            .collect();
        let ok = err[0] < err[1] && err[0] < err[2];
        pass &= ok;
        report(
            5,
            ok,
            &format!(
                "{spec} n=50: |avg - MI| at k=3,15,20 = {:.3}, {:.3}, {:.3}",
                err[0], err[1], err[2]
            ),
        );
    }
    assert!(pass);
}

#[test]
fn criterion_6_beats_plain_baseline_in_d4() {
    let mut pass = true;
    for spec in [
        "normal:d=4:cov=identity",
        "normal:d=4:cov=sigma",
        "normal:d=4:cov=a",
        "student:df=3:d=4",
        "student:df=20:d=4",
        "maxwell:c=10:d=4",
    ] {
        let res = cell(spec, 50, 200);
        let truth = res.true_mi().unwrap();
        let bnp = res.cells[0].mse(truth);
        let plain = res.baseline_mse().unwrap();
        let ok = bnp < plain;
        pass &= ok;
        report(
            6,
            ok,
            &format!(
                "{spec} n=50: BNP MSE {bnp:.4} (avg {:.3}) vs plain k-NN MSE {plain:.4} (avg {:.3})",
                res.cells[0].average(),
                res.baseline_average().unwrap()
            ),
        );
    }
    assert!(pass);
}

#[test]
fn criterion_7_estimator_core_properties() {
    let mut failures = Vec::new();
    let mut r = rng::stream(MASTER_SEED, 7);
    let normal4 = Family::standard_normal(4).unwrap();

    // Weighted entropy with uniform weights equals the unweighted estimator.
    for m in [10, 57, 300] {
        let pts = normal4.sample(m, &mut r).unwrap();
        let w = vec![1.0 / m as f64; m];
        let a = weighted_knn_entropy(&pts, &w, 3, DEFAULT_DISTANCE_FLOOR)
            .unwrap()
            .value;
        let b = knn_entropy(&pts, 3).unwrap().value;
        if (a - b).abs() > 1e-10 {
            failures.push(format!("uniform-weight reduction m={m}: {a} vs {b}"));
        }
    }

    // Exact k-NN against all pairwise distances.
    for (m, d) in [(200, 3), (500, 2), (120, 6)] {
        let pts = Family::standard_normal(d)
            .unwrap()
            .sample(m, &mut r)
            .unwrap();
        for k in [1, 4, 11] {
            let got = knn_distances(&pts, k).unwrap();
            for i in 0..m {
                let mut all: Vec<f64> = (0..m)
                    .filter(|&j| j != i)
                    .map(|j| {
                        pts.row(i)
                            .iter()
                            .zip(pts.row(j))
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect();
                all.sort_by(f64::total_cmp);
                if (got.distances[i] - all[k - 1]).abs() > 1e-12 {
                    failures.push(format!("kNN m={m} d={d} k={k} i={i}"));
                }
            }
        }
    }

    // Dirichlet weights at shape 0.05.
    let mut worst: f64 = 0.0;
    let mut nan = false;
    for i in 0..100_000u64 {
        let w = dirichlet_weights(100, 5.0, &mut rng::stream(i, 71)).unwrap();
        nan |= w.iter().any(|x| !x.is_finite() || *x < 0.0);
        worst = worst.max((w.iter().sum::<f64>() - 1.0).abs());
    }
    if nan || worst > 1e-12 {
        failures.push(format!(
            "Dirichlet weights: nan={nan}, worst sum error {worst:e}"
        ));
    }

    // Translation and scaling of the entropy estimate.
    let pts = normal4.sample(150, &mut r).unwrap();
    let base = knn_entropy(&pts, 3).unwrap().value;
    let shifted = pts.map(|j, v| v + 10.0 * (j as f64 + 1.0)).unwrap();
    let scaled = pts.map(|_, v| v * 2.5).unwrap();
    let t = knn_entropy(&shifted, 3).unwrap().value;
    let s = knn_entropy(&scaled, 3).unwrap().value;
    if (t - base).abs() > 1e-9 {
        failures.push(format!("translation: {t} vs {base}"));
    }
    if (s - base - 4.0 * 2.5f64.ln()).abs() > 1e-9 {
        failures.push(format!("scaling: {s} vs {base} + 4 log 2.5"));
    }

    // Midhinge rule and positive part.
    let v: Vec<f64> = (1..=100).map(f64::from).collect();
    let mh = midhinge(&v, QuartileMethod::LinearInterpolation).unwrap();
    if mh != 50.5 {
        failures.push(format!("midhinge(1..100) = {mh}"));
    }
    if positive_part(-0.1) != 0.0 || positive_part(0.45) != 0.45 || positive_part(0.0) != 0.0 {
        failures.push("positive part".into());
    }

    // Determinism and non-negative draws.
    let data = scenario("normal:d=2:cov=sigma").sample(40, &mut r).unwrap();
    let cfg = EstimatorConfig {
        draws: 64,
        seed: 99,
        ..Default::default()
    };
    let a = estimate_mi(&data, &cfg).unwrap();
    let b = estimate_mi(&data, &cfg).unwrap();
    if a != b {
        failures.push("estimate_mi not deterministic".into());
    }
    if a.draws.len() != 64 || a.draws.iter().any(|&x| x < 0.0) || a.estimate < 0.0 {
        failures.push("positive-part contract on draws".into());
    }

    let pass = failures.is_empty();
    report(
        7,
        pass,
        &if pass {
            "weight reduction, brute-force kNN, Dirichlet sums, translation/scaling, \
             midhinge, positive part, determinism"
                .to_string()
        } else {
            failures.join("; ")
        },
    );
    assert!(pass, "{failures:?}");
}

fn ccpp_path() -> Option<PathBuf> {
    let p = std::env::var_os("BNPMI_CCPP_PATH")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ccpp.csv"));
    p.is_file().then_some(p)
}

#[test]
fn criterion_8_power_plant_data() {
    let Some(path) = ccpp_path() else {
        report(
            8,
            true,
            "SKIPPED: no power-plant file (set BNPMI_CCPP_PATH or run scripts/fetch_ccpp.sh)",
        );
        return;
    };
    let columns: Vec<ColumnRef> = ["AT", "V", "AP", "RH"]
        .iter()
        .map(|c| c.parse().unwrap())
        .collect();
    let full = load_csv(
        &path,
        &ColumnSelection {
            columns: columns.clone(),
            ..Default::default()
        },
    )
    .unwrap();
    let est = estimate_mi(&full.data, &EstimatorConfig::default())
        .unwrap()
        .estimate;
    let ok_full = (est - 0.779).abs() <= 0.08;
    report(
        8,
        ok_full,
        &format!(
            "all {} rows: estimate {est:.3} (target 0.779 ± 0.08)",
            full.data.len()
        ),
    );

    let sub: Vec<f64> = (0..20)
        .map(|seed| {
            let d = load_csv(
                &path,
                &ColumnSelection {
                    columns: columns.clone(),
                    subsample: Some(50),
                    subsample_seed: seed,
                },
            )
            .unwrap();
            estimate_mi(
                &d.data,
                &EstimatorConfig {
                    seed,
                    ..Default::default()
                },
            )
            .unwrap()
            .estimate
        })
        .collect();
    let avg = mean(&sub);
    let ok_sub = (avg - 0.48).abs() <= 0.10;
    report(
        8,
        ok_sub,
        &format!("n=50 subsamples, 20 seeds: average {avg:.3} (target 0.48 ± 0.10)"),
    );
    assert!(ok_full && ok_sub);
}

#[test]
fn criterion_9_jitter_scale_insensitivity() {
    let run = |scale: f64| {
        let cfg = EstimatorConfig {
            duplicates: DuplicatePolicy::Jitter,
            jitter_scale: scale,
            ..config()
        };
        let plan =
            ExperimentPlan::single(scenario("normal:d=2:cov=sigma"), 50, 50, cfg, MASTER_SEED);
        run_experiment(&plan).unwrap().cells[0].estimates()
    };
    let lo = run(1e-3);
    let hi = run(1e-1);
    let diff = mean(&lo) - mean(&hi);
    let ok = diff.abs() < 0.05;
    let truth = scenario("normal:d=2:cov=sigma").true_mi.unwrap();
    report(
        9,
        ok,
        &format!(
            "jitter policy, N2(Sigma) n=50: average {:.3} at scale 1e-3 vs {:.3} at 1e-1 \
             (difference {diff:.3}, limit 0.05; MSE {:.3} / {:.3})",
            mean(&lo),
            mean(&hi),
            mse(&lo, truth),
            mse(&hi, truth)
        ),
    );
    assert!(ok);
}
