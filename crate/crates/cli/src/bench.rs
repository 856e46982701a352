//! Benchmark suites: the spiral pair at `n` training points and the gaussian
//! pair at `20 n`, each scored on held-out data for all three methods.

use std::time::Instant;

use ncca_core::cca::{cca_fit, cca_project, View};
use ncca_core::dataio::{gen_gaussian_pair, gen_spiral_pair, PairedDataset};
use ncca_core::metrics::{pearson, total_correlation};
use ncca_core::ncca::{ncca_fit_timed, ncca_project_x_batch, ncca_project_y_batch, NccaConfig};
use ncca_core::plcca::{plcca_fit_timed, plcca_project_x, plcca_project_y, PlccaConfig};
use ncca_core::{FitTimings, Matrix};

use crate::error::{CliError, Stage};
use crate::BenchArgs;

pub const DEFAULT_SEED: u64 = 81;
const GAUSSIAN_RHO: [f64; 3] = [0.9, 0.5, 0.1];
const GAUSSIAN_SCALE: usize = 20;

struct Row {
    suite: &'static str,
    method: &'static str,
    dim: usize,
    total: f64,
    /// Pearson correlation of the first held-out projection pair.
    first: f64,
    timings: FitTimings,
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

fn score(suite: &'static str, method: &'static str, p1: &Matrix, p2: &Matrix, timings: FitTimings) -> Result<Row, CliError> {
    let stage = format!("{suite}/{method}: scoring");
    let dim = p1.cols();
    let total = total_correlation(p1, p2, dim, None).stage(stage.clone())?.total_correlation;
    let first = pearson(&p1.column(0), &p2.column(0)).stage(stage)?;
    Ok(Row {
        suite,
        method,
        dim,
        total,
        first,
        timings,
    })
}

struct Fitted {
    rows: Vec<Row>,
    cca_correlations: Vec<f64>,
    sigma1: f64,
    first_vector_cv: f64,
}

fn run_suite(suite: &'static str, train: &PairedDataset<f64>, test: &PairedDataset<f64>, dim: usize) -> Result<Fitted, CliError> {
    let stage = |m: &str| format!("{suite}/{m}");

    let start = Instant::now();
    let cca = cca_fit(&train.x, &train.y, dim, None).stage(stage("cca"))?;
    let cca_t = FitTimings {
        neighbor_search_secs: 0.0,
        optimization_secs: start.elapsed().as_secs_f64(),
    };
    let p1 = cca_project(&cca, View::First, &test.x).stage(stage("cca"))?;
    let p2 = cca_project(&cca, View::Second, &test.y).stage(stage("cca"))?;
    let mut rows = vec![score(suite, "cca", &p1, &p2, cca_t)?];

    let (pl, pl_t) = plcca_fit_timed(&train.x, &train.y, &PlccaConfig::new(dim)).stage(stage("plcca"))?;
    let q1 = plcca_project_x(&pl, &test.x).stage(stage("plcca"))?;
    let q2 = plcca_project_y(&pl, &test.y).stage(stage("plcca"))?;
    rows.push(score(suite, "plcca", &q1, &q2, pl_t)?);

    let (nc, nc_t) = ncca_fit_timed(&train.x, &train.y, &NccaConfig::new(dim)).stage(stage("ncca"))?;
    let f = ncca_project_x_batch(&nc, &test.x).stage(stage("ncca"))?;
    let g = ncca_project_y_batch(&nc, &test.y).stage(stage("ncca"))?;
    rows.push(score(suite, "ncca", &f, &g, nc_t)?);

    Ok(Fitted {
        rows,
        cca_correlations: cca.correlations,
        sigma1: nc.singular_values[0],
        first_vector_cv: nc.diagnostics.first_vector_cv,
    })
}

fn spiral(n: usize, seed: u64, checks: &mut Vec<Check>) -> Result<Vec<Row>, CliError> {
    let start = Instant::now();
    let all = gen_spiral_pair::<f64>(2 * n, 0.01, 1.5, seed).stage("spiral: generating")?;
    let (train, test) = (all.slice(0..n), all.slice(n..2 * n));
    let fit = run_suite("spiral", &train, &test, 1)?;
    let secs = start.elapsed().as_secs_f64();
    let [cca, plcca, ncca] = [0, 1, 2].map(|i| fit.rows[i].first);

    checks.push(check("spiral ncca held-out correlation >= 0.85", ncca >= 0.85, format!("{ncca:.4}")));
    checks.push(check("spiral cca held-out correlation <= 0.55", cca <= 0.55, format!("{cca:.4}")));
    let ordered = cca < plcca && plcca < ncca;
    checks.push(check(
        "spiral plcca between cca and ncca, or cca + 0.1",
        ordered || plcca >= cca + 0.1,
        format!("{plcca:.4}"),
    ));
    checks.push(check(
        "spiral leading singular value in [0.85, 1.15]",
        (0.85..=1.15).contains(&fit.sigma1),
        format!("{:.4}", fit.sigma1),
    ));
    checks.push(check(
        "spiral first-vector coefficient of variation <= 0.2",
        fit.first_vector_cv <= 0.2,
        format!("{:.4}", fit.first_vector_cv),
    ));
    checks.push(check("spiral suite runtime < 30 s", secs < 30.0, format!("{secs:.2}s")));
    Ok(fit.rows)
}

fn gaussian(n: usize, seed: u64, checks: &mut Vec<Check>) -> Result<Vec<Row>, CliError> {
    let n_train = GAUSSIAN_SCALE * n;
    let all = gen_gaussian_pair::<f64>(n_train + n, &GAUSSIAN_RHO, seed).stage("gaussian: generating")?;
    let (train, test) = (all.slice(0..n_train), all.slice(n_train..n_train + n));
    let fit = run_suite("gaussian", &train, &test, GAUSSIAN_RHO.len())?;

    let worst = fit
        .cca_correlations
        .iter()
        .zip(GAUSSIAN_RHO)
        .map(|(c, r)| (c - r).abs())
        .fold(0.0, f64::max);
    let estimates: Vec<String> = fit.cca_correlations.iter().map(|c| format!("{c:.4}")).collect();
    checks.push(check(
        "gaussian cca correlations within 0.03 of (0.9, 0.5, 0.1)",
        worst <= 0.03,
        estimates.join(", "),
    ));
    let cca_secs = fit.rows[0].timings.optimization_secs;
    checks.push(check("gaussian cca fit < 5 s", cca_secs < 5.0, format!("{cca_secs:.3}s")));
    Ok(fit.rows)
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    if args.n < 10 {
        return Err(CliError::usage("--n must be at least 10"));
    }
    let mut checks = Vec::new();
    let mut rows = spiral(args.n, args.seed, &mut checks)?;
    rows.extend(gaussian(args.n, args.seed, &mut checks)?);

    println!("n={} seed={}", args.n, args.seed);
    println!(
        "{:<9} {:<6} {:>2} {:>11} {:>11} {:>10} {:>10}",
        "suite", "method", "L", "total_corr", "first_corr", "search_s", "optimize_s"
    );
    for r in &rows {
        println!(
            "{:<9} {:<6} {:>2} {:>11.4} {:>11.4} {:>10.3} {:>10.3}",
            r.suite, r.method, r.dim, r.total, r.first, r.timings.neighbor_search_secs, r.timings.optimization_secs
        );
    }
    println!();
    for c in &checks {
        println!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::Acceptance(format!("{failed} of {} benchmark checks failed", checks.len())));
    }
    Ok(())
}
