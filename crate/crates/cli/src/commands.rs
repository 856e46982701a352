use std::path::Path;
use std::time::Instant;

use ncca_core::affinity::{AffinityConfig, Bandwidth};
use ncca_core::cca::{cca_fit, cca_project, View};
use ncca_core::dataio::{
    gen_gaussian_pair, gen_identical_views, gen_spiral_pair, load_model, read_matrix, save_model, write_matrix,
    Format, Model,
};
use ncca_core::linalg::PcaDim;
use ncca_core::metrics::total_correlation;
use ncca_core::ncca::{ncca_fit_timed, ncca_project_x_batch, ncca_project_y_batch, NccaConfig};
use ncca_core::plcca::{plcca_fit_timed, plcca_project_x, plcca_project_y, PlccaConfig, Predictor};
use ncca_core::{FitTimings, Matrix};

use crate::error::{CliError, Stage};
use crate::manifest::{join, sidecar, Manifest};
use crate::{EvalArgs, Kind, MethodArg, ProjectArgs, Sigma, SynthArgs, TrainArgs};

pub const DEFAULT_RHO: [f64; 3] = [0.9, 0.5, 0.1];
pub const DEFAULT_NOISE: f64 = 0.01;
pub const DEFAULT_TURNS: f64 = 1.5;
pub const DEFAULT_IDENTICAL_DIM: usize = 2;
pub const DEFAULT_SIGMA_FRAC: f64 = 0.45;
pub const DEFAULT_KNN: usize = 15;

fn read(path: &Path, flag: &str) -> Result<Matrix, CliError> {
    read_matrix(path, Format::Auto).stage(format!("reading {flag} {}", path.display()))
}

fn write(path: &Path, m: &Matrix) -> Result<(), CliError> {
    write_matrix(path, m, Format::Binary).stage(format!("writing {}", path.display()))
}

fn reject(flags: &[(&str, bool)], method: &str) -> Result<(), CliError> {
    match flags.iter().find(|(_, given)| *given) {
        Some((flag, _)) => Err(CliError::usage(format!("{flag} does not apply to {method}"))),
        None => Ok(()),
    }
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let kind = match args.kind {
        Kind::Gaussian => "gaussian",
        Kind::Spiral => "spiral",
        Kind::Identical => "identical",
    };
    reject(
        &[
            ("--rho", args.rho.is_some() && args.kind != Kind::Gaussian),
            ("--noise", args.noise.is_some() && args.kind != Kind::Spiral),
            ("--turns", args.turns.is_some() && args.kind != Kind::Spiral),
            ("--dim", args.dim.is_some() && args.kind != Kind::Identical),
        ],
        kind,
    )?;
    let mut manifest = Manifest::new("synth");
    manifest.set("kind", kind);
    manifest.set("n", args.n);
    manifest.set("seed", args.seed);
    let start = Instant::now();
    let data = match args.kind {
        Kind::Gaussian => {
            let rho = args.rho.clone().unwrap_or_else(|| DEFAULT_RHO.to_vec());
            manifest.set_list("rho", &rho);
            gen_gaussian_pair::<f64>(args.n, &rho, args.seed)
        }
        Kind::Spiral => {
            let noise = args.noise.unwrap_or(DEFAULT_NOISE);
            let turns = args.turns.unwrap_or(DEFAULT_TURNS);
            manifest.set("noise", noise);
            manifest.set("turns", turns);
            gen_spiral_pair::<f64>(args.n, noise, turns, args.seed)
        }
        Kind::Identical => {
            let dim = args.dim.unwrap_or(DEFAULT_IDENTICAL_DIM);
            manifest.set("dim", dim);
            gen_identical_views::<f64>(args.n, dim, args.seed)
        }
    }
    .stage(format!("generating {kind} data"))?;
    let generate_secs = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&args.out)
        .map_err(ncca_core::Error::from)
        .stage(format!("creating {}", args.out.display()))?;
    for (name, m) in [("x.ncm", &data.x), ("y.ncm", &data.y), ("labels.ncm", &data.labels)] {
        write(&args.out.join(name), m)?;
        manifest.set(&format!("file.{}", name.trim_end_matches(".ncm")), name);
    }
    manifest.set("x.shape", format!("{}x{}", data.x.rows(), data.x.cols()));
    manifest.set("y.shape", format!("{}x{}", data.y.rows(), data.y.cols()));
    manifest.set("labels.shape", format!("{}x{}", data.labels.rows(), data.labels.cols()));
    manifest.set("timing.generate_secs", generate_secs);
    manifest.write(&args.out.join("manifest.txt"))
}

fn affinity(sigma: Option<Sigma>, frac: f64, k: usize) -> AffinityConfig<f64> {
    match sigma.unwrap_or(Sigma::Auto) {
        Sigma::Auto => AffinityConfig::with_fraction(frac, k),
        Sigma::Value(s) => AffinityConfig::with_sigma(s, k),
    }
}

fn sigma_of(cfg: &AffinityConfig<f64>) -> f64 {
    match cfg.bandwidth {
        Bandwidth::Explicit(s) => s,
        Bandwidth::FractionOfMeanNorm(f) => f,
    }
}

fn pca_name(p: Option<PcaDim>) -> String {
    match p {
        None => "none".into(),
        Some(PcaDim::Components(c)) => c.to_string(),
        Some(PcaDim::Fraction(f)) => format!("{f}"),
    }
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let x = read(&args.x, "--x")?;
    let y = read(&args.y, "--y")?;
    let frac = args.sigma_frac.unwrap_or(DEFAULT_SIGMA_FRAC);
    let knn = args.knn.unwrap_or(DEFAULT_KNN);
    let seed = args.seed.unwrap_or(0);

    let mut manifest = Manifest::new("train");
    manifest.set("x", args.x.display());
    manifest.set("y", args.y.display());
    manifest.set("x.shape", format!("{}x{}", x.rows(), x.cols()));
    manifest.set("y.shape", format!("{}x{}", y.rows(), y.cols()));
    manifest.set("dim", args.dim);
    manifest.set("seed", seed);

    let (model, timings) = match args.method {
        MethodArg::Cca => {
            reject(
                &[
                    ("--sigma-x", args.sigma_x.is_some()),
                    ("--sigma-y", args.sigma_y.is_some()),
                    ("--sigma-frac", args.sigma_frac.is_some()),
                    ("--knn", args.knn.is_some()),
                    ("--pca-x", args.pca_x.is_some()),
                    ("--pca-y", args.pca_y.is_some()),
                ],
                "cca",
            )?;
            let start = Instant::now();
            let m = cca_fit(&x, &y, args.dim, args.ridge).stage("fitting cca")?;
            let timings = FitTimings {
                neighbor_search_secs: 0.0,
                optimization_secs: start.elapsed().as_secs_f64(),
            };
            manifest.set("method", "cca");
            manifest.set("ridge_x", m.ridge_x);
            manifest.set("ridge_y", m.ridge_y);
            manifest.set_list("correlations", &m.correlations);
            (Model::Cca(m), timings)
        }
        MethodArg::Plcca => {
            reject(&[("--sigma-x", args.sigma_x.is_some())], "plcca")?;
            let mut cfg = PlccaConfig::new(args.dim);
            cfg.y_affinity = affinity(args.sigma_y, frac, knn);
            cfg.ridge = args.ridge;
            cfg.pca_x = args.pca_x;
            cfg.pca_y = args.pca_y;
            let (m, timings) = plcca_fit_timed(&x, &y, &cfg).stage("fitting plcca")?;
            manifest.set("method", "plcca");
            manifest.set("knn", knn);
            manifest.set("sigma_frac", frac);
            if let Predictor::NadarayaWatson { y_affinity, .. } = &m.predictor {
                manifest.set("y.sigma", sigma_of(y_affinity));
            }
            manifest.set("pca_x", pca_name(args.pca_x));
            manifest.set("pca_y", pca_name(args.pca_y));
            if let Some(p) = &m.pca_x {
                manifest.set("pca_x.components", p.output_dim());
            }
            if let Some(p) = &m.pca_y {
                manifest.set("pca_y.components", p.output_dim());
            }
            manifest.set("ridge", m.ridge);
            manifest.set_list("eigenvalues", &m.d);
            let corr: Vec<f64> = m.d.iter().map(|d| d.max(0.0).sqrt()).collect();
            manifest.set_list("correlations", &corr);
            (Model::Plcca(m), timings)
        }
        MethodArg::Ncca => {
            reject(&[("--ridge", args.ridge.is_some())], "ncca")?;
            let mut cfg = NccaConfig::new(args.dim);
            cfg.x_affinity = affinity(args.sigma_x, frac, knn);
            cfg.y_affinity = affinity(args.sigma_y, frac, knn);
            cfg.pca_x = args.pca_x;
            cfg.pca_y = args.pca_y;
            cfg.svd.seed = seed;
            let (m, timings) = ncca_fit_timed(&x, &y, &cfg).stage("fitting ncca")?;
            manifest.set("method", "ncca");
            manifest.set("knn", knn);
            manifest.set("sigma_frac", frac);
            manifest.set("x.sigma", sigma_of(&m.x_affinity));
            manifest.set("y.sigma", sigma_of(&m.y_affinity));
            manifest.set("pca_x", pca_name(args.pca_x));
            manifest.set("pca_y", pca_name(args.pca_y));
            if let Some(p) = &m.pca_x {
                manifest.set("pca_x.components", p.output_dim());
            }
            if let Some(p) = &m.pca_y {
                manifest.set("pca_y.components", p.output_dim());
            }
            manifest.set("svd.oversample", cfg.svd.oversample);
            manifest.set("svd.power_iters", cfg.svd.power_iters);
            manifest.set("svd.tol", cfg.svd.tol);
            manifest.set("ncca.sigma1", m.singular_values[0]);
            manifest.set("ncca.sigma1_deviation", m.diagnostics.sigma1_deviation);
            manifest.set("ncca.first_vector_cv", m.diagnostics.first_vector_cv);
            manifest.set_list("correlations", m.correlations());
            (Model::Ncca(m), timings)
        }
    };
    manifest.set("timing.neighbor_search_secs", timings.neighbor_search_secs);
    manifest.set("timing.optimization_secs", timings.optimization_secs);

    save_model(&args.model, &model).stage(format!("writing model {}", args.model.display()))?;
    manifest.set("model", args.model.display());
    manifest.write(&sidecar(&args.model))
}

pub fn project(args: &ProjectArgs) -> Result<(), CliError> {
    let model: Model<f64> = load_model(&args.model).stage(format!("loading model {}", args.model.display()))?;
    let input = read(&args.input, "--in")?;
    let start = Instant::now();
    let first = args.view == 1;
    let out = match &model {
        Model::Cca(m) => cca_project(m, if first { View::First } else { View::Second }, &input),
        Model::Plcca(m) if first => plcca_project_x(m, &input),
        Model::Plcca(m) => plcca_project_y(m, &input),
        Model::Ncca(m) if first => ncca_project_x_batch(m, &input),
        Model::Ncca(m) => ncca_project_y_batch(m, &input),
    }
    .stage(format!("projecting view {}", args.view))?;
    let project_secs = start.elapsed().as_secs_f64();
    write(&args.out, &out)?;

    let mut manifest = Manifest::new("project");
    manifest.set("model", args.model.display());
    manifest.set("method", model.method().name());
    manifest.set("view", args.view);
    manifest.set("in", args.input.display());
    manifest.set("out", args.out.display());
    manifest.set("rows", out.rows());
    manifest.set("dim", out.cols());
    manifest.set("timing.project_secs", project_secs);
    manifest.write(&sidecar(&args.out))
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let p1 = read(&args.proj1, "--proj1")?;
    let p2 = read(&args.proj2, "--proj2")?;
    let report = total_correlation(&p1, &p2, args.dim, args.ridge).stage("evaluating")?;
    let mut manifest = Manifest::new("eval");
    manifest.set("proj1", args.proj1.display());
    manifest.set("proj2", args.proj2.display());
    manifest.set("ridge", args.ridge.map_or("auto".to_string(), |r| r.to_string()));
    manifest.set("dim", report.dim);
    manifest.set("n_test", report.n_test);
    manifest.set("total_correlation", report.total_correlation);
    manifest.set("per_component", join(&report.per_component));
    print!("{}", manifest.render());
    Ok(())
}
