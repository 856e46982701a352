mod common;

use common::*;
use ncca_core::affinity::AffinityConfig;
use ncca_core::dataio::gen_spiral_pair;
use ncca_core::linalg::PcaDim;
use ncca_core::ncca::{
    build_score_matrix, ncca_fit, ncca_project_train, ncca_project_x, ncca_project_x_batch, ncca_project_y,
    ncca_project_y_batch, NccaConfig,
};
use ncca_core::Error;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn single_point_score_matrix() {
    let x = M::from_rows(&[vec![1.0, 2.0]]).unwrap();
    let y = M::from_rows(&[vec![-3.0]]).unwrap();
    let cfg = AffinityConfig::with_sigma(1.0, 1);
    let s = build_score_matrix(&x, &y, &cfg, &cfg).unwrap();
    assert_eq!(s.s.to_dense(), M::identity(1));
}

#[test]
fn relabeling_permutes_the_score_matrix() {
    let mut r = rng(1);
    let x = normal_matrix(80, 2, &mut r);
    let y = normal_matrix(80, 3, &mut r);
    let mut perm: Vec<usize> = (0..80).collect();
    for i in (1..80).rev() {
        perm.swap(i, r.gen_range(0..=i));
    }
    let (cx, cy) = (AffinityConfig::with_sigma(0.8, 10), AffinityConfig::with_sigma(1.1, 10));
    let s = build_score_matrix(&x, &y, &cx, &cy).unwrap().s.to_dense();
    let sp = build_score_matrix(&x.select_rows(&perm), &y.select_rows(&perm), &cx, &cy)
        .unwrap()
        .s
        .to_dense();
    for a in 0..80 {
        for b in 0..80 {
            assert!((sp[(a, b)] - s[(perm[a], perm[b])]).abs() <= 1e-14);
        }
    }
    assert!(s.as_slice().iter().all(|&v| v >= 0.0));
}

fn clusters(n: usize, seed: u64) -> M {
    let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
    let mut r = rng(seed);
    M::from_fn(n, 2, |i, j| centers[i % 3][j] + 0.5 * r.sample::<f64, _>(StandardNormal))
}

#[test]
fn identical_clustered_views_pair_up() {
    let x = clusters(300, 2);
    // bandwidth well below the within-cluster spread
    let cfg = NccaConfig::new(2).with_affinity(AffinityConfig::with_sigma(0.1, 15));
    let m = ncca_fit(&x, &x, &cfg).unwrap();
    let (f, g) = ncca_project_train(&m);
    for j in 0..2 {
        let c = sample_corr(&f.column(j), &g.column(j));
        assert!(c >= 0.99, "component {j}: {c}");
    }
}

#[test]
fn training_projections_are_orthonormal_and_consistent() {
    let d = gen_spiral_pair::<f64>(1000, 0.01, 1.5, 3).unwrap();
    let m = ncca_fit(&d.x, &d.y, &NccaConfig::new(3)).unwrap();
    assert!(identity_error(&second_moment(&m.f)) <= 1e-6);
    assert!(identity_error(&second_moment(&m.g)) <= 1e-6);
    assert!(m.singular_values.windows(2).all(|w| w[0] >= w[1]));

    let (fo, go) = ncca_project_train(&m);
    assert_eq!(fo.shape(), (1000, 3));
    assert_eq!(go.shape(), (1000, 3));

    let s = build_score_matrix(&d.x, &d.y, &m.x_affinity, &m.y_affinity).unwrap().s;
    let sg = s.mul_dense(&m.g).unwrap();
    let n = 1000.0;
    let sigma1 = m.singular_values[0];
    for i in 0..m.singular_values.len() {
        let proj: f64 = (0..1000).map(|r| m.f[(r, i)] * sg[(r, i)]).sum::<f64>() / n;
        assert!((proj - m.singular_values[i]).abs() <= 1e-8);
        let resid: f64 = (0..1000)
            .map(|r| (sg[(r, i)] - m.singular_values[i] * m.f[(r, i)]).powi(2))
            .sum::<f64>()
            .sqrt()
            / n.sqrt();
        assert!(resid <= 1e-6 * sigma1);
    }
}

#[test]
fn benchmark_component_is_centered() {
    let d = gen_spiral_pair::<f64>(1000, 0.01, 1.5, 81).unwrap();
    let m = ncca_fit(&d.x, &d.y, &NccaConfig::new(1)).unwrap();
    let (f, g) = ncca_project_train(&m);
    for col in [f.column(0), g.column(0)] {
        let mean = col.iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() <= 0.05, "mean {mean}");
    }
}

#[test]
fn nystrom_reproduces_training_rows() {
    let n = 150;
    let d = gen_spiral_pair::<f64>(n, 0.05, 1.5, 4).unwrap();
    let cfg = NccaConfig::new(2).with_affinity(AffinityConfig::with_fraction(0.3, n));
    let m = ncca_fit(&d.x, &d.y, &cfg).unwrap();
    let (f, g) = ncca_project_train(&m);
    assert!(ncca_project_x_batch(&m, &d.x).unwrap().max_abs_diff(&f) <= 1e-6);
    assert!(ncca_project_y_batch(&m, &d.y).unwrap().max_abs_diff(&g) <= 1e-6);
    let row = ncca_project_x(&m, d.x.row(7)).unwrap();
    assert!(row.iter().zip(f.row(7)).all(|(a, b)| (a - b).abs() <= 1e-6));
    let row = ncca_project_y(&m, d.y.row(9)).unwrap();
    assert!(row.iter().zip(g.row(9)).all(|(a, b)| (a - b).abs() <= 1e-6));
}

#[test]
fn duplicate_training_points_project_identically() {
    let d = gen_spiral_pair::<f64>(200, 0.02, 1.5, 5).unwrap();
    let mut idx: Vec<usize> = (0..200).collect();
    idx[101] = 100;
    let (x, y) = (d.x.select_rows(&idx), d.y.select_rows(&idx));
    let m = ncca_fit(&x, &y, &NccaConfig::new(2)).unwrap();
    assert_eq!(ncca_project_x(&m, x.row(100)).unwrap(), ncca_project_x(&m, x.row(101)).unwrap());
    assert_eq!(ncca_project_y(&m, y.row(100)).unwrap(), ncca_project_y(&m, y.row(101)).unwrap());
}

#[test]
fn projection_errors() {
    let d = gen_spiral_pair::<f64>(100, 0.02, 1.5, 6).unwrap();
    let cfg = NccaConfig::new(1).with_affinity(AffinityConfig::with_sigma(0.05, 5));
    let m = ncca_fit(&d.x, &d.y, &cfg).unwrap();
    assert!(matches!(ncca_project_x(&m, &[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch(_))));
    assert!(matches!(ncca_project_x(&m, &[1e3, 1e3]), Err(Error::Underflow { .. })));
    assert_eq!(ncca_project_x_batch(&m, &M::zeros(0, 2)).unwrap().shape(), (0, 1));

    let mut one_way = cfg.clone();
    one_way.bidirectional = false;
    let m = ncca_fit(&d.x, &d.y, &one_way).unwrap();
    assert!(!m.is_bidirectional());
    assert!(ncca_project_y(&m, d.y.row(0)).is_err());
    assert!(ncca_project_x(&m, d.x.row(0)).is_ok());
}

#[test]
fn fit_errors() {
    let d = gen_spiral_pair::<f64>(4, 0.02, 1.5, 7).unwrap();
    let cfg = NccaConfig::new(3).with_affinity(AffinityConfig::with_sigma(1.0, 2));
    assert!(ncca_fit(&d.x, &d.y, &cfg).is_err());
    assert!(ncca_fit(&d.x, &d.y.select_rows(&[0, 1]), &NccaConfig::new(1)).is_err());
    assert!(ncca_fit(&d.x, &d.y, &NccaConfig::new(0)).is_err());
}

#[test]
fn retruncation_and_pca() {
    let d = gen_spiral_pair::<f64>(400, 0.02, 1.5, 8).unwrap();
    let mut cfg = NccaConfig::new(2);
    cfg.retruncate = Some(20);
    cfg.pca_y = Some(PcaDim::Components(1));
    let m = ncca_fit(&d.x, &d.y, &cfg).unwrap();
    assert!(m.pca_y.is_some() && m.pca_x.is_none());
    assert_eq!(m.input_dims(), (2, Some(2)));
    assert!(identity_error(&second_moment(&m.f)) <= 1e-6);
    assert_eq!(ncca_project_y_batch(&m, &d.y).unwrap().shape(), (400, 2));
}

#[test]
fn fits_are_independent_of_thread_count() {
    let d = gen_spiral_pair::<f64>(500, 0.02, 1.5, 9).unwrap();
    let fit = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ncca_fit(&d.x, &d.y, &NccaConfig::new(2)).unwrap())
    };
    let a = fit(1);
    assert_eq!(a, fit(3));
    assert_eq!(a, ncca_fit(&d.x, &d.y, &NccaConfig::new(2)).unwrap());
}
