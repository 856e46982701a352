mod common;

use common::*;
use ncca_core::affinity::{
    affinity_row, affinity_rows, default_bandwidth, gaussian_affinity, normalize_left_stochastic,
    normalize_right_stochastic, AffinityConfig,
};
use ncca_core::linalg::SparseMatrix;
use ncca_core::Error;
use rand::Rng;

#[test]
fn default_bandwidth_examples() {
    let twice = M::from_rows(&[vec![3.0, 4.0], vec![3.0, 4.0]]).unwrap();
    assert!((default_bandwidth(&twice, 0.4).unwrap() - 2.0).abs() < 1e-15);

    let unit = M::from_fn(10, 2, |i, j| {
        let a = i as f64;
        if j == 0 {
            a.cos()
        } else {
            a.sin()
        }
    });
    assert!((default_bandwidth(&unit, 0.5).unwrap() - 0.5).abs() < 1e-15);

    let g = normal_matrix(10000, 10, &mut rng(1));
    let s = default_bandwidth(&g, 0.45).unwrap();
    // E‖x‖ for a 10-dimensional standard Gaussian is √2 Γ(11/2) / Γ(5)
    let gamma_half = 4.5 * 3.5 * 2.5 * 1.5 * 0.5 * std::f64::consts::PI.sqrt();
    let mean_norm = 2f64.sqrt() * gamma_half / 24.0;
    assert!((mean_norm - 3.084).abs() < 1e-3);
    assert!((s - 0.45 * mean_norm).abs() <= 0.02, "σ = {s}");

    assert!(default_bandwidth(&M::zeros(3, 2), 0.45).is_err());
    assert!(default_bandwidth(&twice, 0.0).is_err());
    assert!(default_bandwidth(&twice, 1.5).is_err());
}

#[test]
fn gaussian_affinity_examples() {
    let one = gaussian_affinity(&M::zeros(1, 2), &AffinityConfig::with_sigma(1.0, 1)).unwrap();
    assert_eq!(one.to_dense(), M::identity(1));

    let sigma = 0.7;
    let pair = M::from_rows(&[vec![0.0, 0.0], vec![sigma * 2f64.sqrt(), 0.0]]).unwrap();
    let w = gaussian_affinity(&pair, &AffinityConfig::with_sigma(sigma, 2)).unwrap().to_dense();
    assert_eq!(w[(0, 0)], 1.0);
    assert_eq!(w[(1, 1)], 1.0);
    assert!((w[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
    assert!((w[(1, 0)] - 0.3679).abs() < 1e-4);

    let x = normal_matrix(40, 3, &mut rng(2));
    let w = gaussian_affinity(&x, &AffinityConfig::with_sigma(1.3, 40)).unwrap().to_dense();
    for i in 0..40 {
        for j in 0..40 {
            let direct = (-sq_dist(x.row(i), x.row(j)) / (2.0 * 1.3 * 1.3)).exp();
            assert!((w[(i, j)] - direct).abs() <= 1e-15);
        }
    }
}

#[test]
fn truncation_follows_column_neighbor_lists() {
    let x = normal_matrix(60, 2, &mut rng(3));
    let k = 5;
    let w = gaussian_affinity(&x, &AffinityConfig::with_sigma(2.0, k)).unwrap();
    let wt = w.transpose();
    for j in 0..60 {
        let mut order: Vec<(f64, usize)> = (0..60).map(|i| (sq_dist(x.row(i), x.row(j)), i)).collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expect: Vec<usize> = order[..k].iter().map(|p| p.1).collect();
        if !expect.contains(&j) {
            expect.push(j);
        }
        expect.sort_unstable();
        let (col, _) = wt.row(j);
        assert_eq!(col, &expect[..]);
        assert!((k..=k + 1).contains(&col.len()));
    }
    assert!(w.row_sums().iter().all(|&s| s > 0.0));
}

#[test]
fn mutual_truncation_is_symmetric() {
    let x = normal_matrix(60, 2, &mut rng(4));
    let mut cfg = AffinityConfig::with_sigma(1.0, 4);
    cfg.mutual = true;
    let w = gaussian_affinity(&x, &cfg).unwrap();
    assert!(w.to_dense().max_abs_diff(&w.transpose().to_dense()) == 0.0);
    cfg.mutual = false;
    assert!(gaussian_affinity(&x, &cfg).unwrap().nnz() <= w.nnz());
}

#[test]
fn gaussian_affinity_rejects_bad_config() {
    let x = normal_matrix(5, 2, &mut rng(5));
    assert!(gaussian_affinity(&x, &AffinityConfig::with_sigma(0.0, 2)).is_err());
    assert!(gaussian_affinity(&x, &AffinityConfig::with_sigma(1.0, 0)).is_err());
    assert!(gaussian_affinity(&x, &AffinityConfig::with_sigma(1.0, 6)).is_err());
}

fn random_nonnegative_with_loops(n: usize, seed: u64) -> SparseMatrix<f64> {
    let mut r = rng(seed);
    let mut triplets = Vec::new();
    for i in 0..n {
        triplets.push((i, i, r.gen_range(0.1..1.0)));
        for _ in 0..5 {
            let j = r.gen_range(0..n);
            if j != i {
                triplets.push((i, j, r.gen_range(0.0..2.0)));
            }
        }
    }
    triplets.sort_by_key(|t| (t.0, t.1));
    triplets.dedup_by_key(|t| (t.0, t.1));
    SparseMatrix::from_triplets(n, n, &triplets).unwrap()
}

#[test]
fn right_stochastic_examples() {
    let w = SparseMatrix::from_dense(&M::from_rows(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap());
    let n = normalize_right_stochastic(&w).unwrap();
    assert_eq!(n.to_dense(), M::from_rows(&[vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap());
    assert_eq!(n.indices(), w.indices());
    assert!(normalize_right_stochastic(&n).unwrap().to_dense().max_abs_diff(&n.to_dense()) <= 1e-15);

    let big = normalize_right_stochastic(&random_nonnegative_with_loops(200, 6)).unwrap();
    assert!(big.row_sums().iter().all(|s| (s - 1.0).abs() <= 1e-12));

    let zero_row = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
    assert!(matches!(normalize_right_stochastic(&zero_row), Err(Error::ZeroRow(1))));
}

#[test]
fn left_stochastic_examples() {
    let w = SparseMatrix::from_dense(&M::from_rows(&[vec![1.0, 0.0], vec![1.0, 2.0]]).unwrap());
    let n = normalize_left_stochastic(&w).unwrap();
    assert_eq!(n.to_dense(), M::from_rows(&[vec![0.5, 0.0], vec![0.5, 1.0]]).unwrap());
    assert!(normalize_left_stochastic(&n).unwrap().to_dense().max_abs_diff(&n.to_dense()) <= 1e-15);

    let big = normalize_left_stochastic(&random_nonnegative_with_loops(200, 7).transpose()).unwrap();
    assert!(big.col_sums().iter().all(|s| (s - 1.0).abs() <= 1e-12));

    let zero_col = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
    assert!(matches!(normalize_left_stochastic(&zero_col), Err(Error::ZeroColumn(1))));
}

#[test]
fn affinity_row_examples() {
    let train = normal_matrix(30, 2, &mut rng(8));
    let row = affinity_row(train.row(11), &train, &AffinityConfig::with_sigma(0.5, 1)).unwrap();
    assert_eq!(row.indices, vec![11]);
    assert_eq!(row.weights, vec![1.0]);

    let pair = M::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let row = affinity_row(&[0.0, 3.0], &pair, &AffinityConfig::with_sigma(1.0, 2)).unwrap();
    assert_eq!(row.weights, vec![0.5, 0.5]);

    let q = [0.3, -0.2];
    let sigma = 0.8;
    let row = affinity_row(&q, &train, &AffinityConfig::with_sigma(sigma, 30)).unwrap();
    let raw: Vec<f64> = (0..30).map(|j| (-sq_dist(&q, train.row(j)) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    assert_eq!(row.indices, (0..30).collect::<Vec<_>>());
    for (w, r) in row.weights.iter().zip(&raw) {
        assert!((w - r / total).abs() <= 1e-15);
    }
}

#[test]
fn affinity_row_underflow_and_batches() {
    let train = normal_matrix(10, 2, &mut rng(9));
    let far = affinity_row(&[1e4, 1e4], &train, &AffinityConfig::with_sigma(0.1, 3));
    assert!(matches!(far, Err(Error::Underflow { .. })));

    let cfg = AffinityConfig::with_sigma(1.0, 4);
    let queries = normal_matrix(5, 2, &mut rng(10));
    let rows = affinity_rows(&queries, &train, &cfg).unwrap();
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r, &affinity_row(queries.row(i), &train, &cfg).unwrap());
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(r.indices.len(), 4);
    }
    assert!(affinity_rows(&M::zeros(0, 2), &train, &cfg).unwrap().is_empty());
    assert!(affinity_rows(&queries, &train, &AffinityConfig::with_sigma(1.0, 11)).is_err());
}
