use proptest::prelude::*;

use subspace_anomaly::detect::{
    build_pca_model, build_rbad_model, build_sspbad_candidates, project, q_threshold,
    spe_per_snapshot, sspbad_select_index, DetectionReport, Method, ModelSummary,
};
use subspace_anomaly::eval::{detection_rate, score_flags};
use subspace_anomaly::io::{matrix_to_csv, parse_matrix_csv};
use subspace_anomaly::linalg::{householder_qr, sym_eig};
use subspace_anomaly::random::{gen_gaussian, EnsembleKind, SeedSpec};
use subspace_anomaly::Matrix;

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    gen_gaussian(rows, cols, SeedSpec::new(seed, 0), 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qr_reconstructs(rows in 1usize..25, extra in 0usize..10, seed in any::<u64>()) {
        let cols = rows.saturating_sub(extra).max(1);
        let a = gaussian(rows, cols, seed);
        let (q, r) = householder_qr(&a).unwrap();
        let gap = q.matmul(&r).unwrap().sub(&a).unwrap().max_abs();
        prop_assert!(gap <= 1e-12 * a.max_abs().max(1.0));
        let qtq = q.tr_matmul(&q).unwrap().sub(&Matrix::identity(q.cols())).unwrap().max_abs();
        prop_assert!(qtq <= 1e-12);
        for i in 0..r.rows() {
            prop_assert!(r[(i, i)] >= 0.0);
            for j in 0..i.min(r.cols()) {
                prop_assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn eig_reconstructs(n in 1usize..25, seed in any::<u64>()) {
        let g = gaussian(n, n, seed);
        let s = g.add(&g.transpose()).unwrap();
        let eig = sym_eig(&s).unwrap();
        let gap = eig.reconstruct().sub(&s).unwrap().max_abs();
        prop_assert!(gap <= 1e-11 * s.max_abs().max(1.0));
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn projection_splits_traffic(
        m in 3usize..20,
        t in 3usize..40,
        r_frac in 0.0f64..1.0,
        method in prop::sample::select(Method::ALL.to_vec()),
        centered in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let y = gaussian(m, t, seed);
        let r = 1 + ((m - 2) as f64 * r_frac) as usize;
        let s = SeedSpec::new(seed, 1);
        let model = match method {
            Method::Pca => build_pca_model(&y, r).unwrap(),
            Method::Rbad => build_rbad_model(&y, r, 2, s, centered).unwrap(),
            Method::Sspbad => build_sspbad_candidates(&y, r, &EnsembleKind::ALL, s, centered)
                .unwrap()
                .remove((seed % 4) as usize),
        };
        let (y_hat, y_tilde) = project(&model, &y).unwrap();
        let gap = y_hat.add(&y_tilde).unwrap().sub(&y).unwrap().max_abs();
        prop_assert!(gap <= 1e-12 * y.max_abs());
        // residual lies in the orthogonal complement of the normal subspace
        let leak = model.normal_basis().tr_matmul(&y_tilde).unwrap().max_abs();
        prop_assert!(leak <= 1e-10 * y.max_abs());
        let spe = spe_per_snapshot(&y_tilde);
        prop_assert!(spe.iter().all(|&x| x >= 0.0));
        prop_assert!(model.variances.windows(2).all(|w| w[0] >= w[1] - 1e-12 * w[0].abs()));
    }

    #[test]
    fn threshold_scales_with_spectrum(
        head in 1.0f64..10.0,
        tail in prop::collection::vec(0.01f64..1.0, 2..12),
        c in 0.1f64..100.0,
    ) {
        let mut v = vec![head + 1.0];
        let mut tail = tail;
        tail.sort_by(|a, b| b.total_cmp(a));
        v.extend(tail);
        let q = q_threshold(&v, 1, 0.005).unwrap().q_beta;
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let qc = q_threshold(&scaled, 1, 0.005).unwrap().q_beta;
        prop_assert!(((qc - c * q) / (c * q)).abs() <= 1e-9);
        // the threshold exceeds the mean residual energy
        let theta1: f64 = v[1..].iter().sum();
        prop_assert!(q > theta1);
    }

    #[test]
    fn detection_rate_bounds(
        pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60),
    ) {
        let (flags, labels): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let c = score_flags(&flags, &labels).unwrap();
        prop_assert_eq!(c.total(), flags.len());
        let dr = detection_rate(&c);
        prop_assert!((0.0..=1.0).contains(&dr));
        let perfect = score_flags(&labels, &labels).unwrap();
        prop_assert_eq!(detection_rate(&perfect), 1.0);
    }

    #[test]
    fn selection_picks_first_maximum(counts in prop::collection::vec(0usize..6, 1..8)) {
        let reports: Vec<DetectionReport> = counts
            .iter()
            .map(|&k| {
                let mut r = DetectionReport::unflagged(
                    vec![0.0; 6],
                    ModelSummary { method: Method::Sspbad, rank: 1, ensemble: None, power_exponent: None },
                );
                r.flags[..k].iter_mut().for_each(|f| *f = true);
                r
            })
            .collect();
        let best = sspbad_select_index(&reports).unwrap();
        let max = *counts.iter().max().unwrap();
        prop_assert_eq!(best, counts.iter().position(|&c| c == max).unwrap());
    }

    #[test]
    fn csv_round_trip(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>(), scale in -300i32..300) {
        let m = gaussian(rows, cols, seed).scale(10f64.powi(scale));
        let back = parse_matrix_csv(&matrix_to_csv(&m)).unwrap();
        prop_assert_eq!(back, m);
    }
}
