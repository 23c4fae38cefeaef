use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_core::debias::{build_design, even_partition, log_partition, nnls, wls_fit, Dense};
use spectral_core::estimators::{EstimateMeta, EstimatorKind, SpectralEstimate};
use spectral_core::signal::{make_taper, TaperKind};

fn sse(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a * x - b).norm_squared()
}

/// Minimum of ‖Ax − b‖² over x ≥ 0 by trying every support set.
fn enumerate_nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let k = a.ncols();
    let mut best = (sse(a, &DVector::zeros(k), b), DVector::zeros(k));
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
        let sub = a.select_columns(&cols);
        let sol = sub.svd(true, true).solve(b, 1e-14).unwrap();
        if sol.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut x = DVector::zeros(k);
        for (&j, &v) in cols.iter().zip(sol.iter()) {
            x[j] = v;
        }
        let s = sse(a, &x, b);
        if s < best.0 {
            best = (s, x);
        }
    }
    best.1
}

fn random_system(rng: &mut ChaCha8Rng) -> (Dense<f64>, DMatrix<f64>, DVector<f64>) {
    let cols = rng.random_range(1..=6);
    let rows = rng.random_range(cols..=12);
    let m = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let b = DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0));
    (Dense::from_fn(rows, cols, |r, c| m[(r, c)]), m, b)
}

#[test]
fn nnls_matches_support_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..100 {
        let (dense, m, b) = random_system(&mut rng);
        let x = nnls(&dense, b.as_slice(), None).unwrap();
        let oracle = enumerate_nnls(&m, &b);
        for (got, want) in x.iter().zip(oracle.iter()) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        assert!(x.iter().all(|&v| v >= 0.0));
        let unconstrained = m.clone().svd(true, true).solve(&b, 1e-14).unwrap();
        let xv = DVector::from_vec(x);
        assert!(sse(&m, &xv, &b) >= sse(&m, &unconstrained, &b) - 1e-12);
    }
}

fn welch_from_design(
    values: Vec<f64>,
    rows: spectral_core::signal::FrequencyGrid<f64>,
    len: usize,
) -> SpectralEstimate<f64> {
    SpectralEstimate::new(
        rows,
        values,
        EstimateMeta {
            estimator: EstimatorKind::Welch,
            segment_len: len,
            segments: 1,
            overlap: 0.0,
            taper: TaperKind::Boxcar,
            bases: None,
            nonneg: None,
        },
    )
    .unwrap()
}

#[test]
fn weighted_fit_recovers_exact_coefficients() {
    let len = 64;
    let taper = make_taper(TaperKind::Hamming, len).unwrap();
    let part = even_partition(12, len, 1.0).unwrap();
    let design = build_design(&part, &taper, len, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth: Vec<f64> = (0..12).map(|_| rng.random_range(0.1..10.0)).collect();
    let values: Vec<f64> = (0..design.nrows())
        .map(|r| design.row(r).iter().zip(&truth).map(|(a, b)| a * b).sum())
        .collect();
    let est = welch_from_design(values, design.rows().clone(), len);
    for nonneg in [false, true] {
        let fit = wls_fit(&est, &design, nonneg).unwrap();
        for (a, t) in fit.coeffs().iter().zip(&truth) {
            assert!((a - t).abs() < 1e-8 * t, "{a} vs {t}");
        }
        assert!(fit.residual() >= 0.0);
        assert!(!fit.is_ill_conditioned());
    }
}

#[test]
fn constrained_fit_costs_at_least_unconstrained() {
    let len = 32;
    let taper = make_taper(TaperKind::Boxcar, len).unwrap();
    let part = even_partition(8, len, 1.0).unwrap();
    let design = build_design(&part, &taper, len, 1.0).unwrap();
    // Alternating coefficients push the unconstrained optimum negative.
    let coeffs = [5.0, -1.0, 5.0, -1.0, 5.0, -1.0, 5.0, 0.5];
    let values: Vec<f64> = (0..design.nrows())
        .map(|r| {
            let v: f64 = design.row(r).iter().zip(&coeffs).map(|(a, b)| a * b).sum();
            v.max(0.01)
        })
        .collect();
    let est = welch_from_design(values, design.rows().clone(), len);
    let free = wls_fit(&est, &design, false).unwrap();
    let constrained = wls_fit(&est, &design, true).unwrap();
    assert!(free.coeffs().iter().any(|&a| a < 0.0));
    assert!(constrained.coeffs().iter().all(|&a| a >= 0.0));
    assert!(constrained.residual() >= free.residual());
}

#[test]
fn underdetermined_fit_succeeds_only_with_nonneg() {
    let len = 64;
    let taper = make_taper(TaperKind::Boxcar, len).unwrap();
    let part = even_partition(32, len, 1.0).unwrap();
    let design = build_design(&part, &taper, len, 1.0).unwrap();
    assert!(design.nrows() < design.ncols());
    let est = welch_from_design(vec![1.0; design.nrows()], design.rows().clone(), len);
    match wls_fit(&est, &design, false) {
        Err(spectral_core::Error::IllConditioned {
            smallest_singular_value,
            ..
        }) => {
            assert_eq!(smallest_singular_value, 0.0)
        }
        other => panic!("expected an ill-conditioned error, got {other:?}"),
    }
    let fit = wls_fit(&est, &design, true).unwrap();
    assert!(fit.coeffs().iter().all(|&a| a >= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nonneg_fit_is_feasible_and_no_better_than_free(seed in any::<u64>(), bases in 2usize..10) {
        let len = 48;
        let taper = make_taper(TaperKind::Hann, len).unwrap();
        let part = log_partition(bases, 0.2, 3.0).unwrap();
        let design = build_design(&part, &taper, len, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..design.nrows()).map(|_| rng.random_range(0.01..5.0)).collect();
        let est = welch_from_design(values, design.rows().clone(), len);
        let constrained = wls_fit(&est, &design, true).unwrap();
        prop_assert!(constrained.coeffs().iter().all(|&a| a >= 0.0));
        prop_assert!(constrained.residual() >= 0.0);
        if let Ok(free) = wls_fit(&est, &design, false) {
            prop_assert!(constrained.residual() >= free.residual() - 1e-12);
        }
    }
}
