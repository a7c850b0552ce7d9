use handover::estimators::{avg_coeffs, ls_coeffs, ls_fit, EstimatorKind, LinkEstimator, Model};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn distances(len: usize) -> Vec<f64> {
    (0..len).map(|i| 750.0 + 6.24 * i as f64).collect()
}

#[test]
fn ls_recovers_the_line_from_noiseless_data() {
    let d = distances(12);
    let p: Vec<f64> = d.iter().map(|x| 4.5 - 31.0 * x.log10()).collect();
    let fit = ls_fit(&p, &d).unwrap();
    assert!((fit.alpha_hat - 4.5).abs() < 1e-6, "{}", fit.alpha_hat);
    assert!((fit.beta_hat - 31.0).abs() < 1e-6, "{}", fit.beta_hat);
}

#[test]
fn ls_matches_a_direct_least_squares_solve() {
    let d = distances(8);
    let p = [-101.0, -99.5, -103.2, -100.1, -98.7, -104.0, -102.2, -100.9];
    // Independent solve of min |X [alpha, beta] - p| with X = [1, -log10 d].
    let x = DMatrix::from_fn(8, 2, |i, j| if j == 0 { 1.0 } else { -d[i].log10() });
    let y = DVector::from_column_slice(&p);
    let sol = (x.transpose() * &x).lu().solve(&(x.transpose() * y)).unwrap();
    let fit = ls_fit(&p, &d).unwrap();
    assert!((fit.alpha_hat - sol[0]).abs() < 1e-6 * sol[0].abs().max(1.0));
    assert!((fit.beta_hat - sol[1]).abs() < 1e-6 * sol[1].abs().max(1.0));

    // Filter form equals model form at the newest sample.
    let c = ls_coeffs(7, 8, &d).unwrap();
    let model = sol[0] - sol[1] * d[7].log10();
    assert!((c.apply(&p) - model).abs() < 1e-8);
    assert!((fit.estimate() - model).abs() < 1e-8);
}

#[test]
fn avg_filter_is_the_window_mean() {
    let p: Vec<f64> = (0..10).map(|i| -(i as f64).powi(2)).collect();
    for n in 0..10 {
        let lo = (n + 1usize).saturating_sub(4);
        let mean = p[lo..=n].iter().sum::<f64>() / (n + 1 - lo) as f64;
        assert!((avg_coeffs(n, 4).apply(&p) - mean).abs() < 1e-12);
    }
}

#[test]
fn gels_restarts_after_a_step() {
    let d = distances(40);
    let mut p: Vec<f64> = d.iter().map(|x| -35.0 * x.log10()).collect();
    for v in &mut p[30..] {
        *v += 20.0;
    }
    let mut est = LinkEstimator::new(EstimatorKind::Gels, 16, 3.0, 10.0);
    let mut reinit = Vec::new();
    for n in 0..40 {
        let e = est.estimate(n, &p, &d, 0.0);
        if e.diag.unwrap().reinit {
            reinit.push(n);
            assert_eq!(e.l, p[n]);
        }
        if n == 31 {
            // The window restarted at the step.
            assert_eq!(e.coeffs.start, 30);
        }
    }
    assert_eq!(reinit, vec![30]);
}

#[test]
fn gels_restarts_when_the_margin_exceeds_the_cap() {
    let d = distances(10);
    let p: Vec<f64> = d.iter().map(|x| -35.0 * x.log10()).collect();
    let mut est = LinkEstimator::new(EstimatorKind::Gels, 4, 3.0, 10.0);
    assert!(!est.estimate(5, &p, &d, 10.0).diag.unwrap().reinit);
    let e = est.estimate(6, &p, &d, 10.5);
    assert!(e.diag.unwrap().reinit);
    assert_eq!((e.coeffs.start, e.coeffs.model), (6, Model::Avg));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn a_constant_shift_moves_every_estimate_by_the_same_amount(
        p in prop::collection::vec(-130.0f64..-60.0, 12),
        shift in -30.0f64..30.0,
        n in 0usize..12,
        kind in prop::sample::select(vec![EstimatorKind::Avg, EstimatorKind::Ls, EstimatorKind::Els, EstimatorKind::Gels]),
    ) {
        let d = distances(12);
        let q: Vec<f64> = p.iter().map(|v| v + shift).collect();
        let a = LinkEstimator::new(kind, 6, 3.0, 10.0).estimate(n, &p, &d, 0.0);
        let b = LinkEstimator::new(kind, 6, 3.0, 10.0).estimate(n, &q, &d, 0.0);
        prop_assert!((b.l - a.l - shift).abs() < 1e-6, "{} vs {} + {}", b.l, a.l, shift);
    }
}
