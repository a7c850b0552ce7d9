//! Monte Carlo box probabilities for general dimension: Genz's
//! separation-of-variables estimator on the Cholesky factor, with antithetic
//! pairs. Each sample is an unbiased estimate in [0, 1], so the standard error
//! comes straight from the sample variance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::normal::{cdf, inv_cdf};

/// Probability and standard error for `Pr[lo < X <= hi]`, `X ~ N(mu, L L^T)`,
/// where `chol` is the lower Cholesky factor.
pub fn sov_estimate(mu: &[f64], chol: &DMatrix<f64>, lo: &[f64], hi: &[f64], samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let k = mu.len();
    let a: Vec<f64> = lo.iter().zip(mu).map(|(l, m)| l - m).collect();
    let b: Vec<f64> = hi.iter().zip(mu).map(|(h, m)| h - m).collect();
    let d0 = cdf(a[0] / chol[(0, 0)]);
    let e0 = cdf(b[0] / chol[(0, 0)]);
    let mut y = vec![0.0; k];
    let mut w = vec![0.0; k];

    let one = |w: &[f64], y: &mut [f64]| -> f64 {
        let mut d = d0;
        let mut e = e0;
        let mut f = e - d;
        for i in 1..k {
            if f <= 0.0 {
                return 0.0;
            }
            y[i - 1] = inv_cdf(d + w[i - 1] * (e - d));
            let s: f64 = (0..i).map(|j| chol[(i, j)] * y[j]).sum();
            d = cdf((a[i] - s) / chol[(i, i)]);
            e = cdf((b[i] - s) / chol[(i, i)]);
            f *= e - d;
        }
        f.max(0.0)
    };

    let pairs = samples.div_ceil(2).max(1);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..pairs {
        for wi in w.iter_mut().take(k.saturating_sub(1)) {
            *wi = rng.random::<f64>();
        }
        let f1 = one(&w, &mut y);
        for wi in w.iter_mut().take(k.saturating_sub(1)) {
            *wi = 1.0 - *wi;
        }
        let f2 = one(&w, &mut y);
        let v = 0.5 * (f1 + f2);
        sum += v;
        sum_sq += v * v;
    }
    let n = pairs as f64;
    let mean = sum / n;
    let var = if pairs > 1 { ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
    (mean.clamp(0.0, 1.0), (var / n).sqrt())
}
