//! Windowed signal-strength estimators. Every estimate is a linear filter
//! `l_s(n) = sum_{i = n_b..n} p_s(i) G_s(n, i)`, and the coefficients are
//! exposed so the analytic covariance code can reuse them.
//!
//! Time indices are 0-based here: the window of sample `n` is
//! `n_b = max(0, n + 1 - n_w) ..= n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative guard on `D - C^2` for the least-squares solve.
pub const EPS_COND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Avg,
    Ls,
    Els,
    Gels,
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "avg" => Ok(Self::Avg),
            "ls" => Ok(Self::Ls),
            "els" => Ok(Self::Els),
            "gels" => Ok(Self::Gels),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Which model produced a set of coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Avg,
    Ls,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoeffs {
    /// First sample of the window, `n_b`.
    pub start: usize,
    /// `G(n, i)` for `i = start..start + coeffs.len()`.
    pub coeffs: Vec<f64>,
    pub model: Model,
}

impl FilterCoeffs {
    /// Index of the newest sample in the window.
    pub fn end(&self) -> usize {
        self.start + self.coeffs.len() - 1
    }

    /// `sum_i series[i] * G(n, i)` over the window.
    pub fn apply(&self, series: &[f64]) -> f64 {
        self.coeffs.iter().enumerate().map(|(k, g)| g * series[self.start + k]).sum()
    }
}

pub fn window_start(n: usize, n_w: usize) -> usize {
    (n + 1).saturating_sub(n_w.max(1))
}

pub fn avg_coeffs(n: usize, n_w: usize) -> FilterCoeffs {
    let start = window_start(n, n_w);
    let len = n - start + 1;
    FilterCoeffs { start, coeffs: vec![1.0 / len as f64; len], model: Model::Avg }
}

/// Moments and solution of the windowed fit `p(i) ~ alpha - beta * log10 d(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsFit {
    /// Mean power.
    pub p: f64,
    /// Mean of `p(i) * log10 d(i)`.
    pub q: f64,
    /// Mean log-distance.
    pub c: f64,
    /// Mean squared log-distance.
    pub d: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// `alpha_hat = sum_i p(i) a[i]`.
    pub a: Vec<f64>,
    /// `beta_hat = sum_i p(i) b[i]`.
    pub b: Vec<f64>,
    log_d: Vec<f64>,
}

/// Coefficient part of the LS fit; it depends only on the distances.
fn ls_basis(dist: &[f64]) -> Result<(f64, f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let w = dist.len() as f64;
    let x: Vec<f64> = dist.iter().map(|d| d.log10()).collect();
    let c = x.iter().sum::<f64>() / w;
    let d = x.iter().map(|v| v * v).sum::<f64>() / w;
    // D - C^2 evaluated in centred form to avoid cancellation when the
    // log-distances are close together.
    let gap = x.iter().map(|v| (v - c) * (v - c)).sum::<f64>() / w;
    if dist.len() < 2 || !(gap > EPS_COND * d) {
        return Err(Error::SingularFit { gap, d });
    }
    // A_i = (D - C x_i) / (w (D - C^2)),  B_i = (C - x_i) / (w (D - C^2))
    let a = x.iter().map(|xi| 1.0 / w - c * (xi - c) / (w * gap)).collect();
    let b = x.iter().map(|xi| (c - xi) / (w * gap)).collect();
    Ok((c, d, a, b, x))
}

pub fn ls_fit(p: &[f64], dist: &[f64]) -> Result<LsFit> {
    assert_eq!(p.len(), dist.len(), "power and distance windows differ in length");
    let (c, d, a, b, log_d) = ls_basis(dist)?;
    let w = p.len() as f64;
    let pm = p.iter().sum::<f64>() / w;
    let q = p.iter().zip(&log_d).map(|(pi, xi)| pi * xi).sum::<f64>() / w;
    let alpha_hat = p.iter().zip(&a).map(|(pi, ai)| pi * ai).sum();
    let beta_hat = p.iter().zip(&b).map(|(pi, bi)| pi * bi).sum();
    Ok(LsFit { p: pm, q, c, d, alpha_hat, beta_hat, a, b, log_d })
}

impl LsFit {
    /// `l(n) = alpha_hat - beta_hat * log10 d(n)` at the newest sample.
    pub fn estimate(&self) -> f64 {
        self.alpha_hat - self.beta_hat * self.log_d[self.log_d.len() - 1]
    }

    /// `G(n, i) = A(n, i) - B(n, i) * log10 d(n)`.
    pub fn coeffs(&self, start: usize) -> FilterCoeffs {
        let xn = self.log_d[self.log_d.len() - 1];
        let coeffs = self.a.iter().zip(&self.b).map(|(a, b)| a - b * xn).collect();
        FilterCoeffs { start, coeffs, model: Model::Ls }
    }

    /// Fitted line at every window sample.
    pub fn fitted(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_d.iter().map(|x| self.alpha_hat - self.beta_hat * x)
    }
}

/// LS coefficients for the window ending at `n`, straight from the distances.
pub fn ls_coeffs(n: usize, n_w: usize, dist: &[f64]) -> Result<FilterCoeffs> {
    let start = window_start(n, n_w);
    let (_, _, a, b, x) = ls_basis(&dist[start..=n])?;
    let xn = x[x.len() - 1];
    let coeffs = a.iter().zip(&b).map(|(a, b)| a - b * xn).collect();
    Ok(FilterCoeffs { start, coeffs, model: Model::Ls })
}

/// Coefficients of a data-independent estimator on the window ending at `n`.
/// The data-driven estimators (ELS, GELS) pick LS on a noiseless path-loss
/// curve, so their nominal coefficients are the LS ones. LS falls back to
/// AVG on a degenerate window.
pub fn nominal_coeffs(kind: EstimatorKind, n: usize, n_w: usize, dist: &[f64]) -> FilterCoeffs {
    match kind {
        EstimatorKind::Avg => avg_coeffs(n, n_w),
        _ => ls_coeffs(n, n_w, dist).unwrap_or_else(|_| avg_coeffs(n, n_w)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GelsDiagnostics {
    /// `p(n) - l(n)`.
    pub delta: f64,
    /// Windowed mean squared residual of the AVG model.
    pub e1: f64,
    /// Windowed mean squared residual of the LS model (infinite when the fit is singular).
    pub e2: f64,
    pub e_min: f64,
    /// `delta / sqrt(e_min)`; absent when the selected model fits the window exactly.
    pub e_r: Option<f64>,
    pub reinit: bool,
}

/// ELS: pick whichever of AVG and LS has the lower windowed MSE, LS on ties.
/// `start` labels the returned coefficients with the window's absolute position.
pub fn els_select(p: &[f64], dist: &[f64], start: usize) -> (FilterCoeffs, GelsDiagnostics) {
    let w = p.len() as f64;
    let mean = p.iter().sum::<f64>() / w;
    let e1 = p.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w;
    let (coeffs, l, e2) = match ls_fit(p, dist) {
        Ok(fit) => {
            let e2 = p.iter().zip(fit.fitted()).map(|(v, f)| (v - f) * (v - f)).sum::<f64>() / w;
            if e2 <= e1 {
                (fit.coeffs(start), fit.estimate(), e2)
            } else {
                let c = FilterCoeffs { start, coeffs: vec![1.0 / w; p.len()], model: Model::Avg };
                (c, mean, e2)
            }
        }
        Err(_) => {
            let c = FilterCoeffs { start, coeffs: vec![1.0 / w; p.len()], model: Model::Avg };
            (c, mean, f64::INFINITY)
        }
    };
    let e_min = e1.min(e2);
    let delta = p[p.len() - 1] - l;
    // Residuals at round-off level mean the model is exact; a ratio of two
    // round-off quantities says nothing about model validity.
    let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let e_r = (e_min > (1e-9 * scale).powi(2)).then(|| delta / e_min.sqrt());
    (coeffs, GelsDiagnostics { delta, e1, e2, e_min, e_r, reinit: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub l: f64,
    pub coeffs: FilterCoeffs,
    pub diag: Option<GelsDiagnostics>,
}

/// Per-link estimator state. Only GELS carries state: the sample its window restarted at.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEstimator {
    pub kind: EstimatorKind,
    pub n_w: usize,
    pub gamma: f64,
    pub h_max: f64,
    restart: usize,
}

impl LinkEstimator {
    pub fn new(kind: EstimatorKind, n_w: usize, gamma: f64, h_max: f64) -> Self {
        Self { kind, n_w, gamma, h_max, restart: 0 }
    }

    /// Restarts the window at sample `n`.
    pub fn restart_at(&mut self, n: usize) {
        self.restart = n;
    }

    /// Estimate at sample `n` from the history `p[..=n]`, `dist[..=n]`.
    /// `h` is the hysteresis in force, used only by the GELS forced-reinit rule.
    pub fn estimate(&mut self, n: usize, p: &[f64], dist: &[f64], h: f64) -> Estimate {
        match self.kind {
            EstimatorKind::Avg => {
                let c = avg_coeffs(n, self.n_w);
                Estimate { l: c.apply(p), coeffs: c, diag: None }
            }
            EstimatorKind::Ls => {
                let c = nominal_coeffs(EstimatorKind::Ls, n, self.n_w, dist);
                Estimate { l: c.apply(p), coeffs: c, diag: None }
            }
            EstimatorKind::Els => {
                let start = window_start(n, self.n_w);
                let (c, diag) = els_select(&p[start..=n], &dist[start..=n], start);
                Estimate { l: c.apply(p), coeffs: c, diag: Some(diag) }
            }
            EstimatorKind::Gels => self.gels_step(n, p, dist, h),
        }
    }

    pub fn gels_step(&mut self, n: usize, p: &[f64], dist: &[f64], h: f64) -> Estimate {
        let start = window_start(n, self.n_w).max(self.restart.min(n));
        let (c, mut diag) = els_select(&p[start..=n], &dist[start..=n], start);
        let residual_trip = diag.e_r.is_some_and(|r| r.abs() > self.gamma);
        if residual_trip || h > self.h_max {
            diag.reinit = true;
            self.restart = n;
            let c = FilterCoeffs { start: n, coeffs: vec![1.0], model: Model::Avg };
            return Estimate { l: p[n], coeffs: c, diag: Some(diag) };
        }
        Estimate { l: c.apply(p), coeffs: c, diag: Some(diag) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn avg_window_shapes() {
        let c = avg_coeffs(4, 3);
        assert_eq!(c.start, 2);
        assert_eq!(c.coeffs, vec![1.0 / 3.0; 3]);
        let c = avg_coeffs(0, 8);
        assert_eq!((c.start, c.coeffs.clone()), (0, vec![1.0]));
    }

    #[test]
    fn constant_power_is_reproduced_by_avg() {
        let p = vec![-80.0; 10];
        for n in 0..10 {
            assert!((avg_coeffs(n, 4).apply(&p) + 80.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_or_equal_distances_is_singular() {
        assert!(matches!(ls_fit(&[1.0], &[100.0]), Err(Error::SingularFit { .. })));
        assert!(matches!(ls_fit(&[1.0, 2.0], &[100.0, 100.0]), Err(Error::SingularFit { .. })));
        // The nominal path falls back to AVG.
        assert_eq!(nominal_coeffs(EstimatorKind::Ls, 0, 4, &[100.0]).model, Model::Avg);
    }

    #[test]
    fn els_prefers_ls_on_slope_and_avg_on_constant() {
        let d: Vec<f64> = (0..6).map(|i| 500.0 + 10.0 * i as f64).collect();
        let p: Vec<f64> = d.iter().map(|x| 3.0 - 35.0 * x.log10()).collect();
        assert_eq!(els_select(&p, &d, 0).0.model, Model::Ls);
        // Constant data: both models reproduce it, whichever wins on round-off.
        let flat = vec![-90.0; 6];
        let (c, diag) = els_select(&flat, &d, 0);
        assert_eq!(c.model == Model::Ls, diag.e2 <= diag.e1);
        assert!((c.apply(&flat) + 90.0).abs() < 1e-9);
        assert!(diag.e_r.is_none());
        // A degenerate window leaves AVG as the only model.
        let (c, diag) = els_select(&[-90.0, -91.0], &[100.0, 100.0], 3);
        assert_eq!((c.model, c.start), (Model::Avg, 3));
        assert!(diag.e2.is_infinite());
    }
}
