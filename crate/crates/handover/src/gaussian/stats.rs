//! First and second moments of `y(n) = l_0(n) - l_1(n)` and of the powers
//! `p_s(n)`, from the filter coefficients and the shadowing autocorrelation.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Coord, GaussianVector};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::estimators::{nominal_coeffs, EstimatorKind, FilterCoeffs};

/// One BS-to-MT link along the trace: channel, distances and the filter
/// coefficients of its strength estimate at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    pub params: ChannelParams,
    pub dist: Vec<f64>,
    pub coeffs: Vec<FilterCoeffs>,
    path_loss: Vec<f64>,
}

impl LinkModel {
    pub fn with_coeffs(params: ChannelParams, dist: Vec<f64>, coeffs: Vec<FilterCoeffs>) -> Self {
        let path_loss = dist.iter().map(|&d| params.path_loss(d)).collect();
        Self { params, dist, coeffs, path_loss }
    }

    /// Nominal (data-independent) coefficients of `kind` at every sample.
    pub fn new(params: ChannelParams, dist: Vec<f64>, kind: EstimatorKind, n_w: usize) -> Self {
        let coeffs = (0..dist.len()).map(|n| nominal_coeffs(kind, n, n_w, &dist)).collect();
        Self::with_coeffs(params, dist, coeffs)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn path_loss(&self, n: usize) -> f64 {
        self.path_loss[n]
    }

    /// Mean of the estimate, the filtered path loss.
    pub fn mean_l(&self, n: usize) -> f64 {
        self.coeffs[n].apply(&self.path_loss)
    }

    /// `sum_i sum_j r(i - j) G(n, i) G(m, j)`.
    pub fn cov_l(&self, n: usize, m: usize, dc: f64) -> f64 {
        let (cn, cm) = (&self.coeffs[n], &self.coeffs[m]);
        let mut acc = 0.0;
        for (a, ga) in cn.coeffs.iter().enumerate() {
            let i = (cn.start + a) as i64;
            for (b, gb) in cm.coeffs.iter().enumerate() {
                let j = (cm.start + b) as i64;
                acc += self.params.autocorr(i - j, dc) * ga * gb;
            }
        }
        acc
    }

    /// `Cov(p(t), l(n)) = sum_i r(t - i) G(n, i)`.
    pub fn cov_p_l(&self, t: usize, n: usize, dc: f64) -> f64 {
        let c = &self.coeffs[n];
        c.coeffs
            .iter()
            .enumerate()
            .map(|(a, g)| self.params.autocorr(t as i64 - (c.start + a) as i64, dc) * g)
            .sum()
    }
}

/// The two links entering `y`: link 0 counts positively, link 1 negatively.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub links: [Arc<LinkModel>; 2],
    /// Sample spacing `d_c`, meters.
    pub dc: f64,
}

impl PairModel {
    pub fn new(link0: Arc<LinkModel>, link1: Arc<LinkModel>, dc: f64) -> Self {
        Self { links: [link0, link1], dc }
    }

    pub fn len(&self) -> usize {
        self.links[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean(&self, c: Coord) -> f64 {
        match c {
            Coord::Y(n) => self.links[0].mean_l(n) - self.links[1].mean_l(n),
            Coord::P(s, n) => self.links[s].path_loss(n),
        }
    }

    pub fn cov(&self, a: Coord, b: Coord) -> f64 {
        let dc = self.dc;
        match (a, b) {
            (Coord::Y(n), Coord::Y(m)) => self.links[0].cov_l(n, m, dc) + self.links[1].cov_l(n, m, dc),
            (Coord::P(s, t), Coord::Y(n)) | (Coord::Y(n), Coord::P(s, t)) => {
                let sign = if s == 0 { 1.0 } else { -1.0 };
                sign * self.links[s].cov_p_l(t, n, dc)
            }
            (Coord::P(s, t), Coord::P(r, u)) => {
                if s == r {
                    self.links[s].params.autocorr(t as i64 - u as i64, dc)
                } else {
                    0.0
                }
            }
        }
    }

    /// Joint Gaussian vector of the listed coordinates.
    pub fn vector(&self, coords: &[Coord]) -> Result<GaussianVector> {
        let k = coords.len();
        let mu = coords.iter().map(|&c| self.mean(c)).collect();
        let mut sigma = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v = self.cov(coords[i], coords[j]);
                sigma[(i, j)] = v;
                sigma[(j, i)] = v;
            }
        }
        GaussianVector::new(mu, sigma, coords.to_vec())
    }

    /// Mean and covariance of `y` over the sample range `times`.
    pub fn y_stats(&self, times: Range<usize>) -> Result<YProcessStats> {
        let times: Vec<usize> = times.collect();
        let coords: Vec<Coord> = times.iter().map(|&t| Coord::Y(t)).collect();
        let gv = self.vector(&coords)?;
        if !times.is_empty() {
            let trace = gv.sigma.trace();
            let min_eig = gv.sigma.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-8 * trace.max(f64::MIN_POSITIVE) {
                return Err(Error::NotPsd { min_eig });
            }
        }
        let windows = times
            .iter()
            .map(|&t| (self.links[0].coeffs[t].start, self.links[1].coeffs[t].start))
            .collect();
        Ok(YProcessStats { times, mu: gv.mu, sigma: gv.sigma, windows })
    }
}

/// Mean vector and covariance of `y` over consecutive samples.
#[derive(Debug, Clone, PartialEq)]
pub struct YProcessStats {
    pub times: Vec<usize>,
    pub mu: Vec<f64>,
    pub sigma: DMatrix<f64>,
    /// Window starts `(n_b` of link 0, `n_b` of link 1) per sample.
    pub windows: Vec<(usize, usize)>,
}

impl YProcessStats {
    pub fn sigma_y(&self, i: usize) -> f64 {
        self.sigma[(i, i)].sqrt()
    }

    /// Correlation coefficient between positions `i` and `j`.
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.sigma[(i, j)] / (self.sigma_y(i) * self.sigma_y(j))
    }

    pub fn vector(&self) -> GaussianVector {
        GaussianVector {
            mu: self.mu.clone(),
            sigma: self.sigma.clone(),
            labels: self.times.iter().map(|&t| Coord::Y(t)).collect(),
        }
    }
}
