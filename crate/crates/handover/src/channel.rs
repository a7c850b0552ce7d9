//! Received power `p_s(n) = alpha_s - beta_s * log10 d_s(n) + u_s(n)` with
//! exponentially correlated log-normal shadowing.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Distances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Power at 1 m, dB.
    pub alpha: f64,
    /// Path-loss slope, dB per decade.
    pub beta: f64,
    /// Shadowing standard deviation, dB.
    pub sigma_u: f64,
    /// Shadowing coherence distance, meters.
    pub dbar: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { alpha: 0.0, beta: 35.0, sigma_u: 6.0, dbar: 20.0 }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_u >= 0.0) || !(self.dbar > 0.0) || !(self.beta > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!(
                "channel needs sigma_u >= 0, dbar > 0, beta > 0; got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn path_loss(&self, d: f64) -> f64 {
        self.alpha - self.beta * d.log10()
    }

    /// AR(1) coefficient of the sampled shadowing, `exp(-d_c / dbar)`.
    pub fn ar_coefficient(&self, dc: f64) -> f64 {
        (-dc / self.dbar).exp()
    }

    /// `r(l) = sigma_u^2 * exp(-|l| * dc / dbar)` for a lag of `l` samples.
    pub fn autocorr(&self, lag: i64, dc: f64) -> f64 {
        self.sigma_u * self.sigma_u * (-(lag.unsigned_abs() as f64) * dc / self.dbar).exp()
    }
}

/// Shadowing autocorrelation at a lag of `lag` samples taken every `v * t` meters.
pub fn shadow_autocorr(params: &ChannelParams, lag: i64, v: f64, t: f64) -> f64 {
    params.autocorr(lag, v * t)
}

/// One realization of powers and shadowing on every link, indexed `[s][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub seed: u64,
}

/// Fills `out` with a stationary AR(1) Gaussian sequence: variance `sigma^2`, coefficient `a`.
pub fn ar1_into<R: Rng + ?Sized>(rng: &mut R, a: f64, sigma: f64, out: &mut [f64]) {
    let innov = sigma * (1.0 - a * a).max(0.0).sqrt();
    let mut prev = 0.0;
    for (i, x) in out.iter_mut().enumerate() {
        let w: f64 = rng.sample(StandardNormal);
        prev = if i == 0 { sigma * w } else { a * prev + innov * w };
        *x = prev;
    }
}

/// Draws independent shadowing on every link and assembles the powers.
/// Links are filled in order, each consuming `N` normals from `rng`.
pub fn sample_with_rng<R: Rng + ?Sized>(
    params: &[ChannelParams],
    dist: &Distances,
    dc: f64,
    rng: &mut R,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = dist.len();
    let mut p = Vec::with_capacity(params.len());
    let mut u = Vec::with_capacity(params.len());
    for (s, prm) in params.iter().enumerate() {
        let mut us = vec![0.0; n];
        ar1_into(rng, prm.ar_coefficient(dc), prm.sigma_u, &mut us);
        let ps = dist.row(s).iter().zip(&us).map(|(&d, &x)| prm.path_loss(d) + x).collect();
        p.push(ps);
        u.push(us);
    }
    (p, u)
}

pub fn sample_shadowing(params: &[ChannelParams], dist: &Distances, dc: f64, seed: u64) -> PowerTrace {
    let mut rng = crate::rng::stream(seed, 0);
    let (p, u) = sample_with_rng(params, dist, dc, &mut rng);
    PowerTrace { p, u, seed }
}

impl PowerTrace {
    /// Columns: `n`, then `d_s, pathloss_s, u_s, p_s` for each BS.
    pub fn write_csv<W: Write>(&self, params: &[ChannelParams], dist: &Distances, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["n".to_string()];
        for s in 0..self.p.len() {
            for col in ["d", "pathloss", "u", "p"] {
                header.push(format!("{col}_{s}"));
            }
        }
        w.write_record(&header)?;
        for n in 0..dist.len() {
            let mut row = vec![n.to_string()];
            for s in 0..self.p.len() {
                let d = dist.get(s, n);
                row.push(format!("{d}"));
                row.push(format!("{}", params[s].path_loss(d)));
                row.push(format!("{}", self.u[s][n]));
                row.push(format!("{}", self.p[s][n]));
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}
