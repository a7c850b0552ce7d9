//! Gaussian machinery: statistics of the decision process `y(n)` and of the
//! received powers, an exact-probability oracle for box events on correlated
//! Gaussian vectors, and the three cheaper approximations.

mod approx;
pub mod mvn;
pub mod normal;
mod stats;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use approx::{approx1, approx2_bounds, approx3_upper, gershgorin_bracket};
pub use stats::{LinkModel, PairModel, YProcessStats};

/// Default sample count of the Monte Carlo branch of [`exact_prob`].
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// A process sample that can appear as a coordinate of a Gaussian vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Coord {
    /// `y(n)`.
    Y(usize),
    /// `p_s(n)` as `P(s, n)`, with `s` the link index inside the pair.
    P(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianVector {
    pub mu: Vec<f64>,
    pub sigma: DMatrix<f64>,
    pub labels: Vec<Coord>,
}

impl GaussianVector {
    pub fn new(mu: Vec<f64>, sigma: DMatrix<f64>, labels: Vec<Coord>) -> Result<Self> {
        let k = mu.len();
        if k == 0 || sigma.nrows() != k || sigma.ncols() != k || labels.len() != k {
            return Err(Error::Event(format!(
                "dimension mismatch: mu {k}, sigma {}x{}, labels {}",
                sigma.nrows(),
                sigma.ncols(),
                labels.len()
            )));
        }
        let scale = sigma.diagonal().amax().max(1.0);
        for i in 0..k {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::Event(format!("sigma is not symmetric at ({i}, {j})")));
                }
            }
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != k {
            return Err(Error::Event("duplicate coordinate labels".into()));
        }
        Ok(Self { mu, sigma, labels })
    }

    /// Unlabelled vector; coordinate `i` is tagged `Y(i)`.
    pub fn unlabelled(mu: Vec<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let labels = (0..mu.len()).map(Coord::Y).collect();
        Self::new(mu, sigma, labels)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn index_of(&self, c: Coord) -> Option<usize> {
        self.labels.iter().position(|&l| l == c)
    }

    pub fn marginal(&self, idx: &[usize]) -> Self {
        Self {
            mu: idx.iter().map(|&i| self.mu[i]).collect(),
            sigma: DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.sigma[(idx[r], idx[c])]),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// One box constraint `lo < X <= hi` on a labelled coordinate. Infinite ends
/// are allowed; `lo >= hi` is an empty box (probability zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub coord: Coord,
    pub lo: f64,
    pub hi: f64,
}

/// Conjunction of box constraints.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventSpec {
    pub bounds: Vec<Bound>,
}

impl EventSpec {
    pub fn new(bounds: Vec<Bound>) -> Result<Self> {
        for (i, b) in bounds.iter().enumerate() {
            if b.lo.is_nan() || b.hi.is_nan() {
                return Err(Error::Event(format!("NaN bound on {:?}", b.coord)));
            }
            if bounds[..i].iter().any(|o| o.coord == b.coord) {
                return Err(Error::Event(format!("coordinate {:?} constrained twice", b.coord)));
            }
        }
        Ok(Self { bounds })
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn is_null(&self) -> bool {
        self.bounds.iter().any(|b| b.lo >= b.hi)
    }
}

/// Probability with its standard error. Deterministic branches report zero error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prob {
    pub p: f64,
    pub stderr: f64,
    /// Covariance needed a diagonal jitter before it could be factorized.
    pub jittered: bool,
}

impl Prob {
    pub const ZERO: Prob = Prob { p: 0.0, stderr: 0.0, jittered: false };
    pub const ONE: Prob = Prob { p: 1.0, stderr: 0.0, jittered: false };

    pub fn exact(p: f64) -> Self {
        Prob { p, stderr: 0.0, jittered: false }
    }
}

/// The event's coordinates in event order, with their bounds, after dropping
/// coordinates left unconstrained.
pub(crate) fn restrict(gv: &GaussianVector, ev: &EventSpec) -> Result<(GaussianVector, Vec<f64>, Vec<f64>)> {
    let mut idx = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for b in &ev.bounds {
        let i = gv
            .index_of(b.coord)
            .ok_or_else(|| Error::Event(format!("coordinate {:?} is not in the vector", b.coord)))?;
        if b.lo == f64::NEG_INFINITY && b.hi == f64::INFINITY {
            continue;
        }
        idx.push(i);
        lo.push(b.lo);
        hi.push(b.hi);
    }
    Ok((gv.marginal(&idx), lo, hi))
}

/// `Pr[ev]` under `gv`.
///
/// Up to three constrained coordinates the answer is deterministic: closed
/// form for one, the Genz bivariate algorithm for two, and composite
/// Gauss–Legendre over the conditional bivariate for three. Beyond that the
/// separation-of-variables Monte Carlo estimator runs with `mc_samples`
/// draws from a stream seeded by `seed`.
pub fn exact_prob(gv: &GaussianVector, ev: &EventSpec, mc_samples: usize, seed: u64) -> Result<Prob> {
    let (sub, lo, hi) = restrict(gv, ev)?;
    box_prob(&sub.mu, &sub.sigma, &lo, &hi, mc_samples, seed)
}

/// `Pr[lo < X <= hi]` for `X ~ N(mu, sigma)`, coordinate-wise.
pub fn box_prob(mu: &[f64], sigma: &DMatrix<f64>, lo: &[f64], hi: &[f64], mc_samples: usize, seed: u64) -> Result<Prob> {
    let k = mu.len();
    if (0..k).any(|i| lo[i] >= hi[i]) {
        return Ok(Prob::ZERO);
    }
    let scale = sigma.diagonal().amax().max(1.0);
    let mut keep = Vec::with_capacity(k);
    for i in 0..k {
        let fixed = lo[i] == f64::NEG_INFINITY && hi[i] == f64::INFINITY;
        if fixed {
            continue;
        }
        if sigma[(i, i)] <= 1e-12 * scale {
            // A (numerically) constant coordinate is either inside its box or not.
            if !(lo[i] < mu[i] && mu[i] <= hi[i]) {
                return Ok(Prob::ZERO);
            }
            continue;
        }
        keep.push(i);
    }
    let k = keep.len();
    if k == 0 {
        return Ok(Prob::ONE);
    }
    let s: Vec<f64> = keep.iter().map(|&i| sigma[(i, i)].sqrt()).collect();
    let a: Vec<f64> = keep.iter().zip(&s).map(|(&i, si)| (lo[i] - mu[i]) / si).collect();
    let b: Vec<f64> = keep.iter().zip(&s).map(|(&i, si)| (hi[i] - mu[i]) / si).collect();
    let r = |p: usize, q: usize| (sigma[(keep[p], keep[q])] / (s[p] * s[q])).clamp(-1.0, 1.0);
    match k {
        1 => Ok(Prob::exact(normal::interval(a[0], b[0]))),
        2 => Ok(Prob::exact(normal::bvn_rect([a[0], a[1]], [b[0], b[1]], r(0, 1)))),
        3 => Ok(Prob::exact(normal::tvn_rect([a[0], a[1], a[2]], [b[0], b[1], b[2]], r(0, 1), r(0, 2), r(1, 2)))),
        _ => {
            // Most restrictive coordinates first: this is where the
            // separation-of-variables estimator has the lowest variance.
            let mut order: Vec<usize> = (0..k).collect();
            let width: Vec<f64> = (0..k).map(|i| normal::interval(a[i], b[i])).collect();
            order.sort_by(|&x, &y| width[x].total_cmp(&width[y]).then(x.cmp(&y)));
            let corr = DMatrix::from_fn(k, k, |p, q| if p == q { 1.0 } else { r(order[p], order[q]) });
            let (chol, jittered) = cholesky_with_jitter(&corr)?;
            let lo_o: Vec<f64> = order.iter().map(|&i| a[i]).collect();
            let hi_o: Vec<f64> = order.iter().map(|&i| b[i]).collect();
            let mut rng = crate::rng::stream(seed, 0);
            let (p, stderr) = mvn::sov_estimate(&vec![0.0; k], &chol, &lo_o, &hi_o, mc_samples, &mut rng);
            Ok(Prob { p, stderr, jittered })
        }
    }
}

/// Lower Cholesky factor; on failure retries once with `1e-10 * trace / k` on the diagonal.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    if let Some(c) = m.clone().cholesky() {
        return Ok((c.l(), false));
    }
    let k = m.nrows() as f64;
    let jitter = 1e-10 * m.trace() / k;
    let mut jm = m.clone();
    for i in 0..m.nrows() {
        jm[(i, i)] += jitter;
    }
    match jm.cholesky() {
        Some(c) => Ok((c.l(), true)),
        None => {
            let min_eig = m.clone().symmetric_eigenvalues().min();
            Err(Error::NotPsd { min_eig })
        }
    }
}
