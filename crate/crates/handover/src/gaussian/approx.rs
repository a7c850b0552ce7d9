//! Cheap approximations and bounds for box probabilities.

use nalgebra::DMatrix;

use super::{box_prob, normal, restrict, EventSpec, GaussianVector};
use crate::error::{Error, Result};

/// Grouping approximation: split the constrained coordinates (in event order)
/// into contiguous blocks of `g` and multiply the per-block probabilities, as
/// if the blocks were independent. With `g >= k` this is exactly
/// [`super::exact_prob`], same seed and same code path.
pub fn approx1(gv: &GaussianVector, ev: &EventSpec, g: usize, mc_samples: usize, seed: u64) -> Result<f64> {
    if g == 0 {
        return Err(Error::Event("group size must be at least 1".into()));
    }
    let (sub, lo, hi) = restrict(gv, ev)?;
    let k = sub.dim();
    let mut p = 1.0;
    for (j, start) in (0..k).step_by(g).enumerate() {
        let idx: Vec<usize> = (start..(start + g).min(k)).collect();
        let block = sub.marginal(&idx);
        let seed_j = if j == 0 { seed } else { crate::rng::derive_seed(seed, j as u64) };
        let lo_b: Vec<f64> = idx.iter().map(|&i| lo[i]).collect();
        let hi_b: Vec<f64> = idx.iter().map(|&i| hi[i]).collect();
        p *= box_prob(&block.mu, &block.sigma, &lo_b, &hi_b, mc_samples, seed_j)?.p;
        if p == 0.0 {
            break;
        }
    }
    Ok(p)
}

fn eigen_extremes(sigma: &DMatrix<f64>) -> Result<(f64, f64, f64)> {
    let eig = sigma.clone().symmetric_eigenvalues();
    let lmin = eig.min();
    let lmax = eig.max();
    if !(lmin > 0.0) {
        return Err(Error::NotPositiveDefinite(lmin));
    }
    let log_det = eig.iter().map(|l| l.ln()).sum();
    Ok((lmin, lmax, log_det))
}

/// `lambda^(k/2) / sqrt(det) * prod_l Pr[lo_l < mu_l + sqrt(lambda) Z <= hi_l]`.
fn isotropic_bound(mu: &[f64], lo: &[f64], hi: &[f64], lambda: f64, log_det: f64) -> f64 {
    let k = mu.len() as f64;
    let sd = lambda.sqrt();
    let prod: f64 = (0..mu.len()).map(|l| normal::interval((lo[l] - mu[l]) / sd, (hi[l] - mu[l]) / sd)).product();
    if prod == 0.0 {
        return 0.0;
    }
    (0.5 * k * lambda.ln() - 0.5 * log_det).exp() * prod
}

/// Eigenvalue sandwich. Since `lambda_max^-1 |q|^2 <= q^T Sigma^-1 q <= lambda_min^-1 |q|^2`,
/// the density is bracketed by isotropic densities, which gives
/// `lower = lambda_min^(k/2) / sqrt(det Sigma) * prod_l [Phi((hi_l - mu_l) / sqrt(lambda_min)) - Phi((lo_l - mu_l) / sqrt(lambda_min))]`
/// and the same with `lambda_max` for the upper end.
pub fn approx2_bounds(gv: &GaussianVector, ev: &EventSpec) -> Result<(f64, f64)> {
    let (sub, lo, hi) = restrict(gv, ev)?;
    if sub.dim() == 0 {
        return Ok((1.0, 1.0));
    }
    if (0..sub.dim()).any(|i| lo[i] >= hi[i]) {
        return Ok((0.0, 0.0));
    }
    let (lmin, lmax, log_det) = eigen_extremes(&sub.sigma)?;
    Ok((
        isotropic_bound(&sub.mu, &lo, &hi, lmin, log_det),
        isotropic_bound(&sub.mu, &lo, &hi, lmax, log_det),
    ))
}

/// Banded Gershgorin bracket on the spectrum of `sigma`: only off-diagonal
/// entries with `|i - j| <= band` enter the radii. The full band is a proven
/// bracket; narrower bands are a heuristic that ignores weak far couplings.
pub fn gershgorin_bracket(sigma: &DMatrix<f64>, band: usize) -> (f64, f64) {
    let k = sigma.nrows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let radius: f64 = (i.saturating_sub(band)..(i + band + 1).min(k))
            .filter(|&j| j != i)
            .map(|j| sigma[(i, j)].abs())
            .sum();
        lo = lo.min(sigma[(i, i)] - radius);
        hi = hi.max(sigma[(i, i)] + radius);
    }
    (lo, hi)
}

/// Upper bound mixing the two: with `A` the first `k - m` constrained
/// coordinates and `B` the last `m`, `Pr[AB] <= sqrt(Pr[A]) sqrt(Pr[B])`;
/// `Pr[B]` is computed exactly and `Pr[A]` is replaced by its eigenvalue upper bound.
pub fn approx3_upper(gv: &GaussianVector, ev: &EventSpec, m_split: usize, mc_samples: usize, seed: u64) -> Result<f64> {
    if m_split == 0 {
        return Err(Error::Event("approx3 split must be at least 1".into()));
    }
    let (sub, lo, hi) = restrict(gv, ev)?;
    let k = sub.dim();
    if k == 0 {
        return Ok(1.0);
    }
    let m = m_split.min(k);
    let tail: Vec<usize> = (k - m..k).collect();
    let t = sub.marginal(&tail);
    let p_tail = box_prob(&t.mu, &t.sigma, &lo[k - m..], &hi[k - m..], mc_samples, seed)?.p;
    if m == k {
        return Ok(p_tail.sqrt());
    }
    let head: Vec<usize> = (0..k - m).collect();
    let h = sub.marginal(&head);
    let (hlo, hhi) = (&lo[..k - m], &hi[..k - m]);
    if (0..k - m).any(|i| hlo[i] >= hhi[i]) {
        return Ok(0.0);
    }
    let (_, lmax, log_det) = eigen_extremes(&h.sigma)?;
    let ub_head = isotropic_bound(&h.mu, hlo, hhi, lmax, log_det);
    Ok(p_tail.sqrt() * ub_head.sqrt())
}
