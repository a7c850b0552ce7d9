//! Sweeps built on the runner and the analysis: the speed-by-policy table,
//! the approximation accuracy study, the Pareto sweep and the optimal-margin
//! profile along the path.

use serde::{Deserialize, Serialize};

use super::{run, Planner, Policy, RunMode, Scenario};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::gaussian::Coord;
use crate::metrics::{Evaluator, Method, Metrics};
use crate::optimizer::Objective;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub speeds: Vec<f64>,
    pub policies: Vec<Policy>,
    pub trials: usize,
}

impl SweepSpec {
    /// Speeds 5, 20 and 40 m/s against margins 0, 2, 4 dB and the three optimized policies.
    pub fn table_one(trials: usize) -> Self {
        Self {
            speeds: vec![5.0, 20.0, 40.0],
            policies: vec![
                Policy::Constant(0.0),
                Policy::Constant(2.0),
                Policy::Constant(4.0),
                Policy::Opt1,
                Policy::Opt2,
                Policy::Opt3,
            ],
            trials,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("sweep needs at least one trial per point".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub speed: f64,
    pub policy: Policy,
    pub samples: usize,
    pub h_bar: f64,
    pub h_bar_stderr: f64,
    pub o_bar: f64,
    pub o_bar_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub spec: SweepSpec,
    pub mode: RunMode,
    pub config_hash: String,
    pub seed: u64,
    /// Policy-major: every speed of the first policy, then the next policy.
    pub cells: Vec<TableCell>,
}

impl TableResult {
    pub fn cell(&self, policy: Policy, speed: f64) -> Option<&TableCell> {
        self.cells.iter().find(|c| c.policy == policy && c.speed == speed)
    }
}

/// Runs every (policy, speed) point of `spec` from `base`, changing only the speed.
pub fn run_table(base: &ScenarioConfig, spec: &SweepSpec, mode: RunMode, workers: usize) -> Result<TableResult> {
    spec.validate()?;
    let scenarios: Vec<Scenario> = spec.speeds.iter().map(|&v| Scenario::build(&base.with_speed(v))).collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(spec.policies.len() * spec.speeds.len());
    for &policy in &spec.policies {
        for scn in &scenarios {
            let r = run(scn, policy, mode, spec.trials, workers)?;
            cells.push(TableCell {
                speed: scn.config.speed_mps,
                policy,
                samples: r.samples,
                h_bar: r.mean_switches,
                h_bar_stderr: r.switches_stderr,
                o_bar: r.mean_outages,
                o_bar_stderr: r.outages_stderr,
            });
        }
    }
    Ok(TableResult { spec: spec.clone(), mode, config_hash: base.hash(), seed: base.seed, cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub n: usize,
    pub exact: f64,
    pub exact_stderr: f64,
    pub b1: f64,
    pub lb2: f64,
    pub ub2: f64,
    pub ub3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStudy {
    pub k: usize,
    pub m_split: usize,
    pub h: f64,
    pub rows: Vec<AccuracyRow>,
    /// Mean absolute error against the exact value, in the order B1, LB2, UB2, UB3.
    pub mae: [f64; 4],
}

/// Largest truncation depth the study accepts.
pub const MAX_STUDY_DEPTH: usize = 10;

/// Handover probability along the two-cell path under a constant margin `h`,
/// computed at depth `k` by the exact oracle and by each approximation with
/// parameter `m_split` (the block size of approximation 1 and the split of
/// approximation 3). `instances` samples are reported, spread evenly over
/// `1..N`.
pub fn run_accuracy_study(scn: &Scenario, k: usize, m_split: usize, h: f64, instances: usize, seed: u64) -> Result<AccuracyStudy> {
    if k == 0 || k > MAX_STUDY_DEPTH {
        return Err(Error::Config(format!("accuracy study depth k = {k} outside 1..={MAX_STUDY_DEPTH}")));
    }
    if m_split == 0 {
        return Err(Error::Config("approximation parameter m must be at least 1".into()));
    }
    let last = scn.len() - 1;
    if instances == 0 || instances > last {
        return Err(Error::Config(format!("instances = {instances} outside 1..={last}")));
    }
    let at: Vec<usize> = if instances == 1 {
        vec![last]
    } else {
        (0..instances).map(|i| 1 + (i * (last - 1) + (instances - 1) / 2) / (instances - 1)).collect()
    };
    let hs = vec![h; scn.len()];
    let pair = scn.pair(0, 1);
    let mc = scn.config.mc_samples;
    let series = |method: Method| -> Result<Vec<(f64, f64)>> {
        let eval = Evaluator { method, mc_samples: mc, seed };
        let mut m = Metrics::new(&pair, &hs, scn.config.initial_bs, k, eval)?;
        at.iter().map(|&n| m.handover(n).map(|(a, b, se)| (a + b, se))).collect()
    };
    let exact = series(Method::Exact)?;
    let b1 = series(Method::Approx1 { group: m_split })?;
    let lb2 = series(Method::Approx2Lower)?;
    let ub2 = series(Method::Approx2Upper)?;
    let ub3 = series(Method::Approx3 { split: m_split })?;
    let rows: Vec<AccuracyRow> = (0..at.len())
        .map(|i| AccuracyRow {
            n: at[i],
            exact: exact[i].0,
            exact_stderr: exact[i].1,
            b1: b1[i].0,
            lb2: lb2[i].0,
            ub2: ub2[i].0,
            ub3: ub3[i].0,
        })
        .collect();
    let mae_of = |f: fn(&AccuracyRow) -> f64| rows.iter().map(|r| (f(r) - r.exact).abs()).sum::<f64>() / rows.len() as f64;
    let mae = [mae_of(|r| r.b1), mae_of(|r| r.lb2), mae_of(|r| r.ub2), mae_of(|r| r.ub3)];
    Ok(AccuracyStudy { k, m_split, h, rows, mae })
}

/// One receding-horizon decision along the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: usize,
    /// Connection before sample `n`: the nominal best server at `n - 1`.
    pub root: u8,
    pub h: f64,
    pub next_b: u8,
    /// Averages over the chosen path's stages.
    pub mean_p_h: f64,
    pub mean_p_o: f64,
}

/// Solves the trellis at every sample of the two-cell path. The root is the
/// nominal best server, the BS with the larger mean estimate at `n - 1`, so
/// every objective faces the same sequence of problems.
pub fn optimal_h_profile(scn: &Scenario, objective: Objective) -> Result<Vec<ProfileRow>> {
    if scn.layout.len() != 2 {
        return Err(Error::Config("the margin profile needs a two-cell layout".into()));
    }
    let planner = Planner::new(scn, objective)?;
    let pair = scn.pair(0, 1);
    let mut rows = Vec::with_capacity(scn.len());
    for n in 1..scn.len() {
        let root = u8::from(pair.mean(Coord::Y(n - 1)) < 0.0);
        let sol = planner.solve(n, 0, 1, root)?;
        let stages = sol.path.p_h.len().max(1) as f64;
        rows.push(ProfileRow {
            n,
            root,
            h: sol.h,
            next_b: sol.next_b,
            mean_p_h: sol.path.p_h.iter().sum::<f64>() / stages,
            mean_p_o: sol.path.p_o.iter().sum::<f64>() / stages,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub z: f64,
    /// Horizon-average probabilities of the chosen paths, averaged along the path.
    pub mean_p_h: f64,
    pub mean_p_o: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSweep {
    pub rows: Vec<ParetoRow>,
    /// Weight at the point of largest curvature of the frontier.
    pub knee_z: Option<f64>,
}

pub fn pareto_sweep(scn: &Scenario, zs: &[f64]) -> Result<ParetoSweep> {
    let mut rows = Vec::with_capacity(zs.len());
    for &z in zs {
        let prof = optimal_h_profile(scn, Objective::Pareto { z })?;
        let k = prof.len() as f64;
        rows.push(ParetoRow {
            z,
            mean_p_h: prof.iter().map(|r| r.mean_p_h).sum::<f64>() / k,
            mean_p_o: prof.iter().map(|r| r.mean_p_o).sum::<f64>() / k,
        });
    }
    let knee_z = knee(&rows);
    Ok(ParetoSweep { rows, knee_z })
}

/// Interior point of largest Menger curvature, on axes rescaled to `[0, 1]`.
/// Repeated points collapse to the first weight that reached them.
fn knee(rows: &[ParetoRow]) -> Option<f64> {
    let mut rows: Vec<ParetoRow> = rows.to_vec();
    rows.dedup_by(|b, a| a.mean_p_h == b.mean_p_h && a.mean_p_o == b.mean_p_o);
    let rows = rows.as_slice();
    if rows.len() < 3 {
        return None;
    }
    let range = |f: fn(&ParetoRow) -> f64| {
        let lo = rows.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi - lo)
    };
    let (h0, hs) = range(|r| r.mean_p_h);
    let (o0, os) = range(|r| r.mean_p_o);
    if !(hs > 0.0 && os > 0.0) {
        return None;
    }
    let pt = |r: &ParetoRow| ((r.mean_p_h - h0) / hs, (r.mean_p_o - o0) / os);
    let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    let mut best: Option<(f64, f64)> = None;
    for w in rows.windows(3) {
        let (a, b, c) = (pt(&w[0]), pt(&w[1]), pt(&w[2]));
        let area2 = ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).abs();
        let denom = dist(a, b) * dist(b, c) * dist(a, c);
        let curv = if denom > 0.0 { 2.0 * area2 / denom } else { 0.0 };
        if best.is_none_or(|(k, _)| curv > k) {
            best = Some((curv, w[1].z));
        }
    }
    best.filter(|(k, _)| *k > 0.0).map(|(_, z)| z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(z: f64, h: f64, o: f64) -> ParetoRow {
        ParetoRow { z, mean_p_h: h, mean_p_o: o }
    }

    #[test]
    fn knee_is_the_corner_of_an_l() {
        let rows = [row(0.0, 1.0, 0.0), row(0.5, 0.5, 0.05), row(0.6, 0.05, 0.1), row(0.8, 0.0, 0.6), row(1.0, 0.0, 1.0)];
        assert_eq!(knee(&rows), Some(0.6));
        assert_eq!(knee(&rows[..2]), None);
        assert_eq!(knee(&[row(0.0, 1.0, 1.0), row(0.5, 1.0, 1.0), row(1.0, 1.0, 1.0)]), None);
    }
}
