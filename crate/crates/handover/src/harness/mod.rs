//! Monte Carlo experiments: trials of the full pipeline under a hysteresis
//! policy, their empirical aggregates, and the analytic counterparts.
//!
//! Each trial draws its channel from its own stream derived from the
//! configured seed and trial index, and results are reduced in trial order,
//! so a run is bit-identical whatever the worker count.

mod emit;
mod study;

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_with_rng, ChannelParams};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, LinkEstimator};
use crate::gaussian::{LinkModel, PairModel};
use crate::hybrid::decide;
use crate::metrics::{Evaluator, HandoverOutageProbs, Metrics};
use crate::optimizer::{solve_with_tables, HGrid, Objective, Solution, StageStats, StageTable, TrellisProblem};
use crate::scenario::{build_linear_trace, distances, CellLayout, Distances, MobilityTrace};

pub use emit::{
    accuracy_csv, pareto_csv, profile_csv, run_json, run_samples_csv, table_csv, table_long_csv, write_atomic, Summary,
};
pub use study::{
    optimal_h_profile, pareto_sweep, run_accuracy_study, run_table, AccuracyRow, AccuracyStudy, ParetoRow,
    ParetoSweep, ProfileRow, SweepSpec, TableCell, TableResult,
};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "HANDOVER_WORKERS";

/// Worker count from [`WORKERS_ENV`]; zero or unset lets the pool decide.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| Error::Config(format!("{WORKERS_ENV}={s:?} is not a count"))),
        Err(_) => Ok(0),
    }
}

/// A configuration turned into geometry and per-link models.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub layout: CellLayout,
    pub trace: MobilityTrace,
    pub dist: Distances,
    pub params: Vec<ChannelParams>,
    /// Nominal filter model of every link, shared with the analysis.
    pub links: Vec<Arc<LinkModel>>,
    pub threshold: f64,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let layout = config.layout.build()?;
        let trace = build_linear_trace(&layout, &config.line(), config.speed_mps, config.sample_interval_s)?;
        if trace.len() < 2 {
            return Err(Error::Config(format!("trace has {} sample(s); at least 2 are needed", trace.len())));
        }
        let dist = distances(&trace, &layout)?;
        let params = vec![config.channel; layout.len()];
        // GELS has no fixed filter; its nominal model is LS.
        let nominal = match config.estimator.kind {
            EstimatorKind::Avg => EstimatorKind::Avg,
            _ => EstimatorKind::Ls,
        };
        let links = (0..layout.len())
            .map(|s| Arc::new(LinkModel::new(params[s], dist.row(s).to_vec(), nominal, config.estimator.n_w)))
            .collect();
        Ok(Self { threshold: config.outage_threshold(), config: config.clone(), layout, trace, dist, params, links })
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    pub fn dc(&self) -> f64 {
        self.trace.sample_distance()
    }

    /// Pair model with `a` as the first link of `y = l_a - l_b`.
    pub fn pair(&self, a: usize, b: usize) -> PairModel {
        PairModel::new(self.links[a].clone(), self.links[b].clone(), self.dc())
    }

    pub fn grid(&self) -> Result<HGrid> {
        HGrid::new(0.0, self.config.h_max_db, self.config.optimizer.h_step_db)
    }
}

/// How the hysteresis is chosen at each sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Constant(f64),
    /// Fewest handovers under the outage cap.
    Opt1,
    /// Fewest outages under the handover cap.
    Opt2,
    /// Weighted handovers and outages.
    Opt3,
}

impl Policy {
    pub fn label(&self) -> String {
        match self {
            Policy::Constant(h) => format!("h={h}"),
            Policy::Opt1 => "opt1".into(),
            Policy::Opt2 => "opt2".into(),
            Policy::Opt3 => "opt3".into(),
        }
    }

    pub fn objective(&self, z: f64) -> Option<Objective> {
        match self {
            Policy::Constant(_) => None,
            Policy::Opt1 => Some(Objective::MinHandover),
            Policy::Opt2 => Some(Objective::MinOutage),
            Policy::Opt3 => Some(Objective::Pareto { z }),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "opt1" => Ok(Policy::Opt1),
            "opt2" => Ok(Policy::Opt2),
            "opt3" => Ok(Policy::Opt3),
            other => {
                let h: f64 = other
                    .trim_start_matches("h=")
                    .parse()
                    .map_err(|_| Error::Config(format!("unknown policy {s:?}; use a margin in dB or opt1/opt2/opt3")))?;
                if !(h >= 0.0) {
                    return Err(Error::Config(format!("constant margin must be non-negative, got {h}")));
                }
                Ok(Policy::Constant(h))
            }
        }
    }
}

/// Receding-horizon solver for one scenario and objective, memoized on
/// `(sample, first link, second link, root state)`. Stage tables are shared
/// across roots.
pub struct Planner<'a> {
    scn: &'a Scenario,
    objective: Objective,
    grid: Vec<f64>,
    hgrid: HGrid,
    tables: Mutex<HashMap<(usize, usize, usize), Arc<StageTable>>>,
    decisions: Mutex<HashMap<(usize, usize, usize, u8), f64>>,
}

impl<'a> Planner<'a> {
    pub fn new(scn: &'a Scenario, objective: Objective) -> Result<Self> {
        let hgrid = scn.grid()?;
        Ok(Self {
            scn,
            objective,
            grid: hgrid.points(),
            hgrid,
            tables: Mutex::new(HashMap::new()),
            decisions: Mutex::new(HashMap::new()),
        })
    }

    fn table(&self, t: usize, a: usize, b: usize) -> Arc<StageTable> {
        if let Some(tab) = self.tables.lock().expect("table cache").get(&(t, a, b)) {
            return tab.clone();
        }
        let stats = StageStats::from_pair(&self.scn.pair(a, b), t);
        let tab = Arc::new(StageTable::new(stats, &self.grid, self.scn.threshold));
        self.tables.lock().expect("table cache").insert((t, a, b), tab.clone());
        tab
    }

    /// Full solution at sample `n` for the pair `(a, b)` entered in state `root`.
    /// Stages past the end of the trace reuse the last sample's statistics.
    pub fn solve(&self, n: usize, a: usize, b: usize, root: u8) -> Result<Solution> {
        let cfg = &self.scn.config;
        let last = self.scn.len() - 1;
        let tables: Vec<StageTable> =
            (0..cfg.horizon).map(|i| (*self.table((n + i).min(last), a, b)).clone()).collect();
        let problem = TrellisProblem {
            horizon: cfg.horizon,
            objective: self.objective,
            p_out: cfg.optimizer.p_out,
            p_han: cfg.optimizer.p_han,
            grid: self.hgrid,
            b_init: root,
            stages: tables.iter().map(|t| t.stats).collect(),
            outage_threshold: self.scn.threshold,
            outage_form: cfg.optimizer.outage_form,
            plan_consistency: cfg.optimizer.plan_consistency,
        };
        solve_with_tables(&problem, &tables, &self.grid)
    }

    /// Margin to apply at sample `n`.
    pub fn margin(&self, n: usize, a: usize, b: usize, root: u8) -> Result<f64> {
        let key = (n, a, b, root);
        if let Some(h) = self.decisions.lock().expect("decision cache").get(&key) {
            return Ok(*h);
        }
        let h = self.solve(n, a, b, root)?.h;
        self.decisions.lock().expect("decision cache").insert(key, h);
        Ok(h)
    }
}

enum Margins<'a> {
    Constant(f64),
    Planned(Planner<'a>),
}

impl Margins<'_> {
    fn at(&self, n: usize, a: usize, b: usize, root: u8) -> Result<f64> {
        match self {
            Margins::Constant(h) => Ok(*h),
            Margins::Planned(p) => p.margin(n, a, b, root),
        }
    }
}

/// Per-trial totals over samples `1..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLog {
    pub switches: u32,
    pub outages: u32,
}

/// Per-sample sums over all trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub n: usize,
    pub switches: u64,
    pub outages: u64,
    /// Mean hysteresis applied at this sample.
    pub h_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Analytic {
    pub depth: usize,
    /// `sum_n P_H(n)`.
    pub h_bar: f64,
    pub h_bar_stderr: f64,
    /// `sum_n` of the outage mixture, the expected number of samples in outage.
    pub o_bar: f64,
    pub o_bar_stderr: f64,
    /// `sum_n P_O(n)` with both conditionals, over samples where both are defined.
    pub o_bar_conditional: f64,
}

/// Which trial loop a run used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Fixed pair `(BS0, BS1)`, starting on the configured BS.
    TwoCell,
    /// Serving BS against the strongest other estimate, starting on the strongest.
    Multicell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub mode: RunMode,
    pub policy: Policy,
    pub config: ScenarioConfig,
    pub config_hash: String,
    pub seed: u64,
    pub trials: usize,
    pub samples: usize,
    /// Empirical `H` and `O` per trip.
    pub mean_switches: f64,
    pub switches_stderr: f64,
    pub mean_outages: f64,
    pub outages_stderr: f64,
    pub per_sample: Vec<SampleCounts>,
    pub trial_log: Vec<TrialLog>,
    pub analytic: Option<Analytic>,
    /// Not part of any output file, which must not depend on timing.
    #[serde(skip)]
    pub wall_time_s: f64,
}

struct Trial {
    log: TrialLog,
    /// Per sample: bit 0 switch, bit 1 outage.
    events: Vec<u8>,
    h: Vec<f64>,
}

/// Linear estimates for the data-independent filters, a stateful estimator otherwise.
enum LinkFilter<'a> {
    Fixed(&'a LinkModel),
    Adaptive(LinkEstimator),
}

impl LinkFilter<'_> {
    fn estimate(&mut self, n: usize, p: &[f64], dist: &[f64], h: f64) -> f64 {
        match self {
            LinkFilter::Fixed(m) => m.coeffs[n].apply(p),
            LinkFilter::Adaptive(e) => e.estimate(n, p, dist, h).l,
        }
    }
}

fn run_trial(scn: &Scenario, margins: &Margins, mode: RunMode, trial: usize) -> Result<Trial> {
    let cfg = &scn.config;
    let n_total = scn.len();
    let bs = scn.layout.len();
    let mut rng = crate::rng::stream(cfg.seed, trial as u64);
    let (p, _) = sample_with_rng(&scn.params, &scn.dist, scn.dc(), &mut rng);
    let mut filters: Vec<LinkFilter> = (0..bs)
        .map(|s| match cfg.estimator.kind {
            EstimatorKind::Avg | EstimatorKind::Ls => LinkFilter::Fixed(&scn.links[s]),
            kind => LinkFilter::Adaptive(LinkEstimator::new(kind, cfg.estimator.n_w, cfg.estimator.gamma, cfg.h_max_db)),
        })
        .collect();
    let mut l = vec![0.0; bs];
    let mut h_prev = 0.0;
    let mut estimate_all = |n: usize, h: f64, l: &mut [f64]| {
        for (s, f) in filters.iter_mut().enumerate() {
            l[s] = f.estimate(n, &p[s][..=n], &scn.dist.row(s)[..=n], h);
        }
    };
    estimate_all(0, h_prev, &mut l);
    let mut serving = match mode {
        RunMode::TwoCell => usize::from(cfg.initial_bs),
        RunMode::Multicell => argmax_except(&l, usize::MAX),
    };
    let mut trial_out = Trial { log: TrialLog { switches: 0, outages: 0 }, events: vec![0; n_total], h: vec![0.0; n_total] };
    for n in 1..n_total {
        estimate_all(n, h_prev, &mut l);
        let next = match mode {
            RunMode::TwoCell => {
                let b = serving as u8;
                let h = margins.at(n, 0, 1, b)?;
                trial_out.h[n] = h;
                h_prev = h;
                usize::from(decide(b, l[0] - l[1], h))
            }
            RunMode::Multicell => {
                let cand = argmax_except(&l, serving);
                let h = margins.at(n, serving, cand, 0)?;
                trial_out.h[n] = h;
                h_prev = h;
                if decide(0, l[serving] - l[cand], h) == 1 {
                    cand
                } else {
                    serving
                }
            }
        };
        if next != serving {
            trial_out.log.switches += 1;
            trial_out.events[n] |= 1;
        }
        serving = next;
        if p[serving][n] <= scn.threshold {
            trial_out.log.outages += 1;
            trial_out.events[n] |= 2;
        }
    }
    Ok(trial_out)
}

/// Index of the largest entry other than `skip`; ties go to the lower index.
fn argmax_except(l: &[f64], skip: usize) -> usize {
    let mut best = usize::MAX;
    for (s, &v) in l.iter().enumerate() {
        if s != skip && (best == usize::MAX || v > l[best]) {
            best = s;
        }
    }
    best
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Runs `trials` trials on `workers` threads (0 = pool default).
pub fn run(scn: &Scenario, policy: Policy, mode: RunMode, trials: usize, workers: usize) -> Result<RunResult> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if mode == RunMode::TwoCell && scn.layout.len() != 2 {
        return Err(Error::Config(format!("two-cell run needs 2 base stations, layout has {}", scn.layout.len())));
    }
    let start = Instant::now();
    let margins = match policy.objective(scn.config.optimizer.z) {
        None => match policy {
            Policy::Constant(h) if h >= 0.0 => Margins::Constant(h),
            _ => return Err(Error::Config(format!("bad policy {policy:?}"))),
        },
        Some(obj) => Margins::Planned(Planner::new(scn, obj)?),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Trial> =
        pool.install(|| (0..trials).into_par_iter().map(|i| run_trial(scn, &margins, mode, i)).collect::<Result<_>>())?;

    let n_total = scn.len();
    let mut per_sample: Vec<SampleCounts> =
        (0..n_total).map(|n| SampleCounts { n, switches: 0, outages: 0, h_mean: 0.0 }).collect();
    for t in &results {
        for (row, (&ev, &h)) in per_sample.iter_mut().zip(t.events.iter().zip(&t.h)) {
            row.switches += u64::from(ev & 1);
            row.outages += u64::from(ev >> 1 & 1);
            row.h_mean += h;
        }
    }
    for row in &mut per_sample {
        row.h_mean /= trials as f64;
    }
    let trial_log: Vec<TrialLog> = results.iter().map(|t| t.log).collect();
    let (mean_switches, switches_stderr) = mean_and_stderr(trial_log.iter().map(|t| f64::from(t.switches)), trials);
    let (mean_outages, outages_stderr) = mean_and_stderr(trial_log.iter().map(|t| f64::from(t.outages)), trials);
    Ok(RunResult {
        mode,
        policy,
        config: scn.config.clone(),
        config_hash: scn.config.hash(),
        seed: scn.config.seed,
        trials,
        samples: n_total,
        mean_switches,
        switches_stderr,
        mean_outages,
        outages_stderr,
        per_sample,
        trial_log,
        analytic: None,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_two_cell(scn: &Scenario, policy: Policy, trials: usize, workers: usize) -> Result<RunResult> {
    run(scn, policy, RunMode::TwoCell, trials, workers)
}

pub fn run_multicell(scn: &Scenario, policy: Policy, trials: usize, workers: usize) -> Result<RunResult> {
    run(scn, policy, RunMode::Multicell, trials, workers)
}

/// Analytic per-sample figures of a two-cell scenario under the margins `h`
/// (entry `n` applies at sample `n`), at truncation depth `depth`.
pub fn analytic_samples(scn: &Scenario, h: &[f64], depth: usize, eval: Evaluator) -> Result<Vec<HandoverOutageProbs>> {
    if scn.layout.len() != 2 {
        return Err(Error::Config("analytic figures need a two-cell layout".into()));
    }
    let pair = scn.pair(0, 1);
    let mut m = Metrics::new(&pair, h, scn.config.initial_bs, depth, eval)?;
    (1..scn.len()).map(|n| m.at(n, scn.threshold)).collect()
}

/// Sums of the per-sample figures over samples `1..N`.
pub fn analytic_aggregates(rows: &[HandoverOutageProbs], depth: usize) -> Analytic {
    let sum = |f: fn(&HandoverOutageProbs) -> f64| rows.iter().map(f).sum::<f64>();
    Analytic {
        depth,
        h_bar: sum(|r| r.p_h),
        h_bar_stderr: sum(|r| r.p_h_stderr),
        o_bar: sum(|r| r.p_o_mixture),
        o_bar_stderr: sum(|r| r.p_o_stderr),
        o_bar_conditional: rows.iter().map(|r| r.p_o).filter(|x| x.is_finite()).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_parse() {
        assert_eq!("opt2".parse::<Policy>().unwrap(), Policy::Opt2);
        assert_eq!("2.5".parse::<Policy>().unwrap(), Policy::Constant(2.5));
        assert_eq!("h=4".parse::<Policy>().unwrap(), Policy::Constant(4.0));
        assert!("-1".parse::<Policy>().is_err());
        assert!("fast".parse::<Policy>().is_err());
    }

    #[test]
    fn argmax_skips_and_breaks_ties_low() {
        assert_eq!(argmax_except(&[1.0, 3.0, 3.0], usize::MAX), 1);
        assert_eq!(argmax_except(&[1.0, 3.0, 3.0], 1), 2);
        assert_eq!(argmax_except(&[5.0, 3.0], 0), 1);
    }
}
