//! Trellis search for the hysteresis margins over a receding horizon.
//!
//! The root of the trellis is the connection `b(n-1)` held before sample
//! `n`; stage `i` covers sample `n + i` and moves the connection from the
//! path's state at stage `i` to its state at stage `i + 1` under `h(n + i)`.
//! Only the first stage's decision is applied; the caller re-solves at the
//! next sample with refreshed statistics.
//!
//! Stage model: a stage's handover and outage probabilities are taken from
//! the joint Gaussian law of `(y(t), p_0(t), p_1(t))` at the stage's sample
//! given the path's state before it. With `s` the state held, the switching
//! region is `y <= -h` from BS0 and `y > h` from BS1, so
//!
//! * `P_H = Pr[y in switching region]`;
//! * `P_O = Pr[stay, p_s <= thr] + Pr[switch, p_(1-s) <= thr]` in the joint
//!   form, or the outage probability conditioned on the planned transition
//!   in the conditional form.
//!
//! A planned transition is admissible only at margins where it is the more
//! likely outcome (probability at least 1/2); otherwise the path would
//! describe a connection sequence the margins make improbable. Stage costs
//! are separable given the path, so minimizing stage by stage is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{box_prob, Coord, PairModel};

/// Hard limit on the horizon; the trellis has `2^m` paths.
pub const MAX_HORIZON: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// Minimize total handover probability subject to the outage cap.
    MinHandover,
    /// Minimize total outage probability subject to the handover cap.
    MinOutage,
    /// Minimize `sum z * P_H + (1 - z) * P_O`, no caps.
    Pareto { z: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutageForm {
    Joint,
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl HGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(min >= 0.0) || !(max >= min) {
            return Err(Error::Config(format!("bad hysteresis grid {min}..{max} step {step}")));
        }
        Ok(Self { min, max, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

/// Marginal statistics of one stage's sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub mu_y: f64,
    pub var_y: f64,
    pub mu_p: [f64; 2],
    pub var_p: [f64; 2],
    pub cov_yp: [f64; 2],
}

impl StageStats {
    pub fn from_pair(pair: &PairModel, t: usize) -> Self {
        let y = Coord::Y(t);
        let p = [Coord::P(0, t), Coord::P(1, t)];
        Self {
            mu_y: pair.mean(y),
            var_y: pair.cov(y, y),
            mu_p: [pair.mean(p[0]), pair.mean(p[1])],
            var_p: [pair.cov(p[0], p[0]), pair.cov(p[1], p[1])],
            cov_yp: [pair.cov(y, p[0]), pair.cov(y, p[1])],
        }
    }

    fn p_y(&self, lo: f64, hi: f64) -> f64 {
        let sigma = nalgebra::DMatrix::from_element(1, 1, self.var_y);
        box_prob(&[self.mu_y], &sigma, &[lo], &[hi], 0, 0).map(|p| p.p).unwrap_or(0.0)
    }

    fn p_y_and_outage(&self, lo: f64, hi: f64, s: usize, thr: f64) -> f64 {
        let sigma = nalgebra::DMatrix::from_row_slice(2, 2, &[self.var_y, self.cov_yp[s], self.cov_yp[s], self.var_p[s]]);
        box_prob(&[self.mu_y, self.mu_p[s]], &sigma, &[lo, f64::NEG_INFINITY], &[hi, thr], 0, 0)
            .map(|p| p.p)
            .unwrap_or(0.0)
    }

    /// Probabilities of one stage entered in state `s` with margin `h`.
    pub fn evaluate(&self, s: u8, h: f64, thr: f64) -> StageEval {
        let (sw, st) = if s == 0 {
            ((f64::NEG_INFINITY, -h), (-h, f64::INFINITY))
        } else {
            ((h, f64::INFINITY), (f64::NEG_INFINITY, h))
        };
        let p_switch = self.p_y(sw.0, sw.1);
        let serving = s as usize;
        StageEval {
            p_switch,
            outage_stay: self.p_y_and_outage(st.0, st.1, serving, thr),
            outage_switch: self.p_y_and_outage(sw.0, sw.1, 1 - serving, thr),
        }
    }
}

/// One stage under one margin: switching probability and the joint
/// probabilities of each outcome together with an outage on the link served afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageEval {
    pub p_switch: f64,
    pub outage_stay: f64,
    pub outage_switch: f64,
}

impl StageEval {
    pub fn p_handover(&self) -> f64 {
        self.p_switch
    }

    pub fn p_outage(&self, form: OutageForm, switch: bool) -> f64 {
        match form {
            OutageForm::Joint => self.outage_stay + self.outage_switch,
            OutageForm::Conditional => {
                let (num, den) = if switch {
                    (self.outage_switch, self.p_switch)
                } else {
                    (self.outage_stay, 1.0 - self.p_switch)
                };
                if den > 0.0 {
                    (num / den).min(1.0)
                } else {
                    1.0
                }
            }
        }
    }

    /// Probability of the planned transition.
    pub fn p_planned(&self, switch: bool) -> f64 {
        if switch {
            self.p_switch
        } else {
            1.0 - self.p_switch
        }
    }
}

/// Every margin of the grid evaluated for both entry states of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTable {
    pub stats: StageStats,
    pub evals: [Vec<StageEval>; 2],
}

impl StageTable {
    pub fn new(stats: StageStats, grid: &[f64], thr: f64) -> Self {
        let evals = [0u8, 1u8].map(|s| grid.iter().map(|&h| stats.evaluate(s, h, thr)).collect());
        Self { stats, evals }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrellisProblem {
    pub horizon: usize,
    pub objective: Objective,
    /// Outage cap used by `MinHandover`.
    pub p_out: f64,
    /// Handover cap used by `MinOutage` on stages that keep the connection.
    pub p_han: f64,
    pub grid: HGrid,
    /// State before the first stage.
    pub b_init: u8,
    /// One entry per stage.
    pub stages: Vec<StageStats>,
    pub outage_threshold: f64,
    pub outage_form: OutageForm,
    pub plan_consistency: bool,
}

impl TrellisProblem {
    pub fn validate(&self) -> Result<()> {
        if self.horizon > MAX_HORIZON {
            return Err(Error::HorizonTooLong(self.horizon));
        }
        if self.stages.len() < self.horizon {
            return Err(Error::Config(format!("{} stage statistics for horizon {}", self.stages.len(), self.horizon)));
        }
        if let Objective::Pareto { z } = self.objective {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::Config(format!("Pareto weight z = {z} outside [0, 1]")));
            }
        }
        for (name, cap) in [("P_out", self.p_out), ("P_han", self.p_han)] {
            if !(cap > 0.0 && cap <= 1.0) {
                return Err(Error::Config(format!("{name} = {cap} outside (0, 1]")));
            }
        }
        if self.b_init > 1 {
            return Err(Error::Config("initial state must be 0 or 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageEvent {
    /// Keep the connection.
    Stay,
    /// `y <= -h`: BS0 to BS1.
    L,
    /// `y > h`: BS1 to BS0.
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrellisPath {
    /// States after each stage; the root is not repeated.
    pub states: Vec<u8>,
    pub events: Vec<StageEvent>,
    pub h: Vec<f64>,
    pub p_h: Vec<f64>,
    pub p_o: Vec<f64>,
    pub cost: f64,
    pub feasible: bool,
    /// Largest cap violation over the stages (zero when feasible).
    pub violation: f64,
    /// False when some stage has no margin making its planned transition likely.
    pub admissible: bool,
}

impl TrellisPath {
    pub fn switches(&self) -> usize {
        self.events.iter().filter(|e| **e != StageEvent::Stay).count()
    }
}

/// All `2^m` state sequences over the horizon, first stage first.
pub fn build_trellis(horizon: usize) -> Result<Vec<Vec<u8>>> {
    if horizon > MAX_HORIZON {
        return Err(Error::HorizonTooLong(horizon));
    }
    Ok((0..1usize << horizon)
        .map(|code| (0..horizon).map(|i| ((code >> (horizon - 1 - i)) & 1) as u8).collect())
        .collect())
}

/// Per-stage figures for a planned transition under one margin:
/// `(violation, cost, p_h, p_o, admissible)`.
fn stage_score(problem: &TrellisProblem, ev: &StageEval, switch: bool) -> (f64, f64, f64, f64, bool) {
    let p_h = ev.p_handover();
    let p_o = ev.p_outage(problem.outage_form, switch);
    let admissible = !problem.plan_consistency || ev.p_planned(switch) >= 0.5;
    let (violation, cost) = match problem.objective {
        Objective::MinHandover => ((p_o - problem.p_out).max(0.0), p_h),
        Objective::MinOutage => (if switch { 0.0 } else { (p_h - problem.p_han).max(0.0) }, p_o),
        Objective::Pareto { z } => (0.0, z * p_h + (1.0 - z) * p_o),
    };
    (violation, cost, p_h, p_o, admissible)
}

/// Lexicographic comparison key for a stage choice: feasibility, violation, cost, margin.
fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    let fa = a.0 > 0.0;
    let fb = b.0 > 0.0;
    (fa, a.0, a.1, a.2).partial_cmp(&(fb, b.0, b.1, b.2)) == Some(std::cmp::Ordering::Less)
}

/// Best margin on one path, stage by stage.
pub fn optimize_path_hysteresis(states: &[u8], problem: &TrellisProblem, tables: &[StageTable], grid: &[f64]) -> TrellisPath {
    let mut prev = problem.b_init;
    let mut path = TrellisPath {
        states: states.to_vec(),
        events: Vec::with_capacity(states.len()),
        h: Vec::with_capacity(states.len()),
        p_h: Vec::with_capacity(states.len()),
        p_o: Vec::with_capacity(states.len()),
        cost: 0.0,
        feasible: true,
        violation: 0.0,
        admissible: true,
    };
    for (i, &next) in states.iter().enumerate() {
        let switch = next != prev;
        let evals = &tables[i].evals[prev as usize];
        let mut best: Option<((f64, f64, f64), f64, f64)> = None;
        for (ev, &h) in evals.iter().zip(grid) {
            let (viol, cost, p_h, p_o, ok) = stage_score(problem, ev, switch);
            if !ok {
                continue;
            }
            let key = (viol, cost, h);
            if best.as_ref().is_none_or(|b| better(key, b.0)) {
                best = Some((key, p_h, p_o));
            }
        }
        match best {
            Some(((viol, cost, h), p_h, p_o)) => {
                path.h.push(h);
                path.p_h.push(p_h);
                path.p_o.push(p_o);
                path.cost += cost;
                path.violation = path.violation.max(viol);
            }
            None => {
                path.admissible = false;
                path.h.push(f64::NAN);
                path.p_h.push(f64::NAN);
                path.p_o.push(f64::NAN);
                path.cost = f64::INFINITY;
            }
        }
        path.events.push(match (switch, prev) {
            (false, _) => StageEvent::Stay,
            (true, 0) => StageEvent::L,
            (true, _) => StageEvent::N,
        });
        prev = next;
    }
    path.feasible = path.admissible && path.violation == 0.0;
    path
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Planned connection after the first stage.
    pub next_b: u8,
    /// Margin to apply now.
    pub h: f64,
    pub path: TrellisPath,
    /// Every evaluated path, in enumeration order.
    pub paths: Vec<TrellisPath>,
}

/// Path ranking: admissible first, then feasible, then smallest violation,
/// cost, switch count and first-stage margin.
fn path_less(a: &TrellisPath, b: &TrellisPath) -> bool {
    let ka = (!a.admissible, !a.feasible, a.violation, a.cost, a.switches(), a.h.first().copied().unwrap_or(0.0));
    let kb = (!b.admissible, !b.feasible, b.violation, b.cost, b.switches(), b.h.first().copied().unwrap_or(0.0));
    ka.partial_cmp(&kb) == Some(std::cmp::Ordering::Less)
}

pub fn solve(problem: &TrellisProblem) -> Result<Solution> {
    problem.validate()?;
    let grid = problem.grid.points();
    let tables: Vec<StageTable> = problem.stages[..problem.horizon]
        .iter()
        .map(|s| StageTable::new(*s, &grid, problem.outage_threshold))
        .collect();
    solve_with_tables(problem, &tables, &grid)
}

/// As [`solve`], with the stage tables precomputed for `problem.grid`.
pub fn solve_with_tables(problem: &TrellisProblem, tables: &[StageTable], grid: &[f64]) -> Result<Solution> {
    problem.validate()?;
    let paths: Vec<TrellisPath> = build_trellis(problem.horizon)?
        .iter()
        .map(|states| optimize_path_hysteresis(states, problem, tables, grid))
        .collect();
    let mut best = 0;
    for i in 1..paths.len() {
        if path_less(&paths[i], &paths[best]) {
            best = i;
        }
    }
    let path = paths[best].clone();
    let (next_b, h) = match (path.states.first(), path.h.first()) {
        (Some(&b), Some(&h)) => (b, h),
        _ => (problem.b_init, problem.grid.min),
    };
    Ok(Solution { next_b, h, path, paths })
}

/// Solver trace: one row per path.
pub fn write_paths_csv<W: std::io::Write>(sol: &Solution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "states", "events", "h", "cost", "feasible", "admissible", "violation", "chosen"])?;
    for (i, p) in sol.paths.iter().enumerate() {
        let join = |v: Vec<String>| v.join(" ");
        w.write_record(&[
            i.to_string(),
            join(p.states.iter().map(|s| s.to_string()).collect()),
            join(p.events.iter().map(|e| format!("{e:?}")).collect()),
            join(p.h.iter().map(|h| format!("{h}")).collect()),
            format!("{}", p.cost),
            p.feasible.to_string(),
            p.admissible.to_string(),
            format!("{}", p.violation),
            (*p == sol.path).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
