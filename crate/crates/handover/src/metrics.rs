//! Connection, handover and outage probabilities along a trace.
//!
//! Decisions happen at samples `n >= 1`; the connection `b(0)` is given.
//! `Pr[E(n)]` (connected to BS1) expands into mutually exclusive histories:
//! the last crossing below `-h` at sample `j`, followed by dead-zone samples
//! up to `n`, plus the all-dead-zone history that keeps `b(0)`.
//! Histories longer than the depth `K` are cut: the remainder
//! `Pr{extra, M(m+1..n)} * Pr[E(m)]` treats the dead-zone run and the
//! connection state at `m = n - K` as independent, with `Pr[E(m)]` taken
//! from the same recursion. Up to `n <= K` the expansion is exact.
//!
//! The subscripts of `P_H01`/`P_H10` follow the source formulas:
//! `P_H01 = Pr[N(n) E(n-1)]` is a BS1-to-BS0 switch and
//! `P_H10 = Pr[L(n) not-E(n-1)]` a BS0-to-BS1 switch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{approx1, approx2_bounds, approx3_upper, exact_prob, Bound, Coord, EventSpec, GaussianVector, PairModel, Prob};

/// Smallest connection probability an outage figure may be conditioned on.
pub const MIN_CONDITIONING: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Approx1 { group: usize },
    Approx2Lower,
    Approx2Upper,
    Approx3 { split: usize },
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Approx1 { .. } => "approx1",
            Method::Approx2Lower => "approx2-lower",
            Method::Approx2Upper => "approx2-upper",
            Method::Approx3 { .. } => "approx3",
        }
    }
}

/// Turns one event into a probability with the selected method. Every event
/// gets a Monte Carlo stream keyed on its own content, so the same event
/// always sees the same draws regardless of evaluation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluator {
    pub method: Method,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Evaluator {
    pub fn exact(mc_samples: usize, seed: u64) -> Self {
        Self { method: Method::Exact, mc_samples, seed }
    }

    pub fn prob(&self, gv: &GaussianVector, ev: &EventSpec) -> Result<Prob> {
        if ev.is_null() {
            return Ok(Prob::ZERO);
        }
        let seed = crate::rng::derive_seed(self.seed, event_key(ev));
        match self.method {
            Method::Exact => exact_prob(gv, ev, self.mc_samples, seed),
            Method::Approx1 { group } => approx1(gv, ev, group, self.mc_samples, seed).map(Prob::exact),
            Method::Approx2Lower => approx2_bounds(gv, ev).map(|b| Prob::exact(b.0)),
            Method::Approx2Upper => approx2_bounds(gv, ev).map(|b| Prob::exact(b.1)),
            Method::Approx3 { split } => approx3_upper(gv, ev, split, self.mc_samples, seed).map(Prob::exact),
        }
    }

    /// Builds the joint vector for `bounds` from `pair` and evaluates it.
    pub fn prob_of(&self, pair: &PairModel, bounds: &[Bound]) -> Result<Prob> {
        if bounds.is_empty() {
            return Ok(Prob::ONE);
        }
        let ev = EventSpec::new(bounds.to_vec())?;
        if ev.is_null() {
            return Ok(Prob::ZERO);
        }
        let coords: Vec<Coord> = bounds.iter().map(|b| b.coord).collect();
        self.prob(&pair.vector(&coords)?, &ev)
    }
}

/// Content hash of an event, used to key its Monte Carlo stream.
pub fn event_key(ev: &EventSpec) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    let mut mix = |v: u64| h = crate::rng::derive_seed(h, v);
    for b in &ev.bounds {
        match b.coord {
            Coord::Y(n) => mix(n as u64),
            Coord::P(s, n) => {
                mix(1 << 63 | (s as u64) << 40);
                mix(n as u64);
            }
        }
        mix(b.lo.to_bits());
        mix(b.hi.to_bits());
    }
    h
}

/// `y(n) <= -h`.
pub fn ell(n: usize, h: f64) -> Bound {
    Bound { coord: Coord::Y(n), lo: f64::NEG_INFINITY, hi: -h }
}

/// `-h < y(n) <= h`.
pub fn em(n: usize, h: f64) -> Bound {
    Bound { coord: Coord::Y(n), lo: -h, hi: h }
}

/// `y(n) > h`.
pub fn en(n: usize, h: f64) -> Bound {
    Bound { coord: Coord::Y(n), lo: h, hi: f64::INFINITY }
}

/// `p_s(n) <= threshold`.
pub fn outage_box(s: usize, n: usize, threshold: f64) -> Bound {
    Bound { coord: Coord::P(s, n), lo: f64::NEG_INFINITY, hi: threshold }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionProb {
    pub n: usize,
    /// `Pr[E(n)]`, connected to BS1.
    pub p_connected_bs1: f64,
    /// `Pr[not E(n)]`, connected to BS0.
    pub p_connected_bs0: f64,
    pub stderr_bs1: f64,
    pub stderr_bs0: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandoverOutageProbs {
    pub n: usize,
    pub method: Method,
    pub p_h: f64,
    pub p_h01: f64,
    pub p_h10: f64,
    pub p_h_stderr: f64,
    /// Sum of the two conditional outage probabilities, as literally defined (may exceed 1).
    pub p_o: f64,
    pub p_o0: f64,
    pub p_o1: f64,
    /// `Pr[P0(n), not E(n)] + Pr[P1(n), E(n)]`: probability the serving link is in outage.
    pub p_o_mixture: f64,
    pub p_o_stderr: f64,
    /// Hysteresis at sample `n`.
    pub h: f64,
}

/// Which connection event a history expansion targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `E(n)`, connected to BS1; histories end with a crossing below `-h`.
    Bs1,
    /// `not E(n)`; histories end with a crossing above `h`.
    Bs0,
}

/// All `Pr[E(n)]` for a pair model under a hysteresis sequence, plus the
/// handover and outage figures built on them.
pub struct Metrics<'a> {
    pair: &'a PairModel,
    h: &'a [f64],
    b0: u8,
    depth: usize,
    eval: Evaluator,
    conn: Vec<ConnectionProb>,
}

impl<'a> Metrics<'a> {
    /// `h[n]` is the hysteresis applied at sample `n` (entry 0 is unused).
    pub fn new(pair: &'a PairModel, h: &'a [f64], b0: u8, depth: usize, eval: Evaluator) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Config("truncation depth K must be at least 1".into()));
        }
        if h.len() < pair.len() {
            return Err(Error::Config(format!("hysteresis vector has {} entries for {} samples", h.len(), pair.len())));
        }
        if let Some(bad) = h.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::Config(format!("hysteresis must be non-negative, got {bad}")));
        }
        let c0 = ConnectionProb {
            n: 0,
            p_connected_bs1: f64::from(b0),
            p_connected_bs0: 1.0 - f64::from(b0),
            stderr_bs1: 0.0,
            stderr_bs0: 0.0,
            method: eval.method,
        };
        Ok(Self { pair, h, b0, depth, eval, conn: vec![c0] })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn crossing(&self, target: Target, j: usize) -> Bound {
        match target {
            Target::Bs1 => ell(j, self.h[j]),
            Target::Bs0 => en(j, self.h[j]),
        }
    }

    fn state_prob(&mut self, target: Target, m: usize) -> Result<(f64, f64)> {
        let c = self.connection(m)?;
        Ok(match target {
            Target::Bs1 => (c.p_connected_bs1, c.stderr_bs1),
            Target::Bs0 => (c.p_connected_bs0, c.stderr_bs0),
        })
    }

    /// `Pr[extra and target(n_last)]` through the truncated expansion.
    /// Standard errors of the terms are added linearly, which stays an upper
    /// bound whatever their correlation.
    pub fn joint_with_state(&mut self, target: Target, n_last: usize, extra: &[Bound]) -> Result<Prob> {
        let budget = self.depth.saturating_sub(extra.len());
        let m = n_last.saturating_sub(budget);
        let mut p = 0.0;
        let mut se = 0.0;
        let mut jittered = false;
        let mut bounds: Vec<Bound> = Vec::with_capacity(extra.len() + budget + 1);
        for j in (m + 1)..=n_last {
            bounds.clear();
            bounds.extend_from_slice(extra);
            bounds.push(self.crossing(target, j));
            bounds.extend(((j + 1)..=n_last).map(|k| em(k, self.h[k])));
            let t = self.eval.prob_of(self.pair, &bounds)?;
            p += t.p;
            se += t.stderr;
            jittered |= t.jittered;
        }
        bounds.clear();
        bounds.extend_from_slice(extra);
        bounds.extend(((m + 1)..=n_last).map(|k| em(k, self.h[k])));
        let (state, state_se) = self.state_prob(target, m)?;
        if state > 0.0 {
            let t = self.eval.prob_of(self.pair, &bounds)?;
            p += t.p * state;
            se += t.stderr * state + t.p * state_se;
            jittered |= t.jittered;
        }
        Ok(Prob { p, stderr: se, jittered })
    }

    /// `Pr[E(n)]` and `Pr[not E(n)]`.
    pub fn connection(&mut self, n: usize) -> Result<ConnectionProb> {
        while self.conn.len() <= n {
            let k = self.conn.len();
            let e = self.joint_with_state(Target::Bs1, k, &[])?;
            let ne = self.joint_with_state(Target::Bs0, k, &[])?;
            self.conn.push(ConnectionProb {
                n: k,
                p_connected_bs1: e.p,
                p_connected_bs0: ne.p,
                stderr_bs1: e.stderr,
                stderr_bs0: ne.stderr,
                method: self.eval.method,
            });
        }
        Ok(self.conn[n])
    }

    /// `P_H(n) = Pr[N(n) E(n-1)] + Pr[L(n) not-E(n-1)]`, for `n >= 1`.
    pub fn handover(&mut self, n: usize) -> Result<(f64, f64, f64)> {
        assert!(n >= 1, "handover needs a previous sample");
        let h01 = self.joint_with_state(Target::Bs1, n - 1, &[en(n, self.h[n])])?;
        let h10 = self.joint_with_state(Target::Bs0, n - 1, &[ell(n, self.h[n])])?;
        Ok((h01.p, h10.p, h01.stderr + h10.stderr))
    }

    fn outage_parts(&mut self, n: usize, threshold: f64) -> Result<(Prob, Prob, ConnectionProb)> {
        let c = self.connection(n)?;
        let num0 = self.joint_with_state(Target::Bs0, n, &[outage_box(0, n, threshold)])?;
        let num1 = self.joint_with_state(Target::Bs1, n, &[outage_box(1, n, threshold)])?;
        Ok((num0, num1, c))
    }

    /// Outage at `n`: `(P_O0, P_O1, mixture, mixture stderr)`. The first two
    /// are conditional on the serving BS; a conditioning probability below
    /// [`MIN_CONDITIONING`] is an error naming the side.
    pub fn outage(&mut self, n: usize, threshold: f64) -> Result<(f64, f64, f64, f64)> {
        let (num0, num1, c) = self.outage_parts(n, threshold)?;
        if c.p_connected_bs0 < MIN_CONDITIONING {
            return Err(Error::DegenerateConditioning { side: "BS0 (not E)", value: c.p_connected_bs0 });
        }
        if c.p_connected_bs1 < MIN_CONDITIONING {
            return Err(Error::DegenerateConditioning { side: "BS1 (E)", value: c.p_connected_bs1 });
        }
        Ok((num0.p / c.p_connected_bs0, num1.p / c.p_connected_bs1, num0.p + num1.p, num0.stderr + num1.stderr))
    }

    /// Handover and outage figures at `n >= 1`. When one connection state is
    /// (numerically) impossible its conditional outage is reported as NaN and
    /// the mixture is still filled in.
    pub fn at(&mut self, n: usize, threshold: f64) -> Result<HandoverOutageProbs> {
        let (p_h01, p_h10, p_h_stderr) = self.handover(n)?;
        let (num0, num1, c) = self.outage_parts(n, threshold)?;
        let cond = |num: f64, den: f64| if den < MIN_CONDITIONING { f64::NAN } else { num / den };
        let p_o0 = cond(num0.p, c.p_connected_bs0);
        let p_o1 = cond(num1.p, c.p_connected_bs1);
        Ok(HandoverOutageProbs {
            n,
            method: self.eval.method,
            p_h: p_h01 + p_h10,
            p_h01,
            p_h10,
            p_h_stderr,
            p_o: p_o0 + p_o1,
            p_o0,
            p_o1,
            p_o_mixture: num0.p + num1.p,
            p_o_stderr: num0.stderr + num1.stderr,
            h: self.h[n],
        })
    }

    pub fn b0(&self) -> u8 {
        self.b0
    }
}

/// Writes per-sample results; columns are fixed.
pub fn write_csv<W: std::io::Write>(rows: &[HandoverOutageProbs], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "method", "P_H", "P_H01", "P_H10", "P_O", "P_O0", "P_O1", "P_O_mixture", "h"])?;
    for r in rows {
        w.write_record(&[
            r.n.to_string(),
            r.method.tag().to_string(),
            format!("{}", r.p_h),
            format!("{}", r.p_h01),
            format!("{}", r.p_h10),
            format!("{}", r.p_o),
            format!("{}", r.p_o0),
            format!("{}", r.p_o1),
            format!("{}", r.p_o_mixture),
            format!("{}", r.h),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
