//! The hybrid system: continuous state `S = [p0, p1, l0, l1]` updated as
//! `S(n+1) = A(n) S(n) - f(d(n+1), d(n)) + W(n)`, and the connection bit
//! `b(n)` driven by `y(n) = l0(n) - l1(n)` against the hysteresis `h(n)`.
//!
//! The recursion adds `G_s(n+1) * p_s(n+1)` to the previous estimate, so it
//! matches a windowed estimator only when earlier coefficients stay fixed
//! (a growing window of constant per-sample weights). Elsewhere the
//! estimators module is the reference for `l_s(n)`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridState {
    pub s: Vector4<f64>,
    /// 1 when connected to BS1.
    pub b: u8,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub a: Matrix4<f64>,
    pub f: Vector4<f64>,
    pub w: Vector4<f64>,
}

impl Transition {
    /// `g` holds the newest-sample coefficients `G_s(n+1)`; `d` and `u` hold
    /// `(value at n, value at n+1)` per link.
    pub fn new(g: [f64; 2], beta: [f64; 2], d: [(f64, f64); 2], u: [(f64, f64); 2]) -> Self {
        let mut a = Matrix4::identity();
        a[(2, 0)] = g[0];
        a[(3, 1)] = g[1];
        let lr = |s: usize| beta[s] * (d[s].1 / d[s].0).log10();
        let du = |s: usize| u[s].1 - u[s].0;
        let f = Vector4::new(lr(0), lr(1), g[0] * lr(0), g[1] * lr(1));
        let w = Vector4::new(du(0), du(1), g[0] * du(0), g[1] * du(1));
        Self { a, f, w }
    }
}

/// Advances the continuous state one sample. `b` is carried unchanged; call [`decide`] for it.
pub fn step(state: &HybridState, tr: &Transition) -> HybridState {
    HybridState { s: tr.a * state.s - tr.f + tr.w, b: state.b, n: state.n + 1 }
}

/// Hysteresis rule: BS1 iff `y <= -h`, or `y <= h` while already on BS1.
/// Matches [`region`]: `L` switches to BS1, `N` to BS0, `M` keeps `b_prev`.
pub fn decide(b_prev: u8, y: f64, h: f64) -> u8 {
    u8::from(y <= -h || (y <= h && b_prev == 1))
}

/// Which of the three hysteresis regions `y` falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `y <= -h`, favours BS1.
    L,
    /// `-h < y <= h`, the dead zone.
    M,
    /// `y > h`, favours BS0.
    N,
}

pub fn region(y: f64, h: f64) -> Region {
    if y <= -h {
        Region::L
    } else if y <= h {
        Region::M
    } else {
        Region::N
    }
}

/// Runs [`decide`] along a path; returns `b(0..)` and the switch count.
pub fn run_decisions(b0: u8, y: &[f64], h: &[f64]) -> (Vec<u8>, usize) {
    let mut b = b0;
    let mut switches = 0;
    let out = y
        .iter()
        .zip(h)
        .map(|(&yi, &hi)| {
            let nb = decide(b, yi, hi);
            switches += usize::from(nb != b);
            b = nb;
            nb
        })
        .collect();
    (out, switches)
}
