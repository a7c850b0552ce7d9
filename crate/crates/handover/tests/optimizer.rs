use handover::gaussian::normal::cdf;
use handover::optimizer::{
    build_trellis, solve, HGrid, Objective, OutageForm, StageEvent, StageStats, TrellisPath, TrellisProblem, MAX_HORIZON,
};
use handover::Error;
use rand::Rng;
use rand_distr::StandardNormal;

fn stats(mu_y: f64, mu_p: [f64; 2]) -> StageStats {
    StageStats { mu_y, var_y: 16.0, mu_p, var_p: [36.0, 36.0], cov_yp: [10.0, -10.0] }
}

fn problem(objective: Objective, horizon: usize, b_init: u8, stage: StageStats) -> TrellisProblem {
    TrellisProblem {
        horizon,
        objective,
        p_out: 0.25,
        p_han: 1.0,
        grid: HGrid::new(0.0, 10.0, 0.25).unwrap(),
        b_init,
        stages: vec![stage; horizon],
        outage_threshold: -107.8,
        outage_form: OutageForm::Joint,
        plan_consistency: true,
    }
}

#[test]
fn trellis_enumerates_every_state_sequence() {
    assert_eq!(build_trellis(0).unwrap(), vec![Vec::<u8>::new()]);
    assert_eq!(build_trellis(1).unwrap(), vec![vec![0], vec![1]]);
    let t = build_trellis(4).unwrap();
    assert_eq!(t.len(), 16);
    let mut sorted = t.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 16);
    assert!(matches!(build_trellis(MAX_HORIZON + 1), Err(Error::HorizonTooLong(13))));
    let p = problem(Objective::MinHandover, MAX_HORIZON + 1, 0, stats(0.0, [-90.0, -90.0]));
    assert!(matches!(solve(&p), Err(Error::HorizonTooLong(_))));
}

#[test]
fn stage_probabilities_match_sampling() {
    let s = stats(-1.5, [-104.0, -109.0]);
    let thr = -107.8;
    let draws = 400_000;
    let mut rng = handover::rng::stream(3, 0);
    // Joint draw of (y, p0, p1) from the stage covariance.
    let sigma = nalgebra::Matrix3::new(16.0, 10.0, -10.0, 10.0, 36.0, 0.0, -10.0, 0.0, 36.0);
    let l = sigma.cholesky().unwrap().l();
    let (h, mut sw, mut stay_out, mut sw_out) = (1.25, 0usize, 0usize, 0usize);
    for _ in 0..draws {
        let z = nalgebra::Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let x = l * z;
        let (y, p0, p1) = (s.mu_y + x[0], s.mu_p[0] + x[1], s.mu_p[1] + x[2]);
        if y <= -h {
            sw += 1;
            sw_out += usize::from(p1 <= thr);
        } else {
            stay_out += usize::from(p0 <= thr);
        }
    }
    let ev = s.evaluate(0, h, thr);
    let d = draws as f64;
    for (got, hits) in [(ev.p_switch, sw), (ev.outage_stay, stay_out), (ev.outage_switch, sw_out)] {
        let p = hits as f64 / d;
        assert!((got - p).abs() < 5.0 * (p * (1.0 - p) / d).sqrt() + 1e-4, "{got} vs {p}");
    }
    assert!((ev.p_switch - cdf((-h + 1.5) / 4.0)).abs() < 1e-14);
}

#[test]
fn far_from_the_edge_the_largest_margin_wins() {
    let p = problem(Objective::MinHandover, 4, 0, stats(30.0, [-80.0, -120.0]));
    let sol = solve(&p).unwrap();
    assert_eq!(sol.next_b, 0);
    assert_eq!(sol.path.states, vec![0; 4]);
    assert_eq!(sol.path.h, vec![10.0; 4]);
    assert!(sol.path.feasible);
}

/// Independent m = 1 search over both transitions and the whole grid.
fn brute_force_one_stage(p: &TrellisProblem) -> (u8, f64, f64) {
    let s = p.stages[0];
    let mut best: Option<(bool, f64, f64, u8, f64)> = None;
    for next in [0u8, 1] {
        let switch = next != p.b_init;
        for h in p.grid.points() {
            let ev = s.evaluate(p.b_init, h, p.outage_threshold);
            let planned = if switch { ev.p_switch } else { 1.0 - ev.p_switch };
            if planned < 0.5 {
                continue;
            }
            let p_o = ev.outage_stay + ev.outage_switch;
            let (viol, cost) = match p.objective {
                Objective::MinHandover => ((p_o - p.p_out).max(0.0), ev.p_switch),
                Objective::MinOutage => (if switch { 0.0 } else { (ev.p_switch - p.p_han).max(0.0) }, p_o),
                Objective::Pareto { z } => (0.0, z * ev.p_switch + (1.0 - z) * p_o),
            };
            let key = (viol > 0.0, viol, cost, next, h);
            if best.is_none_or(|b| key.partial_cmp(&b) == Some(std::cmp::Ordering::Less)) {
                best = Some(key);
            }
        }
    }
    let b = best.unwrap();
    (b.3, b.4, b.2)
}

#[test]
fn one_stage_solver_matches_brute_force() {
    let mut rng = handover::rng::stream(17, 0);
    for case in 0..60 {
        let mu_y = rng.random_range(-12.0..12.0);
        let mu_p = [rng.random_range(-115.0..-95.0), rng.random_range(-115.0..-95.0)];
        let objective = match case % 3 {
            0 => Objective::MinHandover,
            1 => Objective::MinOutage,
            _ => Objective::Pareto { z: rng.random_range(0.0..1.0) },
        };
        let p = problem(objective, 1, (case % 2) as u8, stats(mu_y, mu_p));
        let sol = solve(&p).unwrap();
        let (next, h, cost) = brute_force_one_stage(&p);
        assert_eq!((sol.next_b, sol.h), (next, h), "case {case}: {p:?}");
        assert!((sol.path.cost - cost).abs() < 1e-12);
    }
}

#[test]
fn pareto_at_one_is_min_handover_without_caps() {
    let stages = [stats(-3.0, [-100.0, -104.0]), stats(5.0, [-98.0, -110.0]), stats(0.5, [-106.0, -106.0])];
    for s in stages {
        for b in [0, 1] {
            let mut mh = problem(Objective::MinHandover, 4, b, s);
            mh.p_out = 1.0;
            let pz = problem(Objective::Pareto { z: 1.0 }, 4, b, s);
            let (a, c) = (solve(&mh).unwrap(), solve(&pz).unwrap());
            assert_eq!(a.path.states, c.path.states);
            assert_eq!(a.path.h, c.path.h);
        }
    }
}

#[test]
fn balanced_links_keep_the_connection_and_a_strong_target_attracts_min_outage() {
    let even = problem(Objective::MinHandover, 4, 0, stats(0.0, [-100.0, -100.0]));
    let sol = solve(&even).unwrap();
    assert_eq!(sol.next_b, 0);
    assert_eq!(sol.path.switches(), 0);

    let strong1 = problem(Objective::MinOutage, 4, 0, stats(-15.0, [-112.0, -92.0]));
    let sol = solve(&strong1).unwrap();
    assert_eq!(sol.next_b, 1);
    assert_eq!(sol.path.events[0], StageEvent::L);
}

fn path_key(p: &TrellisPath) -> (bool, bool, f64, f64) {
    (!p.admissible, !p.feasible, p.violation, p.cost)
}

#[test]
fn chosen_path_is_optimal_and_respects_its_cap() {
    let mut rng = handover::rng::stream(23, 0);
    for _ in 0..20 {
        let stages: Vec<StageStats> = (0..5)
            .map(|_| stats(rng.random_range(-10.0..10.0), [rng.random_range(-112.0..-96.0), rng.random_range(-112.0..-96.0)]))
            .collect();
        let mut p = problem(Objective::MinHandover, 5, rng.random_range(0..2), stages[0]);
        p.stages = stages;
        let sol = solve(&p).unwrap();
        assert_eq!(sol.paths.len(), 32);
        for other in &sol.paths {
            assert!(path_key(&sol.path).partial_cmp(&path_key(other)) != Some(std::cmp::Ordering::Greater));
        }
        if sol.path.feasible {
            assert!(sol.path.p_o.iter().all(|&o| o <= p.p_out));
        }
        // Re-solving from the chosen first state over the remaining stages
        // continues the same plan: stage costs are separable.
        if sol.path.feasible {
            let mut tail = p.clone();
            tail.horizon = 4;
            tail.b_init = sol.next_b;
            tail.stages.remove(0);
            let rest = solve(&tail).unwrap();
            assert!(rest.path.cost <= sol.path.cost - sol.path.p_h[0] + 1e-12);
        }
    }
}
