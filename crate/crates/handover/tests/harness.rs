use handover::config::ScenarioConfig;
use handover::harness::{run, run_table, table_csv, table_long_csv, Policy, RunMode, RunResult, Scenario, SweepSpec};

fn noiseless(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.channel.sigma_u = 0.0;
    cfg
}

#[test]
fn noiseless_two_cell_trip_switches_once_just_past_the_midpoint() {
    let scn = Scenario::build(&noiseless(ScenarioConfig::paper_vi())).unwrap();
    let r = run(&scn, Policy::Constant(0.0), RunMode::TwoCell, 3, 1).unwrap();
    assert_eq!(r.mean_switches, 1.0);
    assert_eq!(r.switches_stderr, 0.0);
    assert_eq!(r.mean_outages, 0.0);

    // Oracle: 4-sample running mean of the noiseless path loss on each side.
    let pl = |d: f64| -35.0 * d.log10();
    let x: Vec<f64> = (0..81).map(|n| 750.0 + 6.24 * n as f64).collect();
    let avg = |f: &dyn Fn(f64) -> f64, n: usize| {
        let lo = (n + 1).saturating_sub(4);
        x[lo..=n].iter().map(|&v| f(v)).sum::<f64>() / (n + 1 - lo) as f64
    };
    let first = (1..81).find(|&n| avg(&|v| pl(v), n) - avg(&|v| pl(2000.0 - v), n) <= 0.0).unwrap();
    let at = r.per_sample.iter().position(|s| s.switches > 0).unwrap();
    assert_eq!(r.per_sample[at].n, first);
    assert_eq!(r.per_sample[at].switches, 3);
    assert!(x[first] > 1000.0 && x[first] < 1000.0 + 3.0 * 6.24);
}

#[test]
fn noiseless_trip_along_the_row_switches_at_every_boundary() {
    let mut cfg = noiseless(ScenarioConfig::paper_vi_multicell());
    cfg.trace.duration_s = None;
    cfg.trace.length_m = 13_800.0;
    let scn = Scenario::build(&cfg).unwrap();
    let r = run(&scn, Policy::Constant(0.0), RunMode::Multicell, 2, 1).unwrap();
    assert_eq!(r.mean_switches, 7.0);
    assert_eq!(r.mean_outages, 0.0);
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let mut cfg = ScenarioConfig::paper_vi();
    cfg.seed = 99;
    let scn = Scenario::build(&cfg).unwrap();
    for policy in [Policy::Constant(2.0), Policy::Opt3] {
        let a = run(&scn, policy, RunMode::TwoCell, 40, 1).unwrap();
        let b = run(&scn, policy, RunMode::TwoCell, 40, 3).unwrap();
        assert_eq!(a, RunResult { wall_time_s: a.wall_time_s, ..b });
    }
}

#[test]
fn the_speed_policy_table_has_every_cell() {
    let spec = SweepSpec::table_one(4);
    let t = run_table(&ScenarioConfig::paper_vi(), &spec, RunMode::TwoCell, 1).unwrap();
    assert_eq!(t.cells.len(), 18);
    assert!(t.cell(Policy::Opt2, 40.0).is_some());
    let csv = String::from_utf8(table_csv(&t).unwrap()).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    // Header plus H and O rows for each of the six policies.
    assert_eq!(rows.len(), 13);
    assert!(rows[1].starts_with("H(h=0)"));
    assert_eq!(table_long_csv(&t).unwrap().iter().filter(|&&c| c == b'\n').count(), 37);
}
