use handover::estimators::{FilterCoeffs, Model};
use handover::hybrid::{decide, region, run_decisions, step, HybridState, Region, Transition};
use nalgebra::Vector4;

#[test]
fn recursion_matches_a_growing_constant_weight_filter() {
    let g = [0.1, 0.25];
    let beta = [35.0, 30.0];
    let d0: Vec<f64> = (0..12).map(|i| 700.0 + 6.24 * i as f64).collect();
    let d1: Vec<f64> = (0..12).map(|i| 1300.0 - 6.24 * i as f64).collect();
    let u0: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin() * 4.0).collect();
    let u1: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).cos() * 5.0).collect();
    let p0: Vec<f64> = (0..12).map(|i| -beta[0] * d0[i].log10() + u0[i]).collect();
    let p1: Vec<f64> = (0..12).map(|i| -beta[1] * d1[i].log10() + u1[i]).collect();

    let mut st = HybridState { s: Vector4::new(p0[0], p1[0], g[0] * p0[0], g[1] * p1[0]), b: 0, n: 0 };
    for n in 0..11 {
        let tr = Transition::new(g, beta, [(d0[n], d0[n + 1]), (d1[n], d1[n + 1])], [(u0[n], u0[n + 1]), (u1[n], u1[n + 1])]);
        st = step(&st, &tr);
        let k = n + 1;
        let f0 = FilterCoeffs { start: 0, coeffs: vec![g[0]; k + 1], model: Model::Avg };
        let f1 = FilterCoeffs { start: 0, coeffs: vec![g[1]; k + 1], model: Model::Avg };
        assert!((st.s[0] - p0[k]).abs() < 1e-9);
        assert!((st.s[1] - p1[k]).abs() < 1e-9);
        assert!((st.s[2] - f0.apply(&p0)).abs() < 1e-9);
        assert!((st.s[3] - f1.apply(&p1)).abs() < 1e-9);
    }
    assert_eq!(st.n, 11);
}

#[test]
fn decisions_agree_with_the_regions() {
    for &h in &[0.0, 1.5, 4.0] {
        for i in -40..=40 {
            let y = i as f64 * 0.25;
            for b in [0u8, 1] {
                let want = match region(y, h) {
                    Region::L => 1,
                    Region::N => 0,
                    Region::M => b,
                };
                assert_eq!(decide(b, y, h), want, "y={y} h={h} b={b}");
            }
        }
    }
}

#[test]
fn a_crossing_signal_switches_once_under_hysteresis() {
    let y: Vec<f64> = (0..20).map(|i| 10.0 - i as f64).collect();
    let h = vec![3.0; 20];
    let (b, switches) = run_decisions(0, &y, &h);
    assert_eq!(switches, 1);
    assert_eq!(b.iter().position(|&v| v == 1), Some(13));
    // Oscillation inside the dead zone never switches.
    let y: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 2.0 } else { -2.0 }).collect();
    assert_eq!(run_decisions(0, &y, &h).1, 0);
    assert_eq!(run_decisions(0, &y, &vec![0.0; 20]).1, 19);
}
