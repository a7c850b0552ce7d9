use handover::scenario::{build_linear_trace, distances, CellLayout, LineSpec, Point};
use handover::Error;
use proptest::prelude::*;

fn line(start: f64, length: f64) -> LineSpec {
    LineSpec { start_offset_m: start, length_m: length, lateral_offset_m: 0.0 }
}

#[test]
fn two_cell_preset_geometry() {
    let layout = CellLayout::two_cell(2000.0, 1000.0).unwrap();
    let trace = build_linear_trace(&layout, &line(750.0, 500.0), 13.0, 0.48).unwrap();
    assert_eq!(trace.len(), 81);
    assert!((trace.sample_distance() - 6.24).abs() < 1e-12);
    let d = distances(&trace, &layout).unwrap();
    assert!((d.get(0, 0) - 750.0).abs() < 1e-9);
    assert!((d.get(1, 0) - 1250.0).abs() < 1e-9);
    for n in 1..trace.len() {
        let (a, b) = (trace.positions()[n - 1], trace.positions()[n]);
        assert!(((b[0] - a[0]).hypot(b[1] - a[1]) - 6.24).abs() < 1e-9);
    }
}

#[test]
fn zero_length_is_a_single_sample() {
    let layout = CellLayout::two_cell(2000.0, 1000.0).unwrap();
    let trace = build_linear_trace(&layout, &line(750.0, 0.0), 13.0, 0.48).unwrap();
    assert_eq!(trace.positions(), &[[750.0, 0.0]]);
}

#[test]
fn midpoint_is_equidistant() {
    let layout = CellLayout::two_cell(2000.0, 1000.0).unwrap();
    let trace = build_linear_trace(&layout, &line(1000.0, 0.0), 13.0, 0.48).unwrap();
    let d = distances(&trace, &layout).unwrap();
    assert_eq!(d.get(0, 0), d.get(1, 0));
}

#[test]
fn path_beyond_the_layout_is_rejected() {
    let layout = CellLayout::two_cell(2000.0, 1000.0).unwrap();
    let err = build_linear_trace(&layout, &line(2500.0, 600.0), 13.0, 0.48).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn eight_cell_row_matches_euclidean_norms() {
    let layout = CellLayout::row(8, 2000.0, 1000.0).unwrap();
    let spec = LineSpec { start_offset_m: 100.0, length_m: 14_000.0, lateral_offset_m: 100.0 };
    let trace = build_linear_trace(&layout, &spec, 20.0, 0.48).unwrap();
    let d = distances(&trace, &layout).unwrap();
    for (n, p) in trace.positions().iter().enumerate() {
        // The path runs parallel to the x-axis, 100 m above it.
        assert!((p[1] - 100.0).abs() < 1e-9);
        for s in 0..8 {
            let bx = 2000.0 * s as f64;
            let oracle = ((p[0] - bx).powi(2) + 100.0f64.powi(2)).sqrt();
            assert!((d.get(s, n) - oracle).abs() < 1e-9);
        }
    }
}

fn rotate(p: Point, th: f64, t: Point) -> Point {
    let (s, c) = th.sin_cos();
    [c * p[0] - s * p[1] + t[0], s * p[0] + c * p[1] + t[1]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_layouts_match_brute_force_norms(
        pts in prop::collection::vec((-5000.0f64..5000.0, -5000.0f64..5000.0), 2..6),
        start in 0.0f64..200.0,
        len in 0.0f64..300.0,
        off in -50.0f64..50.0,
    ) {
        let bs: Vec<Point> = pts.iter().map(|&(x, y)| [x, y]).collect();
        prop_assume!(bs.iter().enumerate().all(|(i, a)| bs[..i].iter().all(|b| (a[0] - b[0]).hypot(a[1] - b[1]) > 1.0)));
        let layout = CellLayout::new(bs.clone(), 1000.0).unwrap();
        let spec = LineSpec { start_offset_m: start, length_m: len, lateral_offset_m: off };
        let trace = build_linear_trace(&layout, &spec, 10.0, 0.5).unwrap();
        match distances(&trace, &layout) {
            Ok(d) => {
                for (n, p) in trace.positions().iter().enumerate() {
                    for (s, b) in bs.iter().enumerate() {
                        let oracle = ((p[0] - b[0]).powi(2) + (p[1] - b[1]).powi(2)).sqrt();
                        prop_assert!((d.get(s, n) - oracle).abs() <= 1e-12 * oracle.max(1.0));
                    }
                }
            }
            Err(e) => prop_assert!(matches!(e, Error::ZeroDistance { .. }), "unexpected error {e}"),
        }
    }

    #[test]
    fn distances_survive_rigid_motion(
        th in 0.0f64..std::f64::consts::TAU,
        tx in -1e4f64..1e4,
        ty in -1e4f64..1e4,
        off in -300.0f64..300.0,
    ) {
        let base = vec![[0.0, 0.0], [2000.0, 0.0], [4000.0, 0.0]];
        let moved: Vec<Point> = base.iter().map(|&p| rotate(p, th, [tx, ty])).collect();
        let spec = LineSpec { start_offset_m: 300.0, length_m: 3000.0, lateral_offset_m: off };
        let a = CellLayout::new(base, 1000.0).unwrap();
        let b = CellLayout::new(moved, 1000.0).unwrap();
        let da = distances(&build_linear_trace(&a, &spec, 13.0, 0.48).unwrap(), &a).unwrap();
        let db = distances(&build_linear_trace(&b, &spec, 13.0, 0.48).unwrap(), &b).unwrap();
        prop_assert_eq!(da.len(), db.len());
        for s in 0..3 {
            for n in 0..da.len() {
                prop_assert!((da.get(s, n) - db.get(s, n)).abs() < 1e-9);
            }
        }
    }
}
