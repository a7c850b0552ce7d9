//! Cell geometry and the mobile terminal's straight-line trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLayout {
    bs_positions: Vec<Point>,
    cell_radius: f64,
}

impl CellLayout {
    pub fn new(bs_positions: Vec<Point>, cell_radius: f64) -> Result<Self> {
        if bs_positions.len() < 2 {
            return Err(Error::Config("a layout needs at least two base stations".into()));
        }
        if !(cell_radius > 0.0) {
            return Err(Error::Config(format!("cell radius must be positive, got {cell_radius}")));
        }
        for (i, a) in bs_positions.iter().enumerate() {
            if !a.iter().all(|c| c.is_finite()) {
                return Err(Error::Config(format!("base station {i} has a non-finite coordinate")));
            }
            for (j, b) in bs_positions.iter().enumerate().skip(i + 1) {
                if dist(*a, *b) <= 0.0 {
                    return Err(Error::Config(format!("base stations {i} and {j} coincide")));
                }
            }
        }
        Ok(Self { bs_positions, cell_radius })
    }

    /// Two base stations on the x-axis, `spacing` meters apart.
    pub fn two_cell(spacing: f64, cell_radius: f64) -> Result<Self> {
        Self::new(vec![[0.0, 0.0], [spacing, 0.0]], cell_radius)
    }

    /// `count` cells in a row along the x-axis. With `spacing = 2 * radius`
    /// this is a strip of hexagons whose apothem equals the nominal radius.
    pub fn row(count: usize, spacing: f64, cell_radius: f64) -> Result<Self> {
        Self::new((0..count).map(|i| [i as f64 * spacing, 0.0]).collect(), cell_radius)
    }

    pub fn bs_positions(&self) -> &[Point] {
        &self.bs_positions
    }

    pub fn len(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bs_positions.is_empty()
    }

    pub fn cell_radius(&self) -> f64 {
        self.cell_radius
    }

    /// Unit vector from the first to the last base station, the direction of travel.
    fn axis(&self) -> (Point, f64) {
        let a = self.bs_positions[0];
        let b = self.bs_positions[self.bs_positions.len() - 1];
        let len = dist(a, b);
        ([(b[0] - a[0]) / len, (b[1] - a[1]) / len], len)
    }
}

/// Where the straight path sits relative to the layout axis (first BS to last BS).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    /// Distance along the axis from the first BS to the first sample.
    pub start_offset_m: f64,
    pub length_m: f64,
    /// Perpendicular displacement of the path from the axis.
    pub lateral_offset_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityTrace {
    positions: Vec<Point>,
    speed: f64,
    sample_interval: f64,
}

impl MobilityTrace {
    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    /// d_c = v * T.
    pub fn sample_distance(&self) -> f64 {
        self.speed * self.sample_interval
    }
}

/// Samples a straight path every `v * t` meters: `floor(length / d_c) + 1` points.
pub fn build_linear_trace(layout: &CellLayout, line: &LineSpec, v: f64, t: f64) -> Result<MobilityTrace> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Config(format!("speed must be positive, got {v}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("sample interval must be positive, got {t}")));
    }
    if !(line.start_offset_m >= 0.0) || !(line.length_m >= 0.0) {
        return Err(Error::Config("path offset and length must be non-negative".into()));
    }
    let (dir, axis_len) = layout.axis();
    let end = line.start_offset_m + line.length_m;
    if end > axis_len + layout.cell_radius() {
        return Err(Error::Config(format!(
            "path ends {end} m along the axis, beyond the layout extent of {} m",
            axis_len + layout.cell_radius()
        )));
    }
    let dc = v * t;
    // The small slack keeps exact multiples (length = k * d_c) from losing a sample to rounding.
    let n = (line.length_m / dc + 1e-9).floor() as usize + 1;
    let origin = layout.bs_positions()[0];
    let normal = [-dir[1], dir[0]];
    let positions = (0..n)
        .map(|i| {
            let s = line.start_offset_m + i as f64 * dc;
            [
                origin[0] + s * dir[0] + line.lateral_offset_m * normal[0],
                origin[1] + s * dir[1] + line.lateral_offset_m * normal[1],
            ]
        })
        .collect();
    Ok(MobilityTrace { positions, speed: v, sample_interval: t })
}

/// Distances `d_s(n)` from every sample to every base station, indexed `[s][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distances {
    d: Vec<Vec<f64>>,
}

impl Distances {
    pub fn from_rows(d: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in d.iter().enumerate() {
            if let Some(n) = row.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::ZeroDistance { bs: s, n });
            }
        }
        Ok(Self { d })
    }

    pub fn bs_count(&self) -> usize {
        self.d.len()
    }

    pub fn len(&self) -> usize {
        self.d.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.d[s]
    }

    pub fn get(&self, s: usize, n: usize) -> f64 {
        self.d[s][n]
    }
}

pub fn distances(trace: &MobilityTrace, layout: &CellLayout) -> Result<Distances> {
    let d = layout
        .bs_positions()
        .iter()
        .map(|&bs| trace.positions().iter().map(|&p| dist(p, bs)).collect())
        .collect();
    Distances::from_rows(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_layouts_are_rejected() {
        assert!(CellLayout::new(vec![[0.0, 0.0]], 1000.0).is_err());
        assert!(CellLayout::new(vec![[0.0, 0.0], [0.0, 0.0]], 1000.0).is_err());
        assert!(CellLayout::two_cell(2000.0, 0.0).is_err());
    }

    #[test]
    fn bad_kinematics_are_config_errors() {
        let layout = CellLayout::two_cell(2000.0, 1000.0).unwrap();
        let line = LineSpec { start_offset_m: 750.0, length_m: 500.0, lateral_offset_m: 0.0 };
        assert!(matches!(build_linear_trace(&layout, &line, 0.0, 0.48), Err(Error::Config(_))));
        assert!(matches!(build_linear_trace(&layout, &line, 13.0, -1.0), Err(Error::Config(_))));
        let far = LineSpec { start_offset_m: 2500.0, length_m: 1000.0, lateral_offset_m: 0.0 };
        assert!(build_linear_trace(&layout, &far, 13.0, 0.48).is_err());
    }

    #[test]
    fn sample_on_a_base_station_is_rejected() {
        let layout = CellLayout::two_cell(2000.0, 1000.0).unwrap();
        let line = LineSpec { start_offset_m: 0.0, length_m: 10.0, lateral_offset_m: 0.0 };
        let trace = build_linear_trace(&layout, &line, 5.0, 1.0).unwrap();
        assert!(matches!(distances(&trace, &layout), Err(Error::ZeroDistance { bs: 0, n: 0 })));
    }
}
