//! Scenario configuration: a named preset, overridden by command-line flags,
//! overridden in turn by a TOML file.
//!
//! Every field has a default taken from the preset, so a config file only
//! needs the keys it changes:
//!
//! ```toml
//! speed_mps = 20.0
//! seed = 7
//!
//! [estimator]
//! kind = "ls"
//! n_w = 8
//!
//! [layout]
//! kind = "row"
//! count = 8
//! spacing_m = 2000.0
//! cell_radius_m = 1000.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::optimizer::OutageForm;
use crate::scenario::{CellLayout, LineSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LayoutConfig {
    /// Two BSs on the x-axis.
    TwoCell { spacing_m: f64, cell_radius_m: f64 },
    /// `count` BSs evenly spaced on the x-axis.
    Row { count: usize, spacing_m: f64, cell_radius_m: f64 },
}

impl LayoutConfig {
    pub fn build(&self) -> Result<CellLayout> {
        match *self {
            LayoutConfig::TwoCell { spacing_m, cell_radius_m } => CellLayout::two_cell(spacing_m, cell_radius_m),
            LayoutConfig::Row { count, spacing_m, cell_radius_m } => CellLayout::row(count, spacing_m, cell_radius_m),
        }
    }

    pub fn cell_radius(&self) -> f64 {
        match *self {
            LayoutConfig::TwoCell { cell_radius_m, .. } | LayoutConfig::Row { cell_radius_m, .. } => cell_radius_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    /// Distance along the layout axis from the first BS to the first sample.
    pub start_offset_m: f64,
    pub length_m: f64,
    pub lateral_offset_m: f64,
    /// When set, the path length becomes `speed * duration`, so every speed
    /// covers the same trip time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub n_w: usize,
    /// GELS residual threshold.
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Outage cap of the handover-minimizing policy.
    pub p_out: f64,
    /// Handover cap of the outage-minimizing policy.
    pub p_han: f64,
    /// Weight on handovers in the Pareto policy. The default sits at the
    /// knee of the two-cell preset's frontier.
    pub z: f64,
    pub h_step_db: f64,
    pub outage_form: OutageForm,
    pub plan_consistency: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub layout: LayoutConfig,
    pub trace: TraceConfig,
    pub speed_mps: f64,
    pub sample_interval_s: f64,
    /// Shared by every link.
    pub channel: ChannelParams,
    pub estimator: EstimatorConfig,
    /// Outage threshold in dB; defaults to the path loss at 1.2 cell radii.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outage_threshold_db: Option<f64>,
    /// Serving BS at sample 0 in the two-cell runs.
    pub initial_bs: u8,
    /// Largest hysteresis, dB (`h_M`). Also the GELS forced-reinit level.
    pub h_max_db: f64,
    /// Prediction horizon `m`.
    pub horizon: usize,
    /// Truncation depth `K` of the analytic connection probabilities.
    pub depth: usize,
    pub optimizer: OptimizerConfig,
    /// Monte Carlo samples per probability when the oracle needs them.
    pub mc_samples: usize,
    pub seed: u64,
}

pub const PRESETS: [&str; 2] = ["paper-vi", "paper-vi-multicell"];

impl ScenarioConfig {
    /// Two cells 2 km apart; a 500 m path starting 750 m from BS0.
    pub fn paper_vi() -> Self {
        Self {
            layout: LayoutConfig::TwoCell { spacing_m: 2000.0, cell_radius_m: 1000.0 },
            trace: TraceConfig { start_offset_m: 750.0, length_m: 500.0, lateral_offset_m: 0.0, duration_s: None },
            speed_mps: 13.0,
            sample_interval_s: 0.48,
            channel: ChannelParams::default(),
            estimator: EstimatorConfig { kind: EstimatorKind::Avg, n_w: 4, gamma: 3.0 },
            outage_threshold_db: None,
            initial_bs: 0,
            h_max_db: 10.0,
            horizon: 4,
            depth: 15,
            optimizer: OptimizerConfig {
                p_out: 0.25,
                p_han: 1.0,
                z: 0.1,
                h_step_db: 0.25,
                outage_form: OutageForm::Joint,
                plan_consistency: true,
            },
            mc_samples: 20_000,
            seed: 1,
        }
    }

    /// Eight cells in a row, 2 km apart; the path runs 100 m off the axis
    /// for a fixed 350 s trip.
    pub fn paper_vi_multicell() -> Self {
        Self {
            layout: LayoutConfig::Row { count: 8, spacing_m: 2000.0, cell_radius_m: 1000.0 },
            trace: TraceConfig { start_offset_m: 100.0, length_m: 0.0, lateral_offset_m: 100.0, duration_s: Some(350.0) },
            ..Self::paper_vi()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-vi" => Ok(Self::paper_vi()),
            "paper-vi-multicell" => Ok(Self::paper_vi_multicell()),
            other => Err(Error::Config(format!("unknown preset {other:?}; known: {}", PRESETS.join(", ")))),
        }
    }

    /// Preset, then `flags`, then the file at `file`; later layers win key by key.
    pub fn resolve(preset: &str, flags: &toml::Table, file: Option<&Path>) -> Result<Self> {
        let mut merged = toml::Table::try_from(Self::preset(preset)?).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, flags);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let overlay: toml::Table = toml::from_str(&text)?;
            merge(&mut merged, &overlay);
        }
        let cfg: Self = merged.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.estimator.n_w < 2 {
            return Err(Error::Config(format!("estimator window n_w = {} must be at least 2", self.estimator.n_w)));
        }
        if self.horizon < 1 {
            return Err(Error::Config("horizon m must be at least 1".into()));
        }
        if self.depth < self.horizon {
            return Err(Error::Config(format!("truncation depth K = {} below horizon m = {}", self.depth, self.horizon)));
        }
        if !(self.h_max_db > 0.0) {
            return Err(Error::Config(format!("h_M = {} must be positive", self.h_max_db)));
        }
        if self.initial_bs > 1 {
            return Err(Error::Config("initial_bs must be 0 or 1".into()));
        }
        if let Some(d) = self.trace.duration_s {
            if !(d >= 0.0) {
                return Err(Error::Config(format!("trip duration {d} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn with_speed(&self, v: f64) -> Self {
        Self { speed_mps: v, ..self.clone() }
    }

    pub fn line(&self) -> LineSpec {
        let length_m = match self.trace.duration_s {
            Some(d) => self.speed_mps * d,
            None => self.trace.length_m,
        };
        LineSpec {
            start_offset_m: self.trace.start_offset_m,
            length_m,
            lateral_offset_m: self.trace.lateral_offset_m,
        }
    }

    pub fn outage_threshold(&self) -> f64 {
        self.outage_threshold_db
            .unwrap_or_else(|| self.channel.path_loss(1.2 * self.layout.cell_radius()))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Tables whose `kind` selects a variant with its own set of keys.
const TAGGED: [&str; 1] = ["layout"];

/// Recursive table merge; scalars and arrays in `over` replace those in `base`.
/// A tagged table that changes `kind` replaces the whole table, since its
/// other keys belong to a different variant.
fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o))
                if !TAGGED.contains(&k.as_str()) || o.get("kind").is_none() || b.get("kind") == o.get("kind") =>
            {
                merge(b, o)
            }
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let cfg = ScenarioConfig::resolve(name, &toml::Table::new(), None).unwrap();
            assert_eq!(cfg, ScenarioConfig::preset(name).unwrap());
        }
    }

    #[test]
    fn file_overrides_flags_override_preset() {
        let flags: toml::Table = toml::from_str("speed_mps = 5.0\nseed = 9\n[estimator]\nn_w = 8").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 11\n").unwrap();
        let cfg = ScenarioConfig::resolve("paper-vi", &flags, Some(&path)).unwrap();
        assert_eq!((cfg.speed_mps, cfg.seed, cfg.estimator.n_w), (5.0, 11, 8));
        assert_eq!(cfg.estimator.kind, EstimatorKind::Avg);
    }

    #[test]
    fn changing_the_layout_variant_replaces_the_table() {
        let flags: toml::Table = toml::from_str("[layout]\nkind = \"row\"\ncount = 3\nspacing_m = 1500.0\ncell_radius_m = 800.0").unwrap();
        let cfg = ScenarioConfig::resolve("paper-vi", &flags, None).unwrap();
        assert_eq!(cfg.layout, LayoutConfig::Row { count: 3, spacing_m: 1500.0, cell_radius_m: 800.0 });
        // A plain `kind` field merges key by key.
        let flags: toml::Table = toml::from_str("[estimator]\nkind = \"gels\"").unwrap();
        let cfg = ScenarioConfig::resolve("paper-vi", &flags, None).unwrap();
        assert_eq!((cfg.estimator.kind, cfg.estimator.n_w), (EstimatorKind::Gels, 4));
    }

    #[test]
    fn bad_values_and_unknown_keys_are_rejected() {
        let flags: toml::Table = toml::from_str("[estimator]\nn_w = 1").unwrap();
        assert!(matches!(ScenarioConfig::resolve("paper-vi", &flags, None), Err(Error::Config(_))));
        let flags: toml::Table = toml::from_str("speed = 3.0").unwrap();
        assert!(matches!(ScenarioConfig::resolve("paper-vi", &flags, None), Err(Error::ConfigParse(_))));
        assert!(ScenarioConfig::preset("nope").is_err());
    }

    #[test]
    fn default_threshold_is_path_loss_at_1_2_radii() {
        let cfg = ScenarioConfig::paper_vi();
        assert!((cfg.outage_threshold() + 35.0 * 1200f64.log10()).abs() < 1e-12);
    }
}
