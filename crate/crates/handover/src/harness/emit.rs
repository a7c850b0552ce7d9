//! Output files. Column orders are fixed and documented in the README; every
//! file is written to a sibling temporary and renamed into place, so a
//! failed write leaves no partial output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::study::{AccuracyStudy, ParetoSweep, ProfileRow, TableResult};
use super::RunResult;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Version of the CSV and JSON layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// JSON envelope shared by every command.
#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config_hash: String,
    pub seed: u64,
    pub config: &'a ScenarioConfig,
    pub result: &'a T,
}

impl<'a, T: Serialize> Summary<'a, T> {
    pub fn new(command: &'a str, config: &'a ScenarioConfig, result: &'a T) -> Self {
        Self { schema_version: SCHEMA_VERSION, command, config_hash: config.hash(), seed: config.seed, config, result }
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))
}

fn f(x: f64) -> String {
    format!("{x}")
}

/// Per-sample empirical rates: `n, switches, outages, switch_rate, outage_rate, h_mean`.
pub fn run_samples_csv(r: &RunResult) -> Result<Vec<u8>> {
    let t = r.trials as f64;
    csv_bytes(
        &["n", "switches", "outages", "switch_rate", "outage_rate", "h_mean"],
        r.per_sample.iter().map(|s| {
            vec![
                s.n.to_string(),
                s.switches.to_string(),
                s.outages.to_string(),
                f(s.switches as f64 / t),
                f(s.outages as f64 / t),
                f(s.h_mean),
            ]
        }),
    )
}

pub fn run_json(r: &RunResult) -> Result<Vec<u8>> {
    Summary::new("simulate", &r.config, r).to_json()
}

/// The twelve-row table: one row per policy and metric, one column per speed.
pub fn table_csv(t: &TableResult) -> Result<Vec<u8>> {
    let mut header = vec!["row".to_string()];
    header.extend(t.spec.speeds.iter().map(|v| format!("v={v}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for &p in &t.spec.policies {
        for (metric, pick) in [("H", true), ("O", false)] {
            let mut row = vec![format!("{metric}({})", p.label())];
            for &v in &t.spec.speeds {
                let c = t.cell(p, v).expect("every sweep point is run");
                row.push(f(if pick { c.h_bar } else { c.o_bar }));
            }
            rows.push(row);
        }
    }
    csv_bytes(&header, rows)
}

/// Long form of the table: `policy, speed, metric, value, stderr, trials, samples`.
pub fn table_long_csv(t: &TableResult) -> Result<Vec<u8>> {
    csv_bytes(
        &["policy", "speed", "metric", "value", "stderr", "trials", "samples"],
        t.cells.iter().flat_map(|c| {
            [("H", c.h_bar, c.h_bar_stderr), ("O", c.o_bar, c.o_bar_stderr)].map(|(m, v, se)| {
                vec![c.policy.label(), f(c.speed), m.into(), f(v), f(se), t.spec.trials.to_string(), c.samples.to_string()]
            })
        }),
    )
}

/// Long form: `k, m, n, series, value`, series one of analytical, B1, LB2, UB2, UB3.
pub fn accuracy_csv(studies: &[AccuracyStudy]) -> Result<Vec<u8>> {
    csv_bytes(
        &["k", "m", "n", "series", "value"],
        studies.iter().flat_map(|s| {
            s.rows.iter().flat_map(move |r| {
                [("analytical", r.exact), ("B1", r.b1), ("LB2", r.lb2), ("UB2", r.ub2), ("UB3", r.ub3)]
                    .map(|(name, v)| vec![s.k.to_string(), s.m_split.to_string(), r.n.to_string(), name.into(), f(v)])
            })
        }),
    )
}

/// `objective, n, root, h, next_b, mean_p_h, mean_p_o`.
pub fn profile_csv(profiles: &[(&str, &[ProfileRow])]) -> Result<Vec<u8>> {
    csv_bytes(
        &["objective", "n", "root", "h", "next_b", "mean_p_h", "mean_p_o"],
        profiles.iter().flat_map(|(name, rows)| {
            rows.iter().map(move |r| {
                vec![
                    name.to_string(),
                    r.n.to_string(),
                    r.root.to_string(),
                    f(r.h),
                    r.next_b.to_string(),
                    f(r.mean_p_h),
                    f(r.mean_p_o),
                ]
            })
        }),
    )
}

/// `z, mean_p_h, mean_p_o, knee`.
pub fn pareto_csv(p: &ParetoSweep) -> Result<Vec<u8>> {
    csv_bytes(
        &["z", "mean_p_h", "mean_p_o", "knee"],
        p.rows
            .iter()
            .map(|r| vec![f(r.z), f(r.mean_p_h), f(r.mean_p_o), (Some(r.z) == p.knee_z).to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{SweepSpec, RunMode};

    #[test]
    fn empty_sweep_gives_header_only_csv() {
        let t = TableResult {
            spec: SweepSpec { speeds: vec![], policies: vec![], trials: 1 },
            mode: RunMode::Multicell,
            config_hash: String::new(),
            seed: 0,
            cells: vec![],
        };
        assert_eq!(String::from_utf8(table_csv(&t).unwrap()).unwrap(), "row\n");
        assert_eq!(
            String::from_utf8(table_long_csv(&t).unwrap()).unwrap(),
            "policy,speed,metric,value,stderr,trials,samples\n"
        );
    }

    #[test]
    fn atomic_write_replaces_and_reports_bad_dirs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"a\n").unwrap();
        write_atomic(&path, b"b\n").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let bad = dir.path().join("missing").join("out.csv");
        assert!(matches!(write_atomic(&bad, b"x"), Err(Error::Io { .. })));
        assert!(!bad.exists());
    }
}
