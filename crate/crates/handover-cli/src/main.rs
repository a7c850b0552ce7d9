//! `handover`: run the two-cell and multi-cell experiments, dump trellis
//! solutions, the approximation study and the speed-by-policy table.
//!
//! Configuration is layered: `--preset`, then the flags, then `--config`.
//! Failures print one JSON object on stderr and exit nonzero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use handover::config::ScenarioConfig;
use handover::harness::{self, Policy, RunMode, Scenario, Summary, SweepSpec};
use handover::metrics::{self, Evaluator};
use handover::optimizer::{self, Objective};
use handover::Error;

#[derive(Parser)]
#[command(name = "handover", version, about = "Hysteresis handover analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo trials of one policy.
    Simulate(SimulateArgs),
    /// One trellis solve, optionally with the margin profile and the Pareto sweep.
    Optimize(OptimizeArgs),
    /// Approximation accuracy along the two-cell path.
    Accuracy(AccuracyArgs),
    /// Speeds 5, 20, 40 m/s against margins 0, 2, 4 dB and the optimized policies.
    Table(TableArgs),
}

#[derive(Args)]
struct Common {
    /// Named starting configuration.
    #[arg(long, default_value = "paper-vi")]
    preset: String,
    /// TOML file applied over the preset and flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Terminal speed, m/s.
    #[arg(long)]
    speed: Option<f64>,
    /// avg, ls, els or gels.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    n_w: Option<usize>,
    /// Prediction horizon m.
    #[arg(long)]
    horizon: Option<usize>,
    /// Truncation depth K.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    mc_samples: Option<u64>,
    /// Pareto weight of the opt3 policy.
    #[arg(long)]
    z: Option<f64>,
    /// Any config key, dotted, with a TOML value: `--set channel.sigma_u=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Margin in dB, or opt1, opt2, opt3.
    #[arg(long, default_value = "0")]
    policy: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// two-cell or multicell; defaults to two-cell on two BSs.
    #[arg(long)]
    mode: Option<String>,
    /// Also compute the analytic per-sample figures (two-cell, constant margin).
    #[arg(long)]
    analytic: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    /// opt1, opt2 or opt3.
    #[arg(long, default_value = "opt1")]
    objective: String,
    /// Sample at which the horizon starts.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Connection before sample n.
    #[arg(long, default_value_t = 0)]
    root: u8,
    /// Also write the opt1/opt2 margin profiles along the path.
    #[arg(long)]
    profile: bool,
    /// Also write the Pareto sweep over z = 0, 0.1, ..., 1.
    #[arg(long)]
    pareto: bool,
}

#[derive(Args)]
struct AccuracyArgs {
    #[command(flatten)]
    common: Common,
    /// Depth and approximation parameter as `k:m`; repeatable.
    #[arg(long = "case", default_values = ["6:3", "6:4", "8:4", "4:3"])]
    cases: Vec<String>,
    /// Constant margin, dB.
    #[arg(long, default_value_t = 2.0)]
    h: f64,
    /// Path samples to report.
    #[arg(long, default_value_t = 20)]
    instances: usize,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// two-cell or multicell; defaults to two-cell on two BSs.
    #[arg(long)]
    mode: Option<String>,
}

impl Common {
    fn flags(&self) -> Result<toml::Table, Error> {
        let mut t = toml::Table::new();
        let mut put = |key: &str, v: toml::Value| set_dotted(&mut t, key, v);
        if let Some(v) = self.seed {
            put("seed", toml::Value::Integer(as_toml_int(v)?));
        }
        if let Some(v) = self.speed {
            put("speed_mps", v.into());
        }
        if let Some(v) = &self.estimator {
            put("estimator.kind", v.to_ascii_lowercase().into());
        }
        if let Some(v) = self.n_w {
            put("estimator.n_w", toml::Value::Integer(as_toml_int(v as u64)?));
        }
        if let Some(v) = self.horizon {
            put("horizon", toml::Value::Integer(as_toml_int(v as u64)?));
        }
        if let Some(v) = self.depth {
            put("depth", toml::Value::Integer(as_toml_int(v as u64)?));
        }
        if let Some(v) = self.mc_samples {
            put("mc_samples", toml::Value::Integer(as_toml_int(v)?));
        }
        if let Some(v) = self.z {
            put("optimizer.z", v.into());
        }
        for kv in &self.set {
            let (key, raw) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            let value = parse_value(raw.trim())?;
            set_dotted(&mut t, key.trim(), value);
        }
        Ok(t)
    }

    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        ScenarioConfig::resolve(&self.preset, &self.flags()?, self.config.as_deref())
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), Error> {
        harness::write_atomic(&self.out_dir.join(name), bytes)
    }
}

fn as_toml_int(v: u64) -> Result<i64, Error> {
    i64::try_from(v).map_err(|_| Error::Config(format!("{v} does not fit a config integer")))
}

/// A TOML value, or a bare string when the text is not valid TOML.
fn parse_value(raw: &str) -> Result<toml::Value, Error> {
    let doc: Result<toml::Table, _> = toml::from_str(&format!("v = {raw}"));
    match doc {
        Ok(mut t) => Ok(t.remove("v").expect("parsed key")),
        Err(_) if !raw.is_empty() => Ok(toml::Value::String(raw.to_string())),
        Err(e) => Err(Error::ConfigParse(e)),
    }
}

fn set_dotted(t: &mut toml::Table, key: &str, v: toml::Value) {
    match key.split_once('.') {
        None => {
            t.insert(key.to_string(), v);
        }
        Some((head, rest)) => {
            let sub = t.entry(head.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            if !sub.is_table() {
                *sub = toml::Value::Table(toml::Table::new());
            }
            set_dotted(sub.as_table_mut().expect("table"), rest, v);
        }
    }
}

fn mode_for(arg: Option<&str>, scn: &Scenario) -> Result<RunMode, Error> {
    match arg {
        Some("two-cell") => Ok(RunMode::TwoCell),
        Some("multicell") => Ok(RunMode::Multicell),
        Some(other) => Err(Error::Config(format!("unknown mode {other:?}; use two-cell or multicell"))),
        None if scn.layout.len() == 2 => Ok(RunMode::TwoCell),
        None => Ok(RunMode::Multicell),
    }
}

fn objective_for(name: &str, z: f64) -> Result<Objective, Error> {
    name.parse::<Policy>()?
        .objective(z)
        .ok_or_else(|| Error::Config(format!("objective must be opt1, opt2 or opt3, got {name:?}")))
}

fn simulate(args: &SimulateArgs) -> Result<(), Error> {
    let cfg = args.common.resolve()?;
    let scn = Scenario::build(&cfg)?;
    let policy: Policy = args.policy.parse()?;
    let mode = mode_for(args.mode.as_deref(), &scn)?;
    let start = Instant::now();
    let mut result = harness::run(&scn, policy, mode, args.trials, harness::workers_from_env()?)?;
    if args.analytic {
        let Policy::Constant(h) = policy else {
            return Err(Error::Config("--analytic needs a constant margin".into()));
        };
        let rows = harness::analytic_samples(&scn, &vec![h; scn.len()], cfg.depth, Evaluator::exact(cfg.mc_samples, cfg.seed))?;
        result.analytic = Some(harness::analytic_aggregates(&rows, cfg.depth));
        let mut csv = Vec::new();
        metrics::write_csv(&rows, &mut csv)?;
        args.common.write("analytic.csv", &csv)?;
    }
    args.common.write("samples.csv", &harness::run_samples_csv(&result)?)?;
    args.common.write("run.json", &harness::run_json(&result)?)?;
    println!(
        "{} {} trials: H = {:.4} +/- {:.4}, O = {:.4} +/- {:.4}",
        policy.label(),
        result.trials,
        result.mean_switches,
        result.switches_stderr,
        result.mean_outages,
        result.outages_stderr
    );
    if let Some(a) = &result.analytic {
        println!("analytic (K = {}): H = {:.4}, O = {:.4}", a.depth, a.h_bar, a.o_bar);
    }
    eprintln!("wall time {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn optimize(args: &OptimizeArgs) -> Result<(), Error> {
    let cfg = args.common.resolve()?;
    let scn = Scenario::build(&cfg)?;
    if scn.layout.len() != 2 {
        return Err(Error::Config("optimize works on a two-cell layout".into()));
    }
    if args.n == 0 || args.n >= scn.len() {
        return Err(Error::Config(format!("--n must be in 1..{}", scn.len())));
    }
    if args.root > 1 {
        return Err(Error::Config("--root must be 0 or 1".into()));
    }
    let objective = objective_for(&args.objective, cfg.optimizer.z)?;
    let planner = harness::Planner::new(&scn, objective)?;
    let sol = planner.solve(args.n, 0, 1, args.root)?;
    let mut csv = Vec::new();
    optimizer::write_paths_csv(&sol, &mut csv)?;
    args.common.write("trellis.csv", &csv)?;
    args.common.write("solution.json", &Summary::new("optimize", &cfg, &sol).to_json()?)?;
    println!("n = {}, root = {}: h = {}, planned next BS = {}", args.n, args.root, sol.h, sol.next_b);
    if args.profile {
        let p1 = harness::optimal_h_profile(&scn, Objective::MinHandover)?;
        let p2 = harness::optimal_h_profile(&scn, Objective::MinOutage)?;
        args.common.write("profile.csv", &harness::profile_csv(&[("opt1", &p1), ("opt2", &p2)])?)?;
    }
    if args.pareto {
        let zs: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
        let sweep = harness::pareto_sweep(&scn, &zs)?;
        args.common.write("pareto.csv", &harness::pareto_csv(&sweep)?)?;
        args.common.write("pareto.json", &Summary::new("pareto", &cfg, &sweep).to_json()?)?;
        match sweep.knee_z {
            Some(z) => println!("Pareto knee at z = {z}"),
            None => println!("Pareto frontier has no interior knee"),
        }
    }
    Ok(())
}

fn accuracy(args: &AccuracyArgs) -> Result<(), Error> {
    let cfg = args.common.resolve()?;
    let scn = Scenario::build(&cfg)?;
    if scn.layout.len() != 2 {
        return Err(Error::Config("the accuracy study works on a two-cell layout".into()));
    }
    let mut studies = Vec::new();
    for case in &args.cases {
        let (k, m) = case
            .split_once(':')
            .and_then(|(k, m)| Some((k.trim().parse().ok()?, m.trim().parse().ok()?)))
            .ok_or_else(|| Error::Config(format!("--case expects k:m, got {case:?}")))?;
        let s = harness::run_accuracy_study(&scn, k, m, args.h, args.instances, cfg.seed)?;
        println!(
            "k = {k}, m = {m}: mean abs error B1 {:.3e}, LB2 {:.3e}, UB2 {:.3e}, UB3 {:.3e}",
            s.mae[0], s.mae[1], s.mae[2], s.mae[3]
        );
        studies.push(s);
    }
    args.common.write("accuracy.csv", &harness::accuracy_csv(&studies)?)?;
    args.common.write("accuracy.json", &Summary::new("accuracy", &cfg, &studies).to_json()?)?;
    Ok(())
}

fn table(args: &TableArgs) -> Result<(), Error> {
    let cfg = args.common.resolve()?;
    let scn = Scenario::build(&cfg)?;
    let mode = mode_for(args.mode.as_deref(), &scn)?;
    let start = Instant::now();
    let t = harness::run_table(&cfg, &SweepSpec::table_one(args.trials), mode, harness::workers_from_env()?)?;
    let wide = harness::table_csv(&t)?;
    args.common.write("table.csv", &wide)?;
    args.common.write("table_long.csv", &harness::table_long_csv(&t)?)?;
    args.common.write("table.json", &Summary::new("table", &cfg, &t).to_json()?)?;
    print!("{}", String::from_utf8_lossy(&wide));
    eprintln!("wall time {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render().to_string().trim().to_string(), 2),
    };
    let out_dir: &Path = match &cli.command {
        Command::Simulate(a) => &a.common.out_dir,
        Command::Optimize(a) => &a.common.out_dir,
        Command::Accuracy(a) => &a.common.out_dir,
        Command::Table(a) => &a.common.out_dir,
    };
    if !out_dir.is_dir() {
        return fail("io", format!("output directory {} does not exist", out_dir.display()), 1);
    }
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Optimize(a) => optimize(a),
        Command::Accuracy(a) => accuracy(a),
        Command::Table(a) => table(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if matches!(e, Error::Config(_) | Error::ConfigParse(_)) { 2 } else { 1 };
            fail(e.kind(), e.to_string(), code)
        }
    }
}
