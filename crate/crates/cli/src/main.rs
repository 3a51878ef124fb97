use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use powerdamp::check::{all_passed, run_checks};
use powerdamp::metrics::{self, MetricsReport};
use powerdamp::scenarios::{self, Builtin, ScenarioConfig, ScenarioError};
use powerdamp::simkernel::{self, SimTrace, TraceMetadata};

#[derive(Parser)]
#[command(name = "powerdamp", version, about = "Event-triggered power-based oscillation compensator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List built-in scenarios.
    List,
    /// Print a scenario as TOML (after overrides).
    Show(ScenarioArgs),
    /// Run one scenario and write trace.csv, events.csv, metrics.json.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a scenario for every combination of parameter values, in parallel.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `key=v1,v2,...`; repeat for a grid.
        #[arg(long = "vary", value_name = "KEY=V1,V2,...", required = true)]
        vary: Vec<String>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Fast self-test of the core identities.
    Check {
        /// Relative error injected into the gain constant (test hook).
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb_gain: f64,
    },
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Built-in scenario name (see `list`).
    #[arg(required_unless_present = "config")]
    name: Option<String>,
    /// Scenario TOML file instead of a built-in.
    #[arg(long, conflicts_with = "name")]
    config: Option<PathBuf>,
    /// `key=value`; a builder parameter or a dotted path into the scenario.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    duration: Option<f64>,
    /// Sampling frequency for both simulation and detector.
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long)]
    no_compensator: bool,
}

impl ScenarioArgs {
    /// Every override as `(key, value)`, flags expanded to their dotted paths.
    fn overrides(&self) -> anyhow::Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects key=value, got '{kv}'"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(seed) = self.seed {
            out.push(("sim.seed".into(), seed.to_string()));
        }
        if let Some(d) = self.duration {
            out.push(("sim.duration".into(), format!("{d:?}")));
        }
        if let Some(fs) = self.fs {
            out.push(("sim.fs".into(), format!("{fs:?}")));
            out.push(("detector.fs".into(), format!("{fs:?}")));
        }
        if self.no_compensator {
            out.push(("compensator.enabled".into(), "false".into()));
        }
        Ok(out)
    }

    fn resolve(&self, extra: &[(String, String)]) -> anyhow::Result<(ScenarioConfig, Vec<(String, String)>)> {
        let mut overrides = self.overrides()?;
        overrides.extend_from_slice(extra);
        let cfg = match (&self.name, &self.config) {
            (_, Some(path)) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let mut cfg = ScenarioConfig::from_toml(&text)?;
                apply_paths(&mut cfg, &overrides)?;
                cfg
            }
            (Some(name), None) => scenarios::resolve(name, &overrides)?,
            (None, None) => unreachable!("clap requires a name or --config"),
        };
        Ok((cfg, overrides))
    }
}

/// `--fs` edits two fields that must agree; apply them together.
fn apply_paths(cfg: &mut ScenarioConfig, overrides: &[(String, String)]) -> Result<(), ScenarioError> {
    for (k, v) in overrides {
        if k == "sim.fs" {
            cfg.detector.fs = v.parse().map_err(|_| ScenarioError::BadValue {
                path: k.clone(),
                reason: format!("not a number: {v}"),
            })?;
        }
        cfg.apply_override(k, v)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RunMeta<'a> {
    #[serde(flatten)]
    trace: &'a TraceMetadata,
    samples: usize,
    events: usize,
    exit_code: i32,
}

/// Writes `bytes` next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn metrics_for(cfg: &ScenarioConfig, trace: &SimTrace) -> MetricsReport {
    let omega = scenarios::nominal_frequency(cfg).unwrap_or(cfg.detector.omega_max);
    let envelope = metrics::envelope_from_events(trace);
    let reference = trace
        .metadata
        .compensator_enabled_from
        .and_then(|t| metrics::envelope_at(&envelope, t))
        .or_else(|| envelope.first().map(|p| p.1));
    metrics::report(trace, omega, reference.map(|a| 0.1 * a))
}

/// Runs and writes all outputs; returns the run's exit code.
fn execute(cfg: &ScenarioConfig, overrides: Vec<(String, String)>, out: &Path) -> anyhow::Result<i32> {
    let mut trace = simkernel::run(cfg)?;
    trace.metadata.overrides = overrides;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    write_atomic(&out.join("trace.csv"), &buf)?;
    buf.clear();
    trace.write_events_csv(&mut buf)?;
    write_atomic(&out.join("events.csv"), &buf)?;

    let report = metrics_for(cfg, &trace);
    write_atomic(&out.join("metrics.json"), &serde_json::to_vec_pretty(&report)?)?;
    let meta = RunMeta {
        trace: &trace.metadata,
        samples: trace.len(),
        events: trace.events.len(),
        exit_code: trace.exit_code(),
    };
    write_atomic(&out.join("meta.json"), &serde_json::to_vec_pretty(&meta)?)?;
    write_atomic(&out.join("scenario.toml"), cfg.to_toml()?.as_bytes())?;

    if let Some(tr) = &trace.metadata.truncated {
        eprintln!("{}: diverged at t = {:.4} s ({:?}); trace truncated", cfg.name, tr.t, tr.reason);
    }
    Ok(trace.exit_code())
}

fn cmd_list() -> i32 {
    for b in Builtin::ALL {
        let params: Vec<String> = b.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{:<16} {}", b.name(), b.summary());
        if !params.is_empty() {
            println!("{:<16} params: {}", "", params.join(" "));
        }
    }
    0
}

fn cmd_run(args: &ScenarioArgs, out: &Path) -> anyhow::Result<i32> {
    let (cfg, overrides) = args.resolve(&[])?;
    let code = execute(&cfg, overrides, out)?;
    println!("{}: wrote {}", cfg.name, out.display());
    Ok(code)
}

fn parse_grid(vary: &[String]) -> anyhow::Result<Vec<Vec<(String, String)>>> {
    let mut grid: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for spec in vary {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--vary expects key=v1,v2,..., got '{spec}'"))?;
        let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(anyhow!("--vary '{key}' has no values"));
        }
        grid = grid
            .into_iter()
            .flat_map(|combo| {
                values.iter().map(move |v| {
                    let mut c = combo.clone();
                    c.push((key.trim().to_string(), v.to_string()));
                    c
                })
            })
            .collect();
    }
    Ok(grid)
}

fn cmd_sweep(args: &ScenarioArgs, vary: &[String], out: &Path) -> anyhow::Result<i32> {
    let grid = parse_grid(vary)?;
    // Resolve everything first so config errors stop the sweep before any run.
    let jobs = grid
        .into_iter()
        .map(|combo| {
            let dir = combo
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(",");
            args.resolve(&combo).map(|(cfg, ov)| (out.join(dir), cfg, ov))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let results: Vec<(PathBuf, anyhow::Result<i32>)> = jobs
        .into_par_iter()
        .map(|(dir, cfg, ov)| {
            let r = execute(&cfg, ov, &dir);
            (dir, r)
        })
        .collect();
    let mut worst = 0;
    for (dir, r) in results {
        match r {
            Ok(code) => {
                println!("{} -> {code}", dir.display());
                worst = worst.max(code);
            }
            Err(e) => return Err(e.context(format!("run {}", dir.display()))),
        }
    }
    Ok(worst)
}

fn cmd_check(perturb: f64) -> i32 {
    let results = run_checks(perturb);
    for r in &results {
        let status = if r.passed { "ok" } else { "FAIL" };
        println!("{:<20} residual {:.3e} (tol {:.0e})  {status}", r.name, r.residual, r.tolerance);
    }
    if all_passed(&results) {
        0
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List => Ok(cmd_list()),
        Command::Show(args) => args.resolve(&[]).and_then(|(cfg, _)| {
            print!("{}", cfg.to_toml()?);
            Ok(0)
        }),
        Command::Run { scenario, out } => cmd_run(scenario, out),
        Command::Sweep { scenario, vary, out } => cmd_sweep(scenario, vary, out),
        Command::Check { perturb_gain } => Ok(cmd_check(*perturb_gain)),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
