//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a result is not backed by an exhaustive
//! search or a run misbehaved, 2 for usage and configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::explorer::{check_overtime, ExploreLimits, SearchMode, Verdict};
use crate::machine::{deterministic_run, Policy};
use crate::model::{
    read_input_array, ConfigFile, KernelKind, PlatformConfig, ProblemSpec, TuningParams,
};
use crate::promela::{export_promela, ExportOptions};
use crate::search::{
    estimate_with_params, exhaustive_sweep, swarm_min_time, tune, FlagKind, TuneResult,
    DEFAULT_SWARM_BUDGET,
};
use crate::trace::Trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANOMALY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mctune",
    version,
    about = "Model-checking auto-tuner for kernel launch parameters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration under a fixed scheduler.
    Simulate(SimulateArgs),
    /// Check that every run takes longer than T ticks.
    Check(CheckArgs),
    /// Find the minimal time by bisection over T.
    Tune(TuneArgs),
    /// Find a small time with randomized parallel search.
    TuneSwarm(SwarmArgs),
    /// Simulate every configuration and rank them by time.
    Sweep(SweepArgs),
    /// Print the model as Promela source.
    ExportPromela(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// JSON file with `platform` and `problem` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input size, a power of two.
    #[arg(long)]
    pub size: Option<u32>,
    #[arg(long)]
    pub nd: Option<u32>,
    #[arg(long)]
    pub nu: Option<u32>,
    #[arg(long)]
    pub np: Option<u32>,
    /// Cost of a global-memory access in ticks.
    #[arg(long)]
    pub gmt: Option<u32>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Input array for the minimum kernel, one integer per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Abstract,
    Minimum,
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub budget_secs: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, requires = "ts")]
    pub wg: Option<u32>,
    #[arg(long, requires = "wg")]
    pub ts: Option<u32>,
    #[arg(long, value_enum, default_value = "round-robin")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    RoundRobin,
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Time bound in ticks.
    #[arg(short = 'T', long = "time-bound")]
    pub t: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Upper bound for the bisection; estimated by simulation when absent.
    #[arg(short = 'T', long = "time-bound")]
    pub t: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SwarmArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Bound written into the ltl block.
    #[arg(short = 'T', long = "time-bound")]
    pub t: Option<u64>,
    /// Keep every device and unit of the platform.
    #[arg(long)]
    pub full_hierarchy: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<(PlatformConfig, ProblemSpec)> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let mut platform = file.platform;
        platform.nd = self.nd.unwrap_or(platform.nd);
        platform.nu = self.nu.unwrap_or(platform.nu);
        platform.np = self.np.unwrap_or(platform.np);
        platform.gmt = self.gmt.unwrap_or(platform.gmt);
        platform.validate()?;

        let kernel = match self.kernel {
            Some(KernelArg::Abstract) => KernelKind::Abstract,
            Some(KernelArg::Minimum) => KernelKind::Minimum,
            None => file.problem.kernel,
        };
        let size = self.size.or(file.problem.size);
        let input_path = self.input.clone().or(file.problem.input_path);
        let problem = match kernel {
            KernelKind::Abstract => {
                let size = size.ok_or_else(|| Error::Config("--size is required".into()))?;
                ProblemSpec::abstract_kernel(size)?
            }
            KernelKind::Minimum => match input_path {
                Some(path) => {
                    let input = read_input_array(&path)?;
                    if let Some(size) = size {
                        if size as usize != input.len() {
                            return Err(Error::Config(format!(
                                "size {size} does not match the {} input values",
                                input.len()
                            )));
                        }
                    }
                    ProblemSpec::minimum(input)?
                }
                None => {
                    let size = size.ok_or_else(|| Error::Config("--size is required".into()))?;
                    ProblemSpec::minimum_default(size)?
                }
            },
        };
        Ok((platform, problem))
    }
}

impl LimitArgs {
    fn to_limits(&self, mode: SearchMode) -> Result<ExploreLimits> {
        let mut limits = ExploreLimits {
            mode,
            ..Default::default()
        };
        if let Some(d) = self.max_depth {
            limits.max_depth = d;
        }
        if let Some(secs) = self.budget_secs {
            if !(secs.is_finite() && secs > 0.0) {
                return Err(Error::Config(format!("bad budget {secs}")));
            }
            limits.wall_budget = Some(Duration::from_secs_f64(secs));
        }
        limits.validate()?;
        Ok(limits)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidPlatform(_)
        | Error::InvalidProblem(_)
        | Error::InvalidParams { .. }
        | Error::Infeasible { .. }
        | Error::TraceParse { .. }
        | Error::UpperBoundTooSmall(_) => EXIT_USAGE,
        _ => EXIT_ANOMALY,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Check(a) => cmd_check(&a, out),
        Command::Tune(a) => cmd_tune(&a, out),
        Command::TuneSwarm(a) => cmd_tune_swarm(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::ExportPromela(a) => cmd_export_promela(&a, out),
    }
}

fn prepare_out(dir: &Option<PathBuf>) -> Result<Option<&Path>> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Some(d.as_path()))
        }
        None => Ok(None),
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_trace(
    dir: &Path,
    name: &str,
    trace: &Trace,
    platform: &PlatformConfig,
    problem: &ProblemSpec,
) -> Result<PathBuf> {
    let path = dir.join(name);
    trace.write_to(&path, platform, problem)?;
    Ok(path)
}

#[derive(Serialize)]
struct SimulateReport {
    wg: u32,
    ts: u32,
    time: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<i64>,
    transitions: usize,
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let (platform, problem) = a.model.resolve()?;
    let params = match (a.wg, a.ts) {
        (Some(wg), Some(ts)) => TuningParams::new(wg, ts),
        _ => estimate_with_params(&platform, &problem, a.seed)?.0,
    };
    let policy = match a.policy {
        PolicyArg::RoundRobin => Policy::RoundRobin,
        PolicyArg::Random => Policy::SeededRandom(a.seed),
    };
    let run = deterministic_run(&platform, &problem, params, policy)?;
    writeln!(out, "wg={} ts={}", params.wg, params.ts)?;
    writeln!(out, "time={}", run.time)?;
    if let Some(r) = run.result {
        writeln!(out, "result={r}")?;
    }
    writeln!(out, "transitions={}", run.steps)?;
    if let Some(dir) = prepare_out(&a.out)? {
        write_trace(dir, "simulate.trail", &run.trace, &platform, &problem)?;
        let report = SimulateReport {
            wg: params.wg,
            ts: params.ts,
            time: run.time,
            result: run.result,
            transitions: run.steps,
        };
        write_json(dir, "simulate.json", &report)?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CheckReport {
    verdict: &'static str,
    bound: u64,
    exhaustive: bool,
    states_visited: u64,
    max_depth_reached: usize,
    wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<TuningParams>,
}

pub fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let (platform, problem) = a.model.resolve()?;
    let limits = a.limits.to_limits(SearchMode::Exact)?;
    let outcome = check_overtime(&platform, &problem, a.t, &limits)?;
    let dir = prepare_out(&a.out)?;
    let mut report = CheckReport {
        verdict: "holds",
        bound: a.t,
        exhaustive: false,
        states_visited: outcome.stats.states_visited,
        max_depth_reached: outcome.stats.max_depth_reached,
        wall_seconds: outcome.stats.wall_seconds,
        trace_path: None,
        time: None,
        params: None,
    };
    let code = match &outcome.verdict {
        Verdict::Holds { exhaustive } => {
            report.exhaustive = *exhaustive;
            if *exhaustive {
                writeln!(out, "HOLDS (exhaustive)")?;
                EXIT_OK
            } else {
                writeln!(out, "HOLDS (not exhaustive)")?;
                EXIT_ANOMALY
            }
        }
        Verdict::Violated(trace) => {
            report.verdict = "violated";
            report.time = Some(trace.final_time);
            report.params = Some(trace.params);
            writeln!(
                out,
                "VIOLATED time={} WG={} TS={}",
                trace.final_time, trace.params.wg, trace.params.ts
            )?;
            if let Some(dir) = dir {
                report.trace_path =
                    Some(write_trace(dir, "check.trail", trace, &platform, &problem)?);
            }
            EXIT_OK
        }
    };
    writeln!(out, "states={}", report.states_visited)?;
    if let Some(dir) = dir {
        write_json(dir, "check.json", &report)?;
    }
    Ok(code)
}

fn report_tune(
    result: &TuneResult,
    name: &str,
    dir: Option<&Path>,
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    out: &mut dyn Write,
) -> Result<()> {
    writeln!(out, "T_ini={}", result.t_ini)?;
    writeln!(
        out,
        "checks={} states={}",
        result.stats.checks_run, result.stats.states_visited_total
    )?;
    writeln!(
        out,
        "first_trail_optimality={:.3}",
        result.first_trail_optimality
    )?;
    let note = if result.proven {
        ""
    } else {
        " (not exhaustive)"
    };
    writeln!(
        out,
        "T_min={} WG={} TS={}{note}",
        result.t_min, result.params.wg, result.params.ts
    )?;
    if let Some(dir) = dir {
        write_trace(
            dir,
            &format!("{name}.trail"),
            &result.trace,
            platform,
            problem,
        )?;
        write_json(dir, &format!("{name}.json"), result)?;
    }
    Ok(())
}

pub fn cmd_tune(a: &TuneArgs, out: &mut dyn Write) -> Result<i32> {
    let (platform, problem) = a.model.resolve()?;
    let limits = a.limits.to_limits(SearchMode::Exact)?;
    let result = match a.t {
        Some(t_hi) => crate::search::bisect_min_time(&platform, &problem, t_hi, &limits)?,
        None => tune(&platform, &problem, a.seed, &limits)?,
    };
    let dir = prepare_out(&a.out)?;
    report_tune(&result, "tune", dir, &platform, &problem, out)?;
    Ok(if result.proven { EXIT_OK } else { EXIT_ANOMALY })
}

pub fn cmd_tune_swarm(a: &SwarmArgs, out: &mut dyn Write) -> Result<i32> {
    let (platform, problem) = a.model.resolve()?;
    let mut limits = a.limits.to_limits(SearchMode::bitstate())?;
    limits.wall_budget = limits.wall_budget.or(Some(DEFAULT_SWARM_BUDGET));
    let result = swarm_min_time(&platform, &problem, a.workers, &limits, a.seed)?;
    for (i, round) in result.rounds.iter().enumerate() {
        let bound = round
            .bound
            .map_or_else(|| "nontermination".to_string(), |t| format!("T={t}"));
        writeln!(
            out,
            "round {i}: {bound} traces={} best={}",
            round.traces,
            round
                .best_time
                .map_or_else(|| "-".to_string(), |t| t.to_string())
        )?;
    }
    let dir = prepare_out(&a.out)?;
    report_tune(&result, "swarm", dir, &platform, &problem, out)?;
    // swarm answers are upper bounds by construction, not an anomaly
    Ok(EXIT_OK)
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let (platform, problem) = a.model.resolve()?;
    let report = exhaustive_sweep(&platform, &problem)?;
    report.write_csv(&mut *out)?;
    for f in &report.flagged {
        log::info!("wg={} ts={} skipped: {}", f.wg, f.ts, f.reason);
    }
    if let Some(dir) = prepare_out(&a.out)? {
        report.write_csv(fs::File::create(dir.join("sweep.csv"))?)?;
        write_json(dir, "sweep.json", &report)?;
    }
    let deadlocked = report.flagged.iter().any(|f| f.kind == FlagKind::Deadlock);
    Ok(if deadlocked { EXIT_ANOMALY } else { EXIT_OK })
}

pub fn cmd_export_promela(a: &ExportArgs, out: &mut dyn Write) -> Result<i32> {
    let (platform, problem) = a.model.resolve()?;
    let text = export_promela(
        &platform,
        &problem,
        ExportOptions {
            full_hierarchy: a.full_hierarchy,
            bound: a.t,
        },
    )?;
    match prepare_out(&a.out)? {
        Some(dir) => fs::write(dir.join("model.pml"), &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["mctune"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn simulate_prints_time() {
        let (code, out, _) = run_str(&["simulate", "--size", "8", "--wg", "4", "--ts", "4"]);
        assert_eq!(code, 0);
        assert!(out.lines().any(|l| l == "time=44"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_str(&["simulate"]).0, 2);
        assert_eq!(run_str(&["bogus"]).0, 2);
        assert_eq!(run_str(&["simulate", "--size", "6"]).0, 2);
        let (code, _, err) = run_str(&["check", "--config", "/nonexistent/cfg.json", "-T", "3"]);
        assert_eq!(code, 2);
        assert!(err.contains("cannot read config"));
        assert_eq!(run_str(&["--help"]).0, 0);
    }

    #[test]
    fn limited_check_is_an_anomaly() {
        let (code, out, _) = run_str(&["check", "--size", "8", "-T", "44", "--max-depth", "5"]);
        assert_eq!(code, 1);
        assert!(out.contains("HOLDS (not exhaustive)"));
    }
}
