//! Tuning drivers built on the explorer.
//!
//! * [`bisect_min_time`] binary-searches the least `T` for which
//!   `G(fin -> time > T)` has a counterexample, using exact exploration.
//! * [`swarm_min_time`] races seeded bitstate workers, first against `G(!fin)`
//!   and then against ever tighter over-time bounds, and stops once a round
//!   comes back empty. Its answer is an upper bound on the true minimum.
//! * [`exhaustive_sweep`] simulates every configuration once and is the
//!   oracle the other two are checked against.

use std::io::Write;
use std::sync::atomic::AtomicBool;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::explorer::{
    check_overtime, replay, root_states, swarm_worker, ExploreLimits, Property, SearchMode, Verdict,
};
use crate::machine::{deterministic_run, Policy};
use crate::model::{enumerate_configs, PlatformConfig, ProblemSpec, TuningParams};
use crate::trace::Trace;

/// Budget for the first swarm round when the caller sets none.
pub const DEFAULT_SWARM_BUDGET: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bisect,
    Swarm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TuneStats {
    pub checks_run: u32,
    pub states_visited_total: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwarmRound {
    /// `None` for the opening non-termination round.
    pub bound: Option<u64>,
    pub budget_ms: u64,
    pub wall_ms: u64,
    pub traces: usize,
    pub best_time: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneResult {
    pub t_min: u64,
    pub params: TuningParams,
    #[serde(skip)]
    pub trace: Trace,
    pub t_ini: u64,
    pub stats: TuneStats,
    pub method: Method,
    /// Every check behind the answer was exhaustive. Never set for swarm.
    pub proven: bool,
    /// `t_min` over the time of the first counterexample found.
    pub first_trail_optimality: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<SwarmRound>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub size: u32,
    pub wg: u32,
    pub ts: u32,
    pub time: u64,
    pub transitions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagKind {
    /// The kernel would read past global memory.
    Infeasible,
    Deadlock,
}

/// A configuration the sweep could not run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlaggedConfig {
    pub wg: u32,
    pub ts: u32,
    pub kind: FlagKind,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub flagged: Vec<FlaggedConfig>,
}

impl SweepReport {
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.first()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["size", "wg", "ts", "time", "transitions"])?;
        for r in &self.rows {
            w.write_record([
                r.size.to_string(),
                r.wg.to_string(),
                r.ts.to_string(),
                r.time.to_string(),
                r.transitions.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Extracted {
    pub wg: u32,
    pub ts: u32,
    pub time: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankedTrail {
    pub time: u64,
    pub wg: u32,
    pub ts: u32,
    pub transitions: usize,
}

/// Preferred order among configurations of equal time: larger `wg`, then
/// larger `ts`.
fn preference(p: TuningParams) -> (std::cmp::Reverse<u32>, std::cmp::Reverse<u32>) {
    (std::cmp::Reverse(p.wg), std::cmp::Reverse(p.ts))
}

/// Simulates one randomly chosen configuration under a seeded random
/// schedule and returns its final time as a starting bound.
pub fn estimate_initial_time(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    seed: u64,
) -> Result<u64> {
    let (_, time) = estimate_with_params(platform, problem, seed)?;
    Ok(time)
}

pub fn estimate_with_params(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    seed: u64,
) -> Result<(TuningParams, u64)> {
    let roots = root_states(platform, problem)?;
    if roots.is_empty() {
        return Err(Error::InvalidProblem(format!(
            "no feasible configuration for size {}",
            problem.size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = roots[rng.gen_range(0..roots.len())].params();
    let run = deterministic_run(platform, problem, params, Policy::SeededRandom(seed))?;
    Ok((params, run.time))
}

/// Least `T` in `[0, t_hi]` whose over-time check yields a counterexample.
pub fn bisect_min_time(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    t_hi: u64,
    limits: &ExploreLimits,
) -> Result<TuneResult> {
    if limits.mode != SearchMode::Exact {
        return Err(Error::Contract("bisection needs exact exploration".into()));
    }
    let started = Instant::now();
    let mut stats = TuneStats::default();
    let mut proven = true;
    let mut check = |t: u64| -> Result<Option<Trace>> {
        let out = check_overtime(platform, problem, t, limits)?;
        stats.checks_run += 1;
        stats.states_visited_total += out.stats.states_visited;
        log::debug!("check T={t}: {:?}", out.verdict.is_violated());
        Ok(match out.verdict {
            Verdict::Violated(trace) => Some(trace),
            Verdict::Holds { exhaustive } => {
                proven &= exhaustive;
                None
            }
        })
    };

    let first = check(t_hi)?.ok_or(Error::UpperBoundTooSmall(t_hi))?;
    let first_time = first.final_time;
    let mut best = first;
    let (mut lo, mut hi) = (0, t_hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match check(mid)? {
            Some(trace) => {
                hi = mid;
                best = trace;
            }
            None => lo = mid + 1,
        }
    }
    // C(best.final_time) holds, so lo never passes it and hi lands on it
    debug_assert_eq!(best.final_time, hi);
    stats.wall_seconds = started.elapsed().as_secs_f64();
    Ok(TuneResult {
        t_min: best.final_time,
        params: best.params,
        t_ini: t_hi,
        first_trail_optimality: ratio(hi, first_time),
        trace: best,
        stats,
        method: Method::Bisect,
        proven,
        rounds: Vec::new(),
    })
}

/// Estimates a bound by simulation, then bisects below it.
pub fn tune(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    seed: u64,
    limits: &ExploreLimits,
) -> Result<TuneResult> {
    let t_ini = estimate_initial_time(platform, problem, seed)?;
    let mut result = bisect_min_time(platform, problem, t_ini, limits)?;
    result.t_ini = t_ini;
    Ok(result)
}

fn ratio(t_min: u64, first: u64) -> f64 {
    if first == 0 {
        1.0
    } else {
        t_min as f64 / first as f64
    }
}

fn worker_seed(seed: u64, round: usize, worker: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(((round as u64) << 32) | worker as u64)
}

/// Runs `workers` seeded workers in parallel and returns their traces in
/// worker order, then discovery order.
fn swarm_round(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    property: Property,
    workers: usize,
    seed: u64,
    round: usize,
    limits: &ExploreLimits,
) -> Result<(Vec<Trace>, u64)> {
    let stop = AtomicBool::new(false);
    let sink: Mutex<Vec<(usize, Vec<Trace>)>> = Mutex::new(Vec::new());
    let mut states = 0;
    let results: Vec<Result<u64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (stop, sink) = (&stop, &sink);
                scope.spawn(move || {
                    let found = swarm_worker(
                        platform,
                        problem,
                        property,
                        worker_seed(seed, round, w),
                        limits,
                        Some(stop),
                    );
                    match found {
                        Ok((traces, stats)) => {
                            sink.lock().expect("sink poisoned").push((w, traces));
                            Ok(stats.states_visited)
                        }
                        Err(e) => {
                            stop.store(true, std::sync::atomic::Ordering::Relaxed);
                            Err(e)
                        }
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("swarm worker panicked"))
            .collect()
    });
    for r in results {
        states += r?;
    }
    let mut per_worker = sink.into_inner().expect("sink poisoned");
    per_worker.sort_by_key(|(w, _)| *w);
    Ok((
        per_worker.into_iter().flat_map(|(_, t)| t).collect(),
        states,
    ))
}

fn best_trace(traces: &[Trace]) -> Option<&Trace> {
    traces
        .iter()
        .min_by_key(|t| (t.final_time, preference(t.params)))
}

/// Swarm search for the minimal time. `limits.wall_budget` bounds the
/// opening round; each later round gets the wall time of the one before.
pub fn swarm_min_time(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    workers: usize,
    limits: &ExploreLimits,
    seed: u64,
) -> Result<TuneResult> {
    if workers == 0 {
        return Err(Error::Config("at least one swarm worker is needed".into()));
    }
    let mut limits = *limits;
    if limits.mode == SearchMode::Exact {
        limits.mode = SearchMode::bitstate();
    }
    let started = Instant::now();
    let mut stats = TuneStats::default();
    let mut rounds = Vec::new();

    let mut budget = limits.wall_budget.unwrap_or(DEFAULT_SWARM_BUDGET);
    let mut property = Property::NonTermination;
    let mut best: Option<Trace> = None;
    let mut first_time = None;
    loop {
        let round_limits = ExploreLimits {
            wall_budget: Some(budget),
            ..limits
        };
        let round_start = Instant::now();
        let (traces, states) = swarm_round(
            platform,
            problem,
            property,
            workers,
            seed,
            rounds.len(),
            &round_limits,
        )?;
        let wall_ms = round_start.elapsed().as_millis() as u64;
        stats.checks_run += 1;
        stats.states_visited_total += states;
        if first_time.is_none() {
            first_time = traces.first().map(|t| t.final_time);
        }
        let round_best = best_trace(&traces).cloned();
        rounds.push(SwarmRound {
            bound: match property {
                Property::OverTime(t) => Some(t),
                Property::NonTermination => None,
            },
            budget_ms: budget.as_millis() as u64,
            wall_ms,
            traces: traces.len(),
            best_time: round_best.as_ref().map(|t| t.final_time),
        });
        log::info!(
            "swarm round {}: {} traces in {wall_ms} ms",
            rounds.len() - 1,
            traces.len()
        );

        let improved = match (&round_best, &best) {
            (Some(new), Some(old)) => new.final_time < old.final_time,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if !improved {
            break;
        }
        best = round_best;
        let t = best.as_ref().expect("just set").final_time;
        if t == 0 {
            break;
        }
        property = Property::OverTime(t - 1);
        budget = Duration::from_millis(wall_ms.max(1));
    }

    let best = best.ok_or(Error::NeverTerminated)?;
    stats.wall_seconds = started.elapsed().as_secs_f64();
    Ok(TuneResult {
        t_min: best.final_time,
        params: best.params,
        t_ini: first_time.unwrap_or(best.final_time),
        first_trail_optimality: ratio(best.final_time, first_time.unwrap_or(best.final_time)),
        trace: best,
        stats,
        method: Method::Swarm,
        proven: false,
        rounds,
    })
}

/// Runs every configuration once with the round-robin scheduler. Rows are
/// sorted by time, ties by preference (larger `wg`, then larger `ts`), then
/// by transition count.
pub fn exhaustive_sweep(platform: &PlatformConfig, problem: &ProblemSpec) -> Result<SweepReport> {
    let mut report = SweepReport::default();
    for params in enumerate_configs(problem.size)? {
        match deterministic_run(platform, problem, params, Policy::RoundRobin) {
            Ok(run) => report.rows.push(SweepRow {
                size: problem.size,
                wg: params.wg,
                ts: params.ts,
                time: run.time,
                transitions: run.steps,
                result: run.result,
            }),
            Err(e @ (Error::Infeasible { .. } | Error::Deadlock { .. })) => {
                let kind = if matches!(e, Error::Deadlock { .. }) {
                    log::warn!("sweep: {e}");
                    FlagKind::Deadlock
                } else {
                    FlagKind::Infeasible
                };
                report.flagged.push(FlaggedConfig {
                    wg: params.wg,
                    ts: params.ts,
                    kind,
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    report.rows.sort_by_key(|r| {
        (
            r.time,
            preference(TuningParams::new(r.wg, r.ts)),
            r.transitions,
        )
    });
    Ok(report)
}

/// Reads the tuning parameters off a counterexample after replaying it.
pub fn extract_params(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    trace: &Trace,
) -> Result<Extracted> {
    let end = replay(platform, problem, trace)?;
    Ok(Extracted {
        wg: end.params().wg,
        ts: end.params().ts,
        time: end.time(),
    })
}

/// Orders trails by time, then transition count; equal keys keep their
/// discovery order.
pub fn rank_trails(traces: &[Trace]) -> Vec<RankedTrail> {
    let mut ranked: Vec<RankedTrail> = traces
        .iter()
        .map(|t| RankedTrail {
            time: t.final_time,
            wg: t.params.wg,
            ts: t.params.ts,
            transitions: t.steps,
        })
        .collect();
    ranked.sort_by_key(|r| (r.time, r.transitions));
    ranked
}
