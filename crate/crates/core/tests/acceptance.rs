//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any FAIL.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mctune::explorer::explore_config;
use mctune::{
    bisect_min_time, check_nontermination, check_overtime, deterministic_run, enumerate_configs,
    exhaustive_sweep, export_promela, replay, swarm_min_time, tune, Error, ExploreLimits,
    ExportOptions, PlatformConfig, Policy, ProblemSpec, TuningParams, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: Error) -> String {
    err.to_string()
}

fn platform() -> PlatformConfig {
    PlatformConfig::new(1, 1, 4, 4).unwrap()
}

fn exact() -> ExploreLimits {
    ExploreLimits::default()
}

fn c1_table_row_one() -> Outcome {
    let started = Instant::now();
    let problem = ProblemSpec::abstract_kernel(8).map_err(e)?;
    let r = tune(&platform(), &problem, 0, &exact()).map_err(e)?;
    ensure(r.t_min == 44 && r.params == TuningParams::new(4, 4), || {
        format!("got T_min={} {}", r.t_min, r.params)
    })?;
    ensure(r.proven, || "bisection not exhaustive".into())?;
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("T_min=44 WG=4 TS=4 in {secs:.2}s"))
}

fn c2_bisection_boundary() -> Outcome {
    let mut notes = Vec::new();
    for size in [4, 8] {
        let problem = ProblemSpec::abstract_kernel(size).map_err(e)?;
        let r = tune(&platform(), &problem, 3, &exact()).map_err(e)?;
        let at = check_overtime(&platform(), &problem, r.t_min, &exact()).map_err(e)?;
        ensure(at.verdict.is_violated(), || {
            format!("size {size}: no counterexample at {}", r.t_min)
        })?;
        let below = check_overtime(&platform(), &problem, r.t_min - 1, &exact()).map_err(e)?;
        ensure(below.verdict == Verdict::Holds { exhaustive: true }, || {
            format!("size {size}: T={} is {:?}", r.t_min - 1, below.verdict)
        })?;
        notes.push(format!("size {size}: {}", r.t_min));
    }
    Ok(notes.join(", "))
}

fn c3_oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut problems = Vec::new();
    for size in [4, 8, 16] {
        problems.push(ProblemSpec::abstract_kernel(size).map_err(e)?);
    }
    for size in [8, 16] {
        problems.push(ProblemSpec::minimum_default(size).map_err(e)?);
    }
    let mut notes = Vec::new();
    for problem in &problems {
        let label = format!("{} {}", problem.kernel, problem.size);
        let r = tune(&platform(), problem, 11, &exact()).map_err(e)?;
        let sweep = exhaustive_sweep(&platform(), problem).map_err(e)?;
        let best = sweep
            .best()
            .ok_or_else(|| format!("{label}: empty sweep"))?;
        ensure(r.t_min == best.time, || {
            format!("{label}: bisection {} vs sweep {}", r.t_min, best.time)
        })?;
        let achieves = sweep
            .rows
            .iter()
            .any(|row| row.wg == r.params.wg && row.ts == r.params.ts && row.time == r.t_min);
        ensure(achieves, || {
            format!(
                "{label}: {} does not reach {} in the sweep",
                r.params, r.t_min
            )
        })?;
        notes.push(format!("{label}={}", r.t_min));
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 600.0, || format!("took {secs:.1}s"))?;
    Ok(notes.join(", "))
}

fn c4_swarm_consistency() -> Outcome {
    let mut notes = Vec::new();
    let generous = ExploreLimits::swarm(Duration::from_secs(30));
    for size in [8, 16] {
        let problem = ProblemSpec::abstract_kernel(size).map_err(e)?;
        let b = bisect_min_time(&platform(), &problem, 10_000, &exact()).map_err(e)?;
        let s = swarm_min_time(&platform(), &problem, 4, &generous, 17).map_err(e)?;
        ensure(s.t_min == b.t_min, || {
            format!("size {size}: swarm {} vs bisection {}", s.t_min, b.t_min)
        })?;
        notes.push(format!("size {size} equal at {}", s.t_min));
    }
    // tight budgets may miss the minimum but never undercut it
    for (size, states) in [(16, 300), (32, 2_000), (32, 20_000)] {
        let problem = ProblemSpec::abstract_kernel(size).map_err(e)?;
        let b = bisect_min_time(&platform(), &problem, 10_000, &exact()).map_err(e)?;
        let tight = ExploreLimits {
            max_states: Some(states),
            ..ExploreLimits::swarm(Duration::from_millis(200))
        };
        match swarm_min_time(&platform(), &problem, 4, &tight, 5) {
            Ok(s) => {
                ensure(s.t_min >= b.t_min, || {
                    format!("size {size}: swarm {} below bisection {}", s.t_min, b.t_min)
                })?;
                notes.push(format!("tight size {size}: {}>={}", s.t_min, b.t_min));
            }
            Err(Error::NeverTerminated) => notes.push(format!("tight size {size}: no trails")),
            Err(other) => return Err(e(other)),
        }
    }
    Ok(notes.join(", "))
}

fn c5_minimum_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut replayed = 0;
    for case in 0..100 {
        let size = 1u32 << rng.gen_range(2..=6);
        let input: Vec<i64> = (0..size).map(|_| rng.gen_range(-1000..=1000)).collect();
        let expected = *input.iter().min().unwrap();
        let problem = ProblemSpec::minimum(input).map_err(e)?;
        let feasible: Vec<TuningParams> = enumerate_configs(size)
            .map_err(e)?
            .into_iter()
            .filter(|p| mctune::initial_state(&platform(), &problem, *p).is_ok())
            .collect();
        let params = feasible[rng.gen_range(0..feasible.len())];
        let run = deterministic_run(&platform(), &problem, params, Policy::SeededRandom(case))
            .map_err(e)?;
        ensure(run.result == Some(expected), || {
            format!(
                "case {case}: {params} gave {:?}, want {expected}",
                run.result
            )
        })?;
        let end = replay(&platform(), &problem, &run.trace).map_err(e)?;
        ensure(end.result() == Some(expected), || {
            format!("case {case}: replay gave {:?}", end.result())
        })?;
        replayed += 1;

        // small inputs: every terminating interleaving of every configuration
        if size <= 8 {
            let (traces, _) = check_nontermination(&platform(), &problem, &exact()).map_err(e)?;
            for trace in &traces {
                let end = replay(&platform(), &problem, trace).map_err(e)?;
                ensure(end.result() == Some(expected), || {
                    format!(
                        "case {case}: trail {} gave {:?}",
                        trace.params,
                        end.result()
                    )
                })?;
                replayed += 1;
            }
        }
    }
    Ok(format!("100 arrays, {replayed} replayed traces"))
}

fn c6_minimum_trend() -> Outcome {
    let mut best_wg = Vec::new();
    for size in [16, 64] {
        let problem = ProblemSpec::minimum_default(size).map_err(e)?;
        let sweep = exhaustive_sweep(&platform(), &problem).map_err(e)?;
        let best = sweep.best().ok_or("empty sweep")?;
        let widest = sweep
            .rows
            .iter()
            .filter(|r| r.time == best.time)
            .map(|r| r.wg)
            .max()
            .unwrap();
        ensure(best.wg == widest, || {
            format!(
                "size {size}: best wg {} but tied rows reach wg {widest}",
                best.wg
            )
        })?;
        best_wg.push((size, best.wg, best.ts, best.time));
    }
    ensure(best_wg[0].1 == 8, || {
        format!("size 16 best wg is {}", best_wg[0].1)
    })?;
    ensure(best_wg[0].1 <= best_wg[1].1, || {
        format!("best wg shrinks: {best_wg:?}")
    })?;
    Ok(best_wg
        .iter()
        .map(|(s, wg, ts, t)| format!("size {s}: WG {wg} TS {ts} time {t}"))
        .collect::<Vec<_>>()
        .join(", "))
}

fn c7_interleaving_invariants() -> Outcome {
    let problem = ProblemSpec::abstract_kernel(8).map_err(e)?;
    let mut states = 0;
    for params in enumerate_configs(8).map_err(e)? {
        // deadlocks and invariant breaches surface as errors
        let reach = explore_config(&platform(), &problem, params, &exact()).map_err(e)?;
        ensure(!reach.stats.truncated, || format!("{params}: truncated"))?;
        let run =
            deterministic_run(&platform(), &problem, params, Policy::RoundRobin).map_err(e)?;
        ensure(reach.terminal_times == BTreeSet::from([run.time]), || {
            format!(
                "{params}: terminal times {:?} vs {}",
                reach.terminal_times, run.time
            )
        })?;
        states += reach.stats.states_visited;
    }
    Ok(format!("{states} states, one final time per configuration"))
}

fn c8_monotone_verdicts() -> Outcome {
    let problem = ProblemSpec::abstract_kernel(8).map_err(e)?;
    let grid = [0, 20, 40, 43, 44, 45, 60, 88, 100, 1000];
    let mut verdicts = Vec::new();
    for t in grid {
        let out = check_overtime(&platform(), &problem, t, &exact()).map_err(e)?;
        verdicts.push(out.verdict.is_violated());
    }
    let monotone = verdicts.windows(2).all(|w| !w[0] || w[1]);
    ensure(monotone, || format!("verdicts {verdicts:?} over {grid:?}"))?;
    ensure(verdicts[3..5] == [false, true], || {
        "boundary not at 44".into()
    })?;
    Ok("violated exactly from T=44 on a 10-point grid".into())
}

fn c9_export() -> Outcome {
    let problem = ProblemSpec::abstract_kernel(8).map_err(e)?;
    let a = export_promela(&platform(), &problem, ExportOptions::default()).map_err(e)?;
    let b = export_promela(&platform(), &problem, ExportOptions::default()).map_err(e)?;
    for needle in [
        "NRP_work == allNWE",
        "WGs = size / (WG * TS)",
        "ltl over_time",
    ] {
        ensure(a.contains(needle), || format!("missing {needle:?}"))?;
    }
    ensure(a == b, || "exports differ".into())?;
    Ok(format!("{} bytes, identical reruns", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "table row 1 reproduction", c1_table_row_one),
        (2, "bisection boundary", c2_bisection_boundary),
        (3, "oracle equivalence", c3_oracle_equivalence),
        (4, "swarm consistency", c4_swarm_consistency),
        (5, "minimum-kernel correctness", c5_minimum_correctness),
        (6, "minimum-kernel trend", c6_minimum_trend),
        (7, "interleaving invariants", c7_interleaving_invariants),
        (
            8,
            "larger rows substitute: monotone verdicts",
            c8_monotone_verdicts,
        ),
        (9, "export validity", c9_export),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {n} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n} {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
