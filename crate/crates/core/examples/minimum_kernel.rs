//! The minimum-reduction kernel: functional result plus the best launch
//! shape for a few input sizes.

use mctune::{
    deterministic_run, exhaustive_sweep, PlatformConfig, Policy, ProblemSpec, TuningParams,
};

fn main() -> mctune::Result<()> {
    let platform = PlatformConfig::default();

    let problem = ProblemSpec::minimum(vec![17, -3, 8, 42, 0, 9, -3, 5])?;
    let run = deterministic_run(
        &platform,
        &problem,
        TuningParams::new(2, 2),
        Policy::SeededRandom(9),
    )?;
    println!(
        "min of {:?} = {:?} at time {}",
        problem.input.as_ref().unwrap(),
        run.result,
        run.time
    );

    for size in [16, 64] {
        let report = exhaustive_sweep(&platform, &ProblemSpec::minimum_default(size)?)?;
        let best = report.best().expect("at least one feasible configuration");
        println!(
            "size {size}: best wg={} ts={} time={} ({} configurations skipped)",
            best.wg,
            best.ts,
            best.time,
            report.flagged.len()
        );
    }
    Ok(())
}
