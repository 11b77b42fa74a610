//! Runs each configuration of a size-8 abstract kernel once and prints its
//! model time.

use mctune::{deterministic_run, enumerate_configs, PlatformConfig, Policy, ProblemSpec};

fn main() -> mctune::Result<()> {
    let platform = PlatformConfig::new(1, 1, 4, 4)?;
    let problem = ProblemSpec::abstract_kernel(8)?;
    for params in enumerate_configs(problem.size)? {
        let run = deterministic_run(&platform, &problem, params, Policy::RoundRobin)?;
        println!("{params}: time={} transitions={}", run.time, run.steps);
    }
    Ok(())
}
