//! Swarm search with four workers, round by round.

use std::time::Duration;

use mctune::{swarm_min_time, ExploreLimits, PlatformConfig, ProblemSpec};

fn main() -> mctune::Result<()> {
    let platform = PlatformConfig::default();
    let problem = ProblemSpec::abstract_kernel(16)?;
    let limits = ExploreLimits::swarm(Duration::from_secs(5));
    let r = swarm_min_time(&platform, &problem, 4, &limits, 42)?;
    for (i, round) in r.rounds.iter().enumerate() {
        println!(
            "round {i}: bound {:?}, {} traces in {} ms, best {:?}",
            round.bound, round.traces, round.wall_ms, round.best_time
        );
    }
    println!("T_min={} {}", r.t_min, r.params);
    Ok(())
}
