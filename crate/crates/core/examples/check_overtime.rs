//! Asks whether every run takes longer than T ticks, around the minimum.

use mctune::{check_overtime, ExploreLimits, PlatformConfig, ProblemSpec, Verdict};

fn main() -> mctune::Result<()> {
    let platform = PlatformConfig::default();
    let problem = ProblemSpec::abstract_kernel(8)?;
    for t in [43, 44] {
        let outcome = check_overtime(&platform, &problem, t, &ExploreLimits::default())?;
        match outcome.verdict {
            Verdict::Holds { exhaustive } => {
                println!("T={t}: holds (exhaustive: {exhaustive})")
            }
            Verdict::Violated(trace) => println!(
                "T={t}: counterexample {} finishing at {} after {} transitions",
                trace.params, trace.final_time, trace.steps
            ),
        }
        println!("  {} states visited", outcome.stats.states_visited);
    }
    Ok(())
}
