//! Estimates a starting bound by simulation and bisects down to the minimum.

use mctune::{tune, ExploreLimits, PlatformConfig, ProblemSpec};

fn main() -> mctune::Result<()> {
    let platform = PlatformConfig::default();
    for size in [8, 16, 32] {
        let problem = ProblemSpec::abstract_kernel(size)?;
        let r = tune(&platform, &problem, 1, &ExploreLimits::default())?;
        println!(
            "size {size}: T_ini={} T_min={} {} ({} checks, proven: {})",
            r.t_ini, r.t_min, r.params, r.stats.checks_run, r.proven
        );
    }
    Ok(())
}
