//! Simulates every configuration and writes the ranking as CSV to stdout.

use mctune::{exhaustive_sweep, PlatformConfig, ProblemSpec};

fn main() -> mctune::Result<()> {
    let platform = PlatformConfig::default();
    let problem = ProblemSpec::abstract_kernel(16)?;
    let report = exhaustive_sweep(&platform, &problem)?;
    report.write_csv(std::io::stdout())?;
    Ok(())
}
