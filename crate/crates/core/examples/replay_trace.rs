//! Finds a counterexample, writes it in the trail format, reads it back and
//! replays it.

use mctune::{
    check_overtime, extract_params, replay, ExploreLimits, PlatformConfig, ProblemSpec, Trace,
    Verdict,
};

fn main() -> mctune::Result<()> {
    let platform = PlatformConfig::default();
    let problem = ProblemSpec::minimum_default(16)?;
    let outcome = check_overtime(&platform, &problem, 30, &ExploreLimits::default())?;
    let Verdict::Violated(trace) = outcome.verdict else {
        println!("no run finishes within 30 ticks");
        return Ok(());
    };

    let text = trace.render(&platform, &problem)?;
    for line in text.lines().take(5) {
        println!("{line}");
    }
    println!("...");
    println!("{}", text.lines().last().unwrap_or_default());

    let parsed = Trace::parse(&text)?;
    let end = replay(&platform, &problem, &parsed)?;
    let e = extract_params(&platform, &problem, &parsed)?;
    println!(
        "replayed: fin={} time={} result={:?}, extracted wg={} ts={}",
        end.fin(),
        end.time(),
        end.result(),
        e.wg,
        e.ts
    );
    Ok(())
}
