//! Model-checking auto-tuner for OpenCL-style kernels.
//!
//! A kernel launch on a device/unit/processing-element hierarchy is modelled
//! as an explicit-state transition system with a lock-step clock. Tuning
//! parameters `(wg, ts)` are chosen nondeterministically at the root, and a
//! run's model time is its cost. The tuner searches for the smallest time by
//! asking the checker to refute "every run takes longer than T" and bisecting
//! on T, or by racing randomized bounded searches.
//!
//! ```
//! use mctune::{deterministic_run, PlatformConfig, Policy, ProblemSpec, TuningParams};
//!
//! let platform = PlatformConfig::default();
//! let problem = ProblemSpec::abstract_kernel(8)?;
//! let run = deterministic_run(&platform, &problem, TuningParams::new(4, 4), Policy::RoundRobin)?;
//! assert_eq!(run.time, 44);
//! # Ok::<(), mctune::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod explorer;
pub mod kernel;
pub mod machine;
pub mod model;
pub mod promela;
pub mod search;
pub mod trace;

pub use error::{Error, Result};
pub use explorer::{
    check_nontermination, check_overtime, explore_config, replay, swarm_worker, CheckOutcome,
    ExploreLimits, ExploreStats, Property, SearchMode, Verdict,
};
pub use kernel::{KernelProgram, MemoryModel};
pub use machine::{deterministic_run, initial_state, MachineState, Policy, RunOutcome, Transition};
pub use model::{
    derive_launch, enumerate_configs, KernelKind, LaunchPlan, PlatformConfig, ProblemSpec,
    TuningParams,
};
pub use promela::{export_promela, ExportOptions};
pub use search::{
    bisect_min_time, estimate_initial_time, exhaustive_sweep, extract_params, rank_trails,
    swarm_min_time, tune, SweepReport, SweepRow, TuneResult,
};
pub use trace::Trace;
