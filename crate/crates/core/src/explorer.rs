//! Depth-first state-space exploration.
//!
//! Both properties reduce to predicates on terminal states: `OverTime(T)` is
//! violated by a terminal state with `time <= T`, `NonTermination` by any
//! terminal state. Model time never decreases along a run, so `OverTime(T)`
//! searches drop every successor whose time already exceeds `T`.
//!
//! The tuning parameters are the root branching: every feasible `(wg, ts)`
//! contributes one initial state, visited largest `wg` first, then largest
//! `ts`. The first counterexample at a given bound therefore carries the
//! preferred configuration among those that reach it.

use std::collections::{BTreeSet, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};
use crate::machine::{initial_state, MachineState, Transition};
use crate::model::{enumerate_configs, PlatformConfig, ProblemSpec, TuningParams};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    /// `G(fin -> time > T)`.
    OverTime(u64),
    /// `G(!fin)`.
    NonTermination,
}

impl Property {
    fn violated_by(&self, terminal: &MachineState) -> bool {
        match self {
            Property::OverTime(t) => terminal.time() <= *t,
            Property::NonTermination => true,
        }
    }

    fn prunes(&self, state: &MachineState) -> bool {
        match self {
            Property::OverTime(t) => state.time() > *t,
            Property::NonTermination => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    /// Full canonical states in the visited set.
    Exact,
    /// Two fingerprint bits per state in a `2^log2_bits` bit array.
    Bitstate { log2_bits: u32 },
}

impl SearchMode {
    pub fn bitstate() -> Self {
        SearchMode::Bitstate { log2_bits: 26 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreLimits {
    /// Transitions from the initial state beyond which nothing is expanded.
    pub max_depth: usize,
    pub max_states: Option<u64>,
    pub wall_budget: Option<Duration>,
    pub mode: SearchMode,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits {
            max_depth: 10_000_000,
            max_states: None,
            wall_budget: None,
            mode: SearchMode::Exact,
        }
    }
}

impl ExploreLimits {
    pub fn swarm(wall_budget: Duration) -> Self {
        ExploreLimits {
            wall_budget: Some(wall_budget),
            mode: SearchMode::bitstate(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if let SearchMode::Bitstate { log2_bits } = self.mode {
            if !(6..=36).contains(&log2_bits) {
                return Err(Error::Config(format!(
                    "bitstate size 2^{log2_bits} is out of range"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExploreStats {
    pub states_visited: u64,
    pub transitions: u64,
    pub max_depth_reached: usize,
    pub wall_seconds: f64,
    /// Some limit cut the search short.
    pub truncated: bool,
}

impl ExploreStats {
    pub fn absorb(&mut self, other: &ExploreStats) {
        self.states_visited += other.states_visited;
        self.transitions += other.transitions;
        self.max_depth_reached = self.max_depth_reached.max(other.max_depth_reached);
        self.wall_seconds += other.wall_seconds;
        self.truncated |= other.truncated;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Holds { exhaustive: bool },
    Violated(Trace),
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated(_))
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub stats: ExploreStats,
}

/// Every terminal time reachable for one configuration.
#[derive(Debug, Clone)]
pub struct Reachability {
    pub params: TuningParams,
    pub terminal_times: BTreeSet<u64>,
    pub terminal_states: u64,
    pub stats: ExploreStats,
}

enum Visited {
    Exact(HashSet<Vec<u8>>),
    Bitstate {
        bits: Vec<u64>,
        mask: u64,
        seeds: [u64; 2],
    },
}

impl Visited {
    fn new(mode: SearchMode, seed: u64) -> Self {
        match mode {
            SearchMode::Exact => Visited::Exact(HashSet::new()),
            SearchMode::Bitstate { log2_bits } => {
                let nbits = 1u64 << log2_bits;
                Visited::Bitstate {
                    bits: vec![0; (nbits / 64).max(1) as usize],
                    mask: nbits - 1,
                    seeds: [seed, seed.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15],
                }
            }
        }
    }

    /// True when the state was not seen before.
    fn insert(&mut self, state: &MachineState) -> bool {
        let bytes = state.canonical_bytes();
        match self {
            Visited::Exact(set) => set.insert(bytes),
            Visited::Bitstate { bits, mask, seeds } => {
                let mut fresh = false;
                for seed in *seeds {
                    let bit = xxh3_64_with_seed(&bytes, seed) & *mask;
                    let (word, off) = ((bit / 64) as usize, bit % 64);
                    if bits[word] & (1 << off) == 0 {
                        bits[word] |= 1 << off;
                        fresh = true;
                    }
                }
                fresh
            }
        }
    }
}

enum Flow {
    Continue,
    Stop,
}

struct Frame {
    state: MachineState,
    successors: Vec<Transition>,
    next: usize,
}

struct Engine<'a> {
    limits: ExploreLimits,
    visited: Visited,
    stats: ExploreStats,
    started: Instant,
    stop: Option<&'a AtomicBool>,
    shuffle: Option<ChaCha8Rng>,
}

impl<'a> Engine<'a> {
    fn new(limits: ExploreLimits, seed: Option<u64>, stop: Option<&'a AtomicBool>) -> Self {
        Engine {
            visited: Visited::new(limits.mode, seed.unwrap_or(0)),
            limits,
            stats: ExploreStats::default(),
            started: Instant::now(),
            stop,
            shuffle: seed.map(ChaCha8Rng::seed_from_u64),
        }
    }

    fn out_of_budget(&self) -> bool {
        if self.stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            return true;
        }
        if let Some(max) = self.limits.max_states {
            if self.stats.states_visited >= max {
                return true;
            }
        }
        if self.stats.transitions.is_multiple_of(256) {
            if let Some(budget) = self.limits.wall_budget {
                return self.started.elapsed() >= budget;
            }
        }
        false
    }

    fn successors(&mut self, state: &MachineState) -> Vec<Transition> {
        let mut en = state.enabled();
        if let Some(rng) = self.shuffle.as_mut() {
            en.shuffle(rng);
        }
        en
    }

    /// Explores everything reachable from `root`, calling `on_terminal` with
    /// each new terminal state and the path to it.
    fn dfs(
        &mut self,
        root: MachineState,
        prune: &dyn Fn(&MachineState) -> bool,
        on_terminal: &mut dyn FnMut(&MachineState, &[Transition]) -> Flow,
    ) -> Result<Flow> {
        if prune(&root) || !self.visited.insert(&root) {
            return Ok(Flow::Continue);
        }
        self.stats.states_visited += 1;
        let successors = self.successors(&root);
        let mut stack = vec![Frame {
            state: root,
            successors,
            next: 0,
        }];
        let mut path: Vec<Transition> = Vec::new();

        while let Some(frame) = stack.last_mut() {
            if frame.next == frame.successors.len() {
                stack.pop();
                if !stack.is_empty() {
                    path.pop();
                }
                continue;
            }
            if self.out_of_budget() {
                self.stats.truncated = true;
                return Ok(Flow::Stop);
            }
            let t = frame.successors[frame.next];
            frame.next += 1;
            let child = frame.state.apply_unchecked(t);
            self.stats.transitions += 1;
            if prune(&child) || !self.visited.insert(&child) {
                continue;
            }
            self.stats.states_visited += 1;
            path.push(t);
            let depth = path.len();
            self.stats.max_depth_reached = self.stats.max_depth_reached.max(depth);
            child.check_invariants().map_err(|e| {
                Error::Contract(format!(
                    "invariant violated after {depth} transitions ({}): {e}",
                    child.params()
                ))
            })?;

            let enabled = self.successors(&child);
            if enabled.is_empty() {
                if !child.fin() {
                    return Err(Error::Deadlock {
                        params: child.params(),
                        time: child.time(),
                        steps: depth,
                        summary: child.summary(),
                    });
                }
                if let Flow::Stop = on_terminal(&child, &path) {
                    return Ok(Flow::Stop);
                }
                path.pop();
                continue;
            }
            if depth >= self.limits.max_depth {
                self.stats.truncated = true;
                path.pop();
                continue;
            }
            stack.push(Frame {
                state: child,
                successors: enabled,
                next: 0,
            });
        }
        Ok(Flow::Continue)
    }

    fn finish(mut self) -> ExploreStats {
        self.stats.wall_seconds = self.started.elapsed().as_secs_f64();
        self.stats
    }
}

fn make_trace(terminal: &MachineState, path: &[Transition]) -> Trace {
    Trace {
        transitions: path.to_vec(),
        final_time: terminal.time(),
        params: terminal.params(),
        steps: path.len(),
    }
}

/// Initial states of every feasible configuration, largest `wg` first and
/// then largest `ts`.
pub fn root_states(platform: &PlatformConfig, problem: &ProblemSpec) -> Result<Vec<MachineState>> {
    let mut configs = enumerate_configs(problem.size)?;
    configs.sort_by(|a, b| b.cmp(a));
    let mut roots = Vec::with_capacity(configs.len());
    for params in configs {
        match initial_state(platform, problem, params) {
            Ok(s) => roots.push(s),
            Err(Error::Infeasible { .. }) => {
                log::debug!("skipping infeasible configuration {params}");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(roots)
}

/// Checks `G(fin -> time > T)` over every configuration and interleaving.
pub fn check_overtime(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    t: u64,
    limits: &ExploreLimits,
) -> Result<CheckOutcome> {
    limits.validate()?;
    let property = Property::OverTime(t);
    let mut engine = Engine::new(*limits, None, None);
    let mut found = None;
    for root in root_states(platform, problem)? {
        let flow = engine.dfs(root, &|s| property.prunes(s), &mut |s, path| {
            found = Some(make_trace(s, path));
            Flow::Stop
        })?;
        if let Flow::Stop = flow {
            break;
        }
    }
    let exact = limits.mode == SearchMode::Exact;
    let stats = engine.finish();
    let verdict = match found {
        Some(trace) => Verdict::Violated(trace),
        None => Verdict::Holds {
            exhaustive: exact && !stats.truncated,
        },
    };
    Ok(CheckOutcome { verdict, stats })
}

/// Collects a trace for every terminal state reached within `limits`. Each
/// one is a counterexample to `G(!fin)`.
pub fn check_nontermination(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    limits: &ExploreLimits,
) -> Result<(Vec<Trace>, ExploreStats)> {
    limits.validate()?;
    let mut engine = Engine::new(*limits, None, None);
    let mut traces = Vec::new();
    for root in root_states(platform, problem)? {
        let flow = engine.dfs(root, &|_| false, &mut |s, path| {
            traces.push(make_trace(s, path));
            Flow::Continue
        })?;
        if let Flow::Stop = flow {
            break;
        }
    }
    Ok((traces, engine.finish()))
}

/// One randomized bounded search. Successor order is permuted by `seed`,
/// visited states are remembered as fingerprint bits, and every violation
/// found before the budget runs out is returned.
pub fn swarm_worker(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    property: Property,
    seed: u64,
    limits: &ExploreLimits,
    stop: Option<&AtomicBool>,
) -> Result<(Vec<Trace>, ExploreStats)> {
    limits.validate()?;
    if limits.mode == SearchMode::Exact {
        return Err(Error::Contract("swarm workers use bitstate mode".into()));
    }
    let mut engine = Engine::new(*limits, Some(seed), stop);
    let mut roots = root_states(platform, problem)?;
    if let Some(rng) = engine.shuffle.as_mut() {
        roots.shuffle(rng);
    }
    let mut traces = Vec::new();
    for root in roots {
        let flow = engine.dfs(root, &|s| property.prunes(s), &mut |s, path| {
            if property.violated_by(s) {
                traces.push(make_trace(s, path));
            }
            Flow::Continue
        })?;
        if let Flow::Stop = flow {
            break;
        }
    }
    Ok((traces, engine.finish()))
}

/// Exhaustively explores one configuration and records every terminal time.
pub fn explore_config(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    params: TuningParams,
    limits: &ExploreLimits,
) -> Result<Reachability> {
    limits.validate()?;
    let root = initial_state(platform, problem, params)?;
    let mut engine = Engine::new(*limits, None, None);
    let mut terminal_times = BTreeSet::new();
    let mut terminal_states = 0;
    engine.dfs(root, &|_| false, &mut |s, _| {
        terminal_times.insert(s.time());
        terminal_states += 1;
        Flow::Continue
    })?;
    Ok(Reachability {
        params,
        terminal_times,
        terminal_states,
        stats: engine.finish(),
    })
}

/// Re-applies a trace and checks that it ends where it claims to.
pub fn replay(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    trace: &Trace,
) -> Result<MachineState> {
    let end = initial_state(platform, problem, trace.params)?.replay(&trace.transitions)?;
    let last = trace.transitions.len();
    if !end.is_terminal() {
        return Err(Error::CorruptTrace {
            index: last,
            reason: "trace does not end in a terminal state".into(),
        });
    }
    if end.time() != trace.final_time {
        return Err(Error::CorruptTrace {
            index: last,
            reason: format!(
                "replay ends at time {}, trace records {}",
                end.time(),
                trace.final_time
            ),
        });
    }
    if trace.steps != last {
        return Err(Error::CorruptTrace {
            index: last,
            reason: format!("trace records {} steps but holds {last}", trace.steps),
        });
    }
    Ok(end)
}
