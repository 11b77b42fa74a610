//! Explicit-state transition system for the host/device/unit/pex hierarchy.
//!
//! Processes and their channels:
//!
//! ```text
//! main ── run ──> host, clock
//! host ── go/stop ──> device ── go(nwg)/stop ──> unit ── go(nwg,iter)/stop ──> pex
//!                                                 unit ── stop ──> barrier <── done ── pex
//! ```
//!
//! Every channel is a zero-capacity rendezvous, so a send and its receive are
//! one transition. Atomic launch loops are single transitions as well. Model
//! time advances only through the clock: a busy processing element reports
//! once per tick (`nrp_work += 1`), and the clock ticks when every working
//! element has reported (`nrp_work == all_nwe`). The tick itself decrements
//! the remaining work of every reporter.
//!
//! `all_nwe` is the sum of per-unit reservations. A unit reserves `nwe`
//! elements from launch until the device finds no further workgroup for it,
//! drops to one element while local id 0 runs the reduction epilogue, and
//! releases everything on stop. Reserved-but-idle elements never report, so
//! the clock waits for a reactivated element before the next tick.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{global_item_id, CostInstr, EffectOp, KernelProgram, MemoryModel};
use crate::model::{derive_launch, LaunchPlan, PlatformConfig, ProblemSpec, TuningParams};
use crate::trace::Trace;

pub type Pid = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Main,
    Host,
    Clock,
    Device,
    Unit,
    Barrier,
    Pex,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Main => "main",
            Role::Host => "host",
            Role::Clock => "clock",
            Role::Device => "device",
            Role::Unit => "unit",
            Role::Barrier => "barrier",
            Role::Pex => "pex",
        })
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "main" => Role::Main,
            "host" => Role::Host,
            "clock" => Role::Clock,
            "device" => Role::Device,
            "unit" => Role::Unit,
            "barrier" => Role::Barrier,
            "pex" => Role::Pex,
            other => return Err(format!("unknown role {other:?}")),
        })
    }
}

/// What a transition does. The acting process is identified separately by
/// its pid; `Collect(i)` names the child (device, unit or local id) whose
/// `done` is received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Launch,
    Spawn,
    Activate,
    Collect(u32),
    Finish,
    Stop,
    Reduced,
    Report,
    Effect,
    Arrive,
    Release,
    Tick,
    Halt,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Launch => f.write_str("launch"),
            Action::Spawn => f.write_str("spawn"),
            Action::Activate => f.write_str("activate"),
            Action::Collect(i) => write!(f, "collect {i}"),
            Action::Finish => f.write_str("finish"),
            Action::Stop => f.write_str("stop"),
            Action::Reduced => f.write_str("collect-reduce"),
            Action::Report => f.write_str("report"),
            Action::Effect => f.write_str("effect"),
            Action::Arrive => f.write_str("barrier-arrive"),
            Action::Release => f.write_str("barrier-release"),
            Action::Tick => f.write_str("tick"),
            Action::Halt => f.write_str("halt"),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(rest) = s.strip_prefix("collect ") {
            return rest
                .trim()
                .parse()
                .map(Action::Collect)
                .map_err(|e| format!("bad collect index {rest:?}: {e}"));
        }
        Ok(match s {
            "launch" => Action::Launch,
            "spawn" => Action::Spawn,
            "activate" => Action::Activate,
            "finish" => Action::Finish,
            "stop" => Action::Stop,
            "collect-reduce" => Action::Reduced,
            "report" => Action::Report,
            "effect" => Action::Effect,
            "barrier-arrive" => Action::Arrive,
            "barrier-release" => Action::Release,
            "tick" => Action::Tick,
            "halt" => Action::Halt,
            other => return Err(format!("unknown action {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionKind {
    ClockTick,
    Handshake,
    LocalStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub pid: Pid,
    pub action: Action,
}

impl Transition {
    pub fn new(pid: Pid, action: Action) -> Self {
        Transition { pid, action }
    }

    pub fn kind(&self) -> TransitionKind {
        match self.action {
            Action::Tick => TransitionKind::ClockTick,
            Action::Launch
            | Action::Activate
            | Action::Collect(_)
            | Action::Stop
            | Action::Reduced
            | Action::Arrive
            | Action::Release => TransitionKind::Handshake,
            Action::Spawn | Action::Finish | Action::Report | Action::Effect | Action::Halt => {
                TransitionKind::LocalStep
            }
        }
    }

    pub fn label(&self) -> String {
        self.action.to_string()
    }
}

// ---------------------------------------------------------------------------
// process states

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MainPc {
    Start,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HostPc {
    Dormant,
    Spawn,
    Activate,
    Collect,
    Join,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HostState {
    pub pc: HostPc,
    pub stopped: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClockPc {
    Dormant,
    Running,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DevicePc {
    Dormant,
    Spawn,
    WaitCmd,
    Activate,
    Collect,
    SendDone,
    Stopping,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceState {
    pub pc: DevicePc,
    /// Units activated this round that have not reported back.
    pub pending: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnitPc {
    Dormant,
    Spawn,
    WaitCmd,
    Launch,
    Collect,
    Reduce,
    SendDone,
    Stopping,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitState {
    pub pc: UnitPc,
    pub nwg: u32,
    /// Elements that served their last work item of the current group.
    pub finished: u32,
    /// This unit's share of `all_nwe`.
    pub reserved: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BarrierPc {
    Dormant,
    Waiting,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BarrierState {
    pub pc: BarrierPc,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PexPc {
    Dormant,
    Idle,
    Running,
    AtBarrier,
    EndActivation,
    Reducing,
    EndEpilogue,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PexState {
    pub pc: PexPc,
    pub nwg: u32,
    pub iter: u32,
    pub cursor: u32,
    pub remaining: u32,
    pub reported: bool,
    pub start_time: u64,
    pub cur_time: u64,
    /// Barrier arrivals and releases during the current group service.
    pub arrivals: u32,
    pub passes: u32,
}

impl PexState {
    fn dormant() -> Self {
        PexState {
            pc: PexPc::Dormant,
            nwg: 0,
            iter: 0,
            cursor: 0,
            remaining: 0,
            reported: false,
            start_time: 0,
            cur_time: 0,
            arrivals: 0,
            passes: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessState {
    Main(MainPc),
    Host(HostState),
    Clock(ClockPc),
    Device(DeviceState),
    Unit(UnitState),
    Barrier(BarrierState),
    Pex(PexState),
}

impl ProcessState {
    pub fn role(&self) -> Role {
        match self {
            ProcessState::Main(_) => Role::Main,
            ProcessState::Host(_) => Role::Host,
            ProcessState::Clock(_) => Role::Clock,
            ProcessState::Device(_) => Role::Device,
            ProcessState::Unit(_) => Role::Unit,
            ProcessState::Barrier(_) => Role::Barrier,
            ProcessState::Pex(_) => Role::Pex,
        }
    }

    pub fn is_exited(&self) -> bool {
        match self {
            ProcessState::Main(pc) => *pc == MainPc::Exited,
            ProcessState::Host(h) => h.pc == HostPc::Exited,
            ProcessState::Clock(pc) => *pc == ClockPc::Exited,
            ProcessState::Device(d) => d.pc == DevicePc::Exited,
            ProcessState::Unit(u) => u.pc == UnitPc::Exited,
            ProcessState::Barrier(b) => b.pc == BarrierPc::Exited,
            ProcessState::Pex(p) => p.pc == PexPc::Exited,
        }
    }

    fn pc_name(&self) -> String {
        match self {
            ProcessState::Main(pc) => format!("{pc:?}"),
            ProcessState::Host(h) => format!("{:?}", h.pc),
            ProcessState::Clock(pc) => format!("{pc:?}"),
            ProcessState::Device(d) => format!("{:?}", d.pc),
            ProcessState::Unit(u) => format!("{:?}", u.pc),
            ProcessState::Barrier(b) => format!("{:?}({})", b.pc, b.count),
            ProcessState::Pex(p) => format!("{:?}@{}", p.pc, p.cursor),
        }
    }
}

// ---------------------------------------------------------------------------
// static model

#[derive(Debug, Clone)]
pub struct DeviceLayout {
    pub pid: Pid,
    pub units: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct UnitLayout {
    pub pid: Pid,
    pub device: usize,
    pub barrier: Pid,
    pub pexes: Vec<Pid>,
    /// Global unit index, used for local-memory slot numbering.
    pub mu: u32,
}

#[derive(Debug, Clone)]
pub struct PexLayout {
    pub unit: usize,
    pub me: u32,
}

pub const MAIN_PID: Pid = 0;
pub const HOST_PID: Pid = 1;
pub const CLOCK_PID: Pid = 2;

/// Everything about one configuration that never changes while it runs.
#[derive(Debug)]
pub struct Model {
    pub platform: PlatformConfig,
    pub problem: ProblemSpec,
    pub params: TuningParams,
    pub plan: LaunchPlan,
    pub program: KernelProgram,
    pub rounds: u32,
    roles: Vec<Role>,
    pub devices: Vec<DeviceLayout>,
    pub units: Vec<UnitLayout>,
    pex_layout: Vec<Option<PexLayout>>,
    unit_of_pid: Vec<Option<usize>>,
    device_of_pid: Vec<Option<usize>>,
}

impl Model {
    pub fn new(
        platform: &PlatformConfig,
        problem: &ProblemSpec,
        params: TuningParams,
    ) -> Result<Arc<Model>> {
        problem.validate()?;
        let plan = derive_launch(platform, problem.size, params)?;
        let program = KernelProgram::build(platform, problem, params)?;
        program.validate()?;

        let mut roles = vec![Role::Main, Role::Host, Role::Clock];
        let mut devices = Vec::new();
        let mut units = Vec::new();
        for d in 0..plan.nwd as usize {
            let dev_pid = roles.len();
            roles.push(Role::Device);
            let mut unit_ids = Vec::new();
            for _ in 0..plan.nwu {
                let pid = roles.len();
                roles.push(Role::Unit);
                let barrier = roles.len();
                roles.push(Role::Barrier);
                let pexes: Vec<Pid> = (0..plan.nwe)
                    .map(|_| {
                        roles.push(Role::Pex);
                        roles.len() - 1
                    })
                    .collect();
                unit_ids.push(units.len());
                units.push(UnitLayout {
                    pid,
                    device: d,
                    barrier,
                    pexes,
                    mu: units.len() as u32,
                });
            }
            devices.push(DeviceLayout {
                pid: dev_pid,
                units: unit_ids,
            });
        }

        let n = roles.len();
        let mut pex_layout = vec![None; n];
        let mut unit_of_pid = vec![None; n];
        let mut device_of_pid = vec![None; n];
        for (ui, unit) in units.iter().enumerate() {
            unit_of_pid[unit.pid] = Some(ui);
            unit_of_pid[unit.barrier] = Some(ui);
            for (me, &pid) in unit.pexes.iter().enumerate() {
                unit_of_pid[pid] = Some(ui);
                pex_layout[pid] = Some(PexLayout {
                    unit: ui,
                    me: me as u32,
                });
            }
        }
        for (di, dev) in devices.iter().enumerate() {
            device_of_pid[dev.pid] = Some(di);
        }

        Ok(Arc::new(Model {
            platform: *platform,
            problem: problem.clone(),
            params,
            plan,
            rounds: plan.rounds(params),
            program,
            roles,
            devices,
            units,
            pex_layout,
            unit_of_pid,
            device_of_pid,
        }))
    }

    pub fn process_count(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, pid: Pid) -> Option<Role> {
        self.roles.get(pid).copied()
    }

    pub fn pex(&self, pid: Pid) -> Option<&PexLayout> {
        self.pex_layout.get(pid).and_then(Option::as_ref)
    }

    /// Total busy ticks a complete run must consume.
    pub fn expected_work(&self) -> u64 {
        let items = u64::from(self.plan.wgs) * u64::from(self.params.wg);
        items * self.program.activation_busy_ticks()
            + u64::from(self.plan.wgs) * self.program.epilogue_busy_ticks()
    }
}

// ---------------------------------------------------------------------------
// dynamic state

#[derive(Clone)]
pub struct MachineState {
    model: Arc<Model>,
    procs: Vec<ProcessState>,
    time: u64,
    nrp_work: u32,
    all_nwe: u32,
    fin: bool,
    /// Next workgroup number to hand out.
    next_group: u32,
    /// Busy ticks consumed so far, summed over elements.
    consumed: u64,
    memory: Option<MemoryModel>,
}

#[derive(Serialize)]
struct Canonical<'a> {
    params: TuningParams,
    time: u64,
    nrp_work: u32,
    all_nwe: u32,
    fin: bool,
    next_group: u32,
    consumed: u64,
    procs: &'a [ProcessState],
    memory: &'a Option<MemoryModel>,
}

impl PartialEq for MachineState {
    fn eq(&self, other: &Self) -> bool {
        self.model.params == other.model.params
            && self.time == other.time
            && self.nrp_work == other.nrp_work
            && self.all_nwe == other.all_nwe
            && self.fin == other.fin
            && self.next_group == other.next_group
            && self.consumed == other.consumed
            && self.procs == other.procs
            && self.memory == other.memory
    }
}

impl Eq for MachineState {}

impl fmt::Debug for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MachineState")
            .field("params", &self.model.params)
            .field("time", &self.time)
            .field("nrp_work", &self.nrp_work)
            .field("all_nwe", &self.all_nwe)
            .field("fin", &self.fin)
            .field("procs", &self.summary())
            .finish()
    }
}

/// Scheduler used by [`deterministic_run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Cycle through pids, taking the first enabled transition of the next
    /// process after the one that moved last.
    RoundRobin,
    SeededRandom(u64),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub time: u64,
    pub result: Option<i64>,
    pub steps: usize,
    pub trace: Trace,
}

pub fn initial_state(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    params: TuningParams,
) -> Result<MachineState> {
    Ok(MachineState::new(Model::new(platform, problem, params)?))
}

impl MachineState {
    pub fn new(model: Arc<Model>) -> Self {
        let procs = model
            .roles
            .iter()
            .map(|role| match role {
                Role::Main => ProcessState::Main(MainPc::Start),
                Role::Host => ProcessState::Host(HostState {
                    pc: HostPc::Dormant,
                    stopped: 0,
                }),
                Role::Clock => ProcessState::Clock(ClockPc::Dormant),
                Role::Device => ProcessState::Device(DeviceState {
                    pc: DevicePc::Dormant,
                    pending: 0,
                }),
                Role::Unit => ProcessState::Unit(UnitState {
                    pc: UnitPc::Dormant,
                    nwg: 0,
                    finished: 0,
                    reserved: model.plan.nwe,
                }),
                Role::Barrier => ProcessState::Barrier(BarrierState {
                    pc: BarrierPc::Dormant,
                    count: 0,
                }),
                Role::Pex => ProcessState::Pex(PexState::dormant()),
            })
            .collect();
        let memory = model
            .problem
            .input
            .as_deref()
            .map(|input| MemoryModel::new(input, model.units.len() as u32, model.platform.np));
        MachineState {
            all_nwe: model.plan.all_nwe,
            model,
            procs,
            time: 0,
            nrp_work: 0,
            fin: false,
            next_group: 0,
            consumed: 0,
            memory,
        }
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn params(&self) -> TuningParams {
        self.model.params
    }

    pub fn processes(&self) -> &[ProcessState] {
        &self.procs
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn nrp_work(&self) -> u32 {
        self.nrp_work
    }

    pub fn all_nwe(&self) -> u32 {
        self.all_nwe
    }

    pub fn fin(&self) -> bool {
        self.fin
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn memory(&self) -> Option<&MemoryModel> {
        self.memory.as_ref()
    }

    /// `glob[0]` for the minimum kernel.
    pub fn result(&self) -> Option<i64> {
        self.memory.as_ref().map(MemoryModel::result)
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "time={} nrp_work={} all_nwe={} fin={} next_group={}",
            self.time, self.nrp_work, self.all_nwe, self.fin, self.next_group
        );
        for (pid, p) in self.procs.iter().enumerate() {
            out.push_str(&format!(" {pid}:{}={}", p.role(), p.pc_name()));
        }
        out
    }

    /// Canonical byte encoding of every dynamic field plus the chosen
    /// parameters. Equal states encode equal.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let snapshot = Canonical {
            params: self.model.params,
            time: self.time,
            nrp_work: self.nrp_work,
            all_nwe: self.all_nwe,
            fin: self.fin,
            next_group: self.next_group,
            consumed: self.consumed,
            procs: &self.procs,
            memory: &self.memory,
        };
        bincode::serialize(&snapshot).expect("in-memory serialization cannot fail")
    }

    pub fn fingerprint(&self) -> u64 {
        xxhash_rust::xxh3::xxh3_64(&self.canonical_bytes())
    }

    pub fn is_terminal(&self) -> bool {
        self.fin && self.enabled().is_empty()
    }

    pub fn final_time(&self) -> Result<u64> {
        if self.is_terminal() {
            Ok(self.time)
        } else {
            Err(Error::Contract(
                "final_time is only defined on terminal states".into(),
            ))
        }
    }

    // -- small accessors used by the rules --------------------------------

    fn device(&self, pid: Pid) -> DeviceState {
        match self.procs[pid] {
            ProcessState::Device(d) => d,
            _ => unreachable!("pid {pid} is not a device"),
        }
    }

    fn unit(&self, pid: Pid) -> UnitState {
        match self.procs[pid] {
            ProcessState::Unit(u) => u,
            _ => unreachable!("pid {pid} is not a unit"),
        }
    }

    fn barrier(&self, pid: Pid) -> BarrierState {
        match self.procs[pid] {
            ProcessState::Barrier(b) => b,
            _ => unreachable!("pid {pid} is not a barrier"),
        }
    }

    fn pex(&self, pid: Pid) -> PexState {
        match self.procs[pid] {
            ProcessState::Pex(p) => p,
            _ => unreachable!("pid {pid} is not a pex"),
        }
    }

    fn set(&mut self, pid: Pid, state: ProcessState) {
        self.procs[pid] = state;
    }

    fn clock_can_tick(&self) -> bool {
        matches!(self.procs[CLOCK_PID], ProcessState::Clock(ClockPc::Running))
            && !self.fin
            && self.all_nwe != 0
            && self.nrp_work == self.all_nwe
    }

    fn pex_instr(&self, pid: Pid, p: &PexState) -> Option<CostInstr> {
        let _ = pid;
        let seq = match p.pc {
            PexPc::Running => &self.model.program.per_activation,
            PexPc::Reducing => &self.model.program.epilogue,
            _ => return None,
        };
        seq.get(p.cursor as usize).copied()
    }

    /// Every transition permitted in this state, in ascending pid order.
    pub fn enabled(&self) -> Vec<Transition> {
        let mut out = Vec::new();
        let m = &*self.model;
        for (pid, proc_) in self.procs.iter().enumerate() {
            let t = |a| Transition::new(pid, a);
            match proc_ {
                ProcessState::Main(MainPc::Start) => out.push(t(Action::Launch)),
                ProcessState::Main(MainPc::Exited) => {}
                ProcessState::Host(h) => match h.pc {
                    HostPc::Spawn => out.push(t(Action::Spawn)),
                    HostPc::Activate => {
                        if m.devices
                            .iter()
                            .all(|d| self.device(d.pid).pc == DevicePc::WaitCmd)
                        {
                            out.push(t(Action::Activate));
                        }
                    }
                    HostPc::Collect => {
                        for (di, d) in m.devices.iter().enumerate() {
                            if self.device(d.pid).pc == DevicePc::SendDone {
                                out.push(t(Action::Collect(di as u32)));
                            }
                        }
                    }
                    HostPc::Join => {
                        if self.procs[CLOCK_PID + 1..]
                            .iter()
                            .all(ProcessState::is_exited)
                        {
                            out.push(t(Action::Finish));
                        }
                    }
                    HostPc::Dormant | HostPc::Exited => {}
                },
                ProcessState::Clock(pc) => {
                    if *pc == ClockPc::Running {
                        if self.fin {
                            out.push(t(Action::Halt));
                        } else if self.clock_can_tick() {
                            out.push(t(Action::Tick));
                        }
                    }
                }
                ProcessState::Device(d) => {
                    let layout = &m.devices[m.device_of_pid[pid].expect("device layout")];
                    let units_at = |pc: UnitPc| {
                        layout
                            .units
                            .iter()
                            .all(|&u| self.unit(m.units[u].pid).pc == pc)
                    };
                    match d.pc {
                        DevicePc::Spawn => out.push(t(Action::Spawn)),
                        DevicePc::Activate if units_at(UnitPc::WaitCmd) => {
                            out.push(t(Action::Activate))
                        }
                        DevicePc::Collect => {
                            for (ui, &u) in layout.units.iter().enumerate() {
                                if self.unit(m.units[u].pid).pc == UnitPc::SendDone {
                                    out.push(t(Action::Collect(ui as u32)));
                                }
                            }
                        }
                        DevicePc::Stopping if units_at(UnitPc::WaitCmd) => {
                            out.push(t(Action::Stop))
                        }
                        _ => {}
                    }
                }
                ProcessState::Unit(u) => {
                    let layout = &m.units[m.unit_of_pid[pid].expect("unit layout")];
                    let pexes_idle = || layout.pexes.iter().all(|&p| self.pex(p).pc == PexPc::Idle);
                    match u.pc {
                        UnitPc::Spawn => out.push(t(Action::Spawn)),
                        UnitPc::Launch if pexes_idle() => out.push(t(Action::Activate)),
                        UnitPc::Collect => {
                            for (me, &p) in layout.pexes.iter().enumerate() {
                                if self.pex(p).pc == PexPc::EndActivation {
                                    out.push(t(Action::Collect(me as u32)));
                                }
                            }
                        }
                        UnitPc::Reduce => {
                            if self.pex(layout.pexes[0]).pc == PexPc::EndEpilogue {
                                out.push(t(Action::Reduced));
                            }
                        }
                        UnitPc::Stopping
                            if pexes_idle()
                                && self.barrier(layout.barrier).pc == BarrierPc::Waiting =>
                        {
                            out.push(t(Action::Stop));
                        }
                        _ => {}
                    }
                }
                ProcessState::Barrier(b) => {
                    if b.pc == BarrierPc::Waiting && b.count == m.plan.nwe {
                        out.push(t(Action::Release));
                    }
                }
                ProcessState::Pex(p) => match self.pex_instr(pid, p) {
                    Some(CostInstr::Busy { .. }) if !p.reported && p.remaining > 0 => {
                        out.push(t(Action::Report))
                    }
                    Some(CostInstr::Effect(_)) => out.push(t(Action::Effect)),
                    Some(CostInstr::LocalBarrier) => {
                        let unit = &m.units[m.unit_of_pid[pid].expect("pex unit")];
                        if self.barrier(unit.barrier).pc == BarrierPc::Waiting {
                            out.push(t(Action::Arrive));
                        }
                    }
                    _ => {}
                },
            }
        }
        out
    }

    /// Successor of `self` under `t`. The receiver is left untouched.
    pub fn apply(&self, t: Transition) -> Result<MachineState> {
        if !self.enabled().contains(&t) {
            return Err(Error::Contract(format!(
                "transition pid {} {} is not enabled",
                t.pid, t.action
            )));
        }
        Ok(self.apply_unchecked(t))
    }

    /// [`apply`](Self::apply) without re-deriving the enabled set; `t` must
    /// come from [`enabled`](Self::enabled) on this very state.
    pub fn apply_unchecked(&self, t: Transition) -> MachineState {
        let mut next = self.clone();
        next.fire(t);
        next
    }

    fn fire(&mut self, t: Transition) {
        let model = Arc::clone(&self.model);
        let m = &*model;
        let pid = t.pid;
        match (self.procs[pid], t.action) {
            (ProcessState::Main(_), Action::Launch) => {
                self.set(MAIN_PID, ProcessState::Main(MainPc::Exited));
                self.set(
                    HOST_PID,
                    ProcessState::Host(HostState {
                        pc: HostPc::Spawn,
                        stopped: 0,
                    }),
                );
                self.set(CLOCK_PID, ProcessState::Clock(ClockPc::Running));
            }

            (ProcessState::Host(mut h), action) => {
                match action {
                    Action::Spawn => {
                        for d in &m.devices {
                            self.set_device_pc(d.pid, DevicePc::Spawn);
                        }
                        h.pc = HostPc::Activate;
                    }
                    Action::Activate => {
                        for d in &m.devices {
                            self.set_device_pc(d.pid, DevicePc::Activate);
                        }
                        h.pc = HostPc::Collect;
                    }
                    Action::Collect(di) => {
                        let dev = m.devices[di as usize].pid;
                        if self.next_group < m.plan.wgs {
                            self.set_device_pc(dev, DevicePc::Activate);
                        } else {
                            self.set_device_pc(dev, DevicePc::Stopping);
                            h.stopped += 1;
                            if h.stopped == m.plan.nwd {
                                h.pc = HostPc::Join;
                            }
                        }
                    }
                    Action::Finish => {
                        self.fin = true;
                        h.pc = HostPc::Exited;
                    }
                    other => unreachable!("host cannot {other}"),
                }
                self.set(HOST_PID, ProcessState::Host(h));
            }

            (ProcessState::Clock(_), Action::Halt) => {
                self.set(CLOCK_PID, ProcessState::Clock(ClockPc::Exited));
            }
            (ProcessState::Clock(_), Action::Tick) => self.tick(),

            (ProcessState::Device(mut d), action) => {
                let layout = &m.devices[m.device_of_pid[pid].expect("device layout")];
                match action {
                    Action::Spawn => {
                        for &u in &layout.units {
                            self.set_unit_pc(m.units[u].pid, UnitPc::Spawn);
                        }
                        d.pc = DevicePc::WaitCmd;
                    }
                    Action::Activate => {
                        d.pending = 0;
                        for &ui in &layout.units {
                            let upid = m.units[ui].pid;
                            let mut u = self.unit(upid);
                            if self.next_group < m.plan.wgs {
                                u.pc = UnitPc::Launch;
                                u.nwg = self.next_group;
                                u.finished = 0;
                                if u.reserved == 0 {
                                    u.reserved = m.plan.nwe;
                                    self.all_nwe += m.plan.nwe;
                                }
                                self.next_group += 1;
                                d.pending += 1;
                            } else {
                                self.all_nwe -= u.reserved;
                                u.reserved = 0;
                            }
                            self.set(upid, ProcessState::Unit(u));
                        }
                        d.pc = if d.pending == 0 {
                            DevicePc::SendDone
                        } else {
                            DevicePc::Collect
                        };
                    }
                    Action::Collect(ui) => {
                        let upid = m.units[layout.units[ui as usize]].pid;
                        self.set_unit_pc(upid, UnitPc::WaitCmd);
                        d.pending -= 1;
                        if d.pending == 0 {
                            d.pc = DevicePc::SendDone;
                        }
                    }
                    Action::Stop => {
                        for &ui in &layout.units {
                            let upid = m.units[ui].pid;
                            let mut u = self.unit(upid);
                            self.all_nwe -= u.reserved;
                            u.reserved = 0;
                            u.pc = UnitPc::Stopping;
                            self.set(upid, ProcessState::Unit(u));
                        }
                        d.pc = DevicePc::Exited;
                    }
                    other => unreachable!("device cannot {other}"),
                }
                self.set(pid, ProcessState::Device(d));
            }

            (ProcessState::Unit(mut u), action) => {
                let layout = &m.units[m.unit_of_pid[pid].expect("unit layout")];
                match action {
                    Action::Spawn => {
                        self.set(
                            layout.barrier,
                            ProcessState::Barrier(BarrierState {
                                pc: BarrierPc::Waiting,
                                count: 0,
                            }),
                        );
                        for &p in &layout.pexes {
                            let mut ps = self.pex(p);
                            ps.pc = PexPc::Idle;
                            self.set(p, ProcessState::Pex(ps));
                        }
                        u.pc = UnitPc::WaitCmd;
                    }
                    Action::Activate => {
                        for &p in &layout.pexes {
                            let mut ps = self.pex(p);
                            ps.nwg = u.nwg;
                            ps.iter = 0;
                            ps.arrivals = 0;
                            ps.passes = 0;
                            self.start_sequence(p, ps, PexPc::Running);
                        }
                        u.pc = UnitPc::Collect;
                    }
                    Action::Collect(me) => {
                        let p = layout.pexes[me as usize];
                        let mut ps = self.pex(p);
                        if ps.iter + 1 < m.rounds {
                            ps.iter += 1;
                            self.start_sequence(p, ps, PexPc::Running);
                        } else {
                            ps.pc = PexPc::Idle;
                            self.set(p, ProcessState::Pex(ps));
                            u.finished += 1;
                            if u.finished == m.plan.nwe {
                                if m.program.has_epilogue() {
                                    self.all_nwe -= u.reserved - 1;
                                    u.reserved = 1;
                                    let lead = layout.pexes[0];
                                    let ps0 = self.pex(lead);
                                    self.start_sequence(lead, ps0, PexPc::Reducing);
                                    u.pc = UnitPc::Reduce;
                                } else {
                                    u.pc = UnitPc::SendDone;
                                }
                            }
                        }
                    }
                    Action::Reduced => {
                        let lead = layout.pexes[0];
                        let mut ps = self.pex(lead);
                        ps.pc = PexPc::Idle;
                        self.set(lead, ProcessState::Pex(ps));
                        self.all_nwe += m.plan.nwe - u.reserved;
                        u.reserved = m.plan.nwe;
                        u.pc = UnitPc::SendDone;
                    }
                    Action::Stop => {
                        self.set(
                            layout.barrier,
                            ProcessState::Barrier(BarrierState {
                                pc: BarrierPc::Exited,
                                count: 0,
                            }),
                        );
                        for &p in &layout.pexes {
                            let mut ps = self.pex(p);
                            ps.pc = PexPc::Exited;
                            self.set(p, ProcessState::Pex(ps));
                        }
                        u.pc = UnitPc::Exited;
                    }
                    other => unreachable!("unit cannot {other}"),
                }
                self.set(pid, ProcessState::Unit(u));
            }

            (ProcessState::Barrier(mut b), Action::Release) => {
                let layout = &m.units[m.unit_of_pid[pid].expect("barrier unit")];
                for &p in &layout.pexes {
                    let mut ps = self.pex(p);
                    if ps.pc == PexPc::AtBarrier {
                        ps.passes += 1;
                        ps.pc = PexPc::Running;
                        ps.cursor += 1;
                        self.settle(p, ps);
                    }
                }
                b.count = 0;
                self.set(pid, ProcessState::Barrier(b));
            }

            (ProcessState::Pex(mut ps), action) => match action {
                Action::Report => {
                    ps.reported = true;
                    ps.cur_time = self.time;
                    self.nrp_work += 1;
                    self.set(pid, ProcessState::Pex(ps));
                }
                Action::Effect => {
                    let op = match self.pex_instr(pid, &ps) {
                        Some(CostInstr::Effect(op)) => op,
                        other => unreachable!("effect step on {other:?}"),
                    };
                    self.run_effect(pid, &ps, op);
                    ps.cursor += 1;
                    self.settle(pid, ps);
                }
                Action::Arrive => {
                    let unit = &m.units[m.unit_of_pid[pid].expect("pex unit")];
                    let mut b = self.barrier(unit.barrier);
                    b.count += 1;
                    self.set(unit.barrier, ProcessState::Barrier(b));
                    ps.arrivals += 1;
                    ps.pc = PexPc::AtBarrier;
                    self.set(pid, ProcessState::Pex(ps));
                }
                other => unreachable!("pex cannot {other}"),
            },

            (state, action) => unreachable!("{action} on {state:?}"),
        }
    }

    fn tick(&mut self) {
        self.time += 1;
        self.nrp_work = 0;
        for pid in 0..self.procs.len() {
            if let ProcessState::Pex(mut ps) = self.procs[pid] {
                if ps.reported {
                    ps.reported = false;
                    ps.remaining -= 1;
                    self.consumed += 1;
                    if ps.remaining == 0 {
                        ps.cursor += 1;
                        self.settle(pid, ps);
                    } else {
                        self.set(pid, ProcessState::Pex(ps));
                    }
                }
            }
        }
    }

    fn start_sequence(&mut self, pid: Pid, mut ps: PexState, pc: PexPc) {
        ps.pc = pc;
        ps.cursor = 0;
        self.settle(pid, ps);
    }

    /// Loads the instruction under the cursor: a busy segment starts its
    /// countdown, an `ActivationEnd` turns into the matching done state.
    fn settle(&mut self, pid: Pid, mut ps: PexState) {
        match self.pex_instr(pid, &ps) {
            Some(CostInstr::Busy { ticks, .. }) => {
                ps.remaining = ticks;
                ps.reported = false;
                ps.start_time = self.time;
            }
            Some(CostInstr::ActivationEnd) => {
                ps.pc = if ps.pc == PexPc::Reducing {
                    PexPc::EndEpilogue
                } else {
                    PexPc::EndActivation
                };
            }
            _ => {}
        }
        self.set(pid, ProcessState::Pex(ps));
    }

    fn run_effect(&mut self, pid: Pid, ps: &PexState, op: EffectOp) {
        let m = &*self.model;
        let layout = m.pex(pid).expect("pex layout");
        let np = m.platform.np;
        let myloc = (layout.me + m.units[layout.unit].mu * np) as usize;
        let params = m.params;
        let mem = self
            .memory
            .as_mut()
            .expect("effects only occur in kernels with memory");
        match op {
            EffectOp::LoadMin { offset } => {
                let gid = global_item_id(params, np, ps.nwg, layout.me, ps.iter);
                let idx = (offset + gid * params.ts) as usize;
                mem.loc[myloc] = mem.loc[myloc].min(mem.glob[idx]);
            }
            EffectOp::ReduceLocal { offset } => {
                let other = mem.loc[myloc + offset as usize];
                mem.loc[myloc] = mem.loc[myloc].min(other);
            }
            EffectOp::WriteGlobal => {
                mem.glob[0] = mem.glob[0].min(mem.loc[myloc]);
            }
        }
    }

    fn set_device_pc(&mut self, pid: Pid, pc: DevicePc) {
        let mut d = self.device(pid);
        d.pc = pc;
        self.set(pid, ProcessState::Device(d));
    }

    fn set_unit_pc(&mut self, pid: Pid, pc: UnitPc) {
        let mut u = self.unit(pid);
        u.pc = pc;
        self.set(pid, ProcessState::Unit(u));
    }

    /// State invariants checked during exhaustive exploration.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let m = &*self.model;
        if self.nrp_work > self.all_nwe {
            return Err(format!(
                "nrp_work {} exceeds all_nwe {}",
                self.nrp_work, self.all_nwe
            ));
        }
        let reported = self
            .procs
            .iter()
            .filter(|p| matches!(p, ProcessState::Pex(ps) if ps.reported))
            .count() as u32;
        if reported != self.nrp_work {
            return Err(format!(
                "{reported} elements reported but nrp_work is {}",
                self.nrp_work
            ));
        }
        let reserved: u32 = m.units.iter().map(|u| self.unit(u.pid).reserved).sum();
        if reserved != self.all_nwe {
            return Err(format!(
                "unit reservations sum to {reserved} but all_nwe is {}",
                self.all_nwe
            ));
        }
        let tick_enabled = self.enabled().iter().any(|t| t.action == Action::Tick);
        if tick_enabled && self.nrp_work < self.all_nwe {
            return Err("clock tick enabled before every element reported".into());
        }
        for unit in &m.units {
            let min_arrivals = unit
                .pexes
                .iter()
                .map(|&p| self.pex(p).arrivals)
                .min()
                .unwrap_or(0);
            for &p in &unit.pexes {
                let ps = self.pex(p);
                if ps.passes > min_arrivals {
                    return Err(format!(
                        "pex {p} passed barrier instance {} before all of unit {} arrived",
                        ps.passes, unit.mu
                    ));
                }
                if ps.pc == PexPc::Running || ps.pc == PexPc::Reducing {
                    if let Some(CostInstr::Busy { .. }) = self.pex_instr(p, &ps) {
                        if ps.remaining == 0 {
                            return Err(format!("pex {p} is busy with no remaining ticks"));
                        }
                    }
                }
            }
        }
        if self.fin
            && !self.procs[CLOCK_PID + 1..]
                .iter()
                .all(ProcessState::is_exited)
        {
            return Err("FIN set while devices, units or elements are still alive".into());
        }
        Ok(())
    }

    /// Replays `transitions` from this state, failing on the first one that
    /// is not enabled.
    pub fn replay(&self, transitions: &[Transition]) -> Result<MachineState> {
        let mut state = self.clone();
        for (index, &t) in transitions.iter().enumerate() {
            if !state.enabled().contains(&t) {
                return Err(Error::CorruptTrace {
                    index,
                    reason: format!("pid {} {} is not enabled", t.pid, t.action),
                });
            }
            state = state.apply_unchecked(t);
        }
        Ok(state)
    }
}

/// Runs one configuration to termination under `policy`.
pub fn deterministic_run(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    params: TuningParams,
    policy: Policy,
) -> Result<RunOutcome> {
    let mut state = initial_state(platform, problem, params)?;
    let mut rng = match policy {
        Policy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Policy::RoundRobin => None,
    };
    let mut last_pid: Option<Pid> = None;
    let mut transitions = Vec::new();
    loop {
        let enabled = state.enabled();
        if enabled.is_empty() {
            if state.fin {
                break;
            }
            return Err(Error::Deadlock {
                params,
                time: state.time,
                steps: transitions.len(),
                summary: state.summary(),
            });
        }
        let t = match rng.as_mut() {
            Some(rng) => *enabled.choose(rng).expect("non-empty"),
            None => {
                let after = last_pid.map_or(0, |p| p + 1);
                *enabled
                    .iter()
                    .find(|t| t.pid >= after)
                    .unwrap_or(&enabled[0])
            }
        };
        last_pid = Some(t.pid);
        state = state.apply_unchecked(t);
        transitions.push(t);
    }
    let steps = transitions.len();
    Ok(RunOutcome {
        time: state.time,
        result: state.result(),
        steps,
        trace: Trace {
            transitions,
            final_time: state.time,
            params,
            steps,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::KernelKind;
    use std::collections::HashSet;

    fn p144() -> PlatformConfig {
        PlatformConfig::new(1, 1, 4, 4).unwrap()
    }

    fn abs(size: u32) -> ProblemSpec {
        ProblemSpec::abstract_kernel(size).unwrap()
    }

    fn run_to(state: &MachineState, stop: impl Fn(&MachineState) -> bool) -> MachineState {
        let mut s = state.clone();
        while !stop(&s) {
            let t = s.enabled()[0];
            s = s.apply(t).unwrap();
        }
        s
    }

    #[test]
    fn process_census() {
        let s = initial_state(&p144(), &abs(8), TuningParams::new(4, 4)).unwrap();
        assert_eq!(s.processes().len(), 10);
        let pexes = s
            .processes()
            .iter()
            .filter(|p| p.role() == Role::Pex)
            .count();
        let barriers = s
            .processes()
            .iter()
            .filter(|p| p.role() == Role::Barrier)
            .count();
        assert_eq!((pexes, barriers), (4, 1));
        assert_eq!((s.time(), s.nrp_work(), s.fin()), (0, 0, false));

        let s = initial_state(&p144(), &abs(8), TuningParams::new(2, 4)).unwrap();
        let pexes = s
            .processes()
            .iter()
            .filter(|p| p.role() == Role::Pex)
            .count();
        assert_eq!(pexes, 2);
        assert_eq!(s.all_nwe(), 2);
    }

    #[test]
    fn full_hierarchy_census() {
        let platform = PlatformConfig::new(2, 2, 4, 4).unwrap();
        let s = initial_state(&platform, &abs(64), TuningParams::new(2, 4)).unwrap();
        // 3 + 2 devices * (1 + 2 units * (1 unit + 1 barrier + 2 pexes))
        assert_eq!(s.processes().len(), 3 + 2 * (1 + 2 * 4));
        assert_eq!(s.all_nwe(), 8);
    }

    #[test]
    fn minimum_memory_initialized() {
        let problem = ProblemSpec::minimum_default(16).unwrap();
        let s = initial_state(&p144(), &problem, TuningParams::new(4, 4)).unwrap();
        let mem = s.memory().unwrap();
        assert_eq!(mem.glob, (1..=16).rev().collect::<Vec<i64>>());
        assert!(mem.loc.iter().all(|&v| v == crate::kernel::MAX_SENTINEL));
    }

    #[test]
    fn clock_waits_for_every_report() {
        let s0 = initial_state(&p144(), &abs(8), TuningParams::new(4, 4)).unwrap();
        let busy = run_to(&s0, |s| {
            s.enabled().iter().any(|t| t.action == Action::Report)
        });
        let mut s = busy.clone();
        for _ in 0..3 {
            let t = *s
                .enabled()
                .iter()
                .find(|t| t.action == Action::Report)
                .unwrap();
            s = s.apply(t).unwrap();
        }
        assert_eq!(s.nrp_work(), 3);
        let en = s.enabled();
        assert!(!en.iter().any(|t| t.action == Action::Tick));
        assert_eq!(en.iter().filter(|t| t.action == Action::Report).count(), 1);

        let t = en[0];
        let s = s.apply(t).unwrap();
        let en = s.enabled();
        assert_eq!(en.iter().filter(|t| t.action == Action::Tick).count(), 1);
        let tick = *en.iter().find(|t| t.action == Action::Tick).unwrap();
        let after = s.apply(tick).unwrap();
        assert_eq!(after.time(), s.time() + 1);
        assert_eq!(after.nrp_work(), 0);
    }

    #[test]
    fn barrier_release_touches_neither_time_nor_memory() {
        let problem = abs(8);
        let s0 = initial_state(&p144(), &problem, TuningParams::new(4, 4)).unwrap();
        let s = run_to(&s0, |s| {
            s.enabled().iter().any(|t| t.action == Action::Release)
        });
        let t = *s
            .enabled()
            .iter()
            .find(|t| t.action == Action::Release)
            .unwrap();
        let after = s.apply(t).unwrap();
        assert_eq!(after.time(), s.time());
        assert_eq!(after.memory(), s.memory());
    }

    #[test]
    fn effect_folds_into_local_slot() {
        let problem = ProblemSpec::minimum_default(16).unwrap();
        let s0 = initial_state(&p144(), &problem, TuningParams::new(4, 4)).unwrap();
        let s = run_to(&s0, |s| {
            s.enabled().iter().any(|t| t.action == Action::Effect)
        });
        let t = *s
            .enabled()
            .iter()
            .find(|t| t.action == Action::Effect)
            .unwrap();
        let layout = s.model().pex(t.pid).unwrap().clone();
        let after = s.apply(t).unwrap();
        // first element of item `me` in group 0 is glob[me * ts]
        let slot = layout.me as usize;
        let expected =
            s.memory().unwrap().loc[slot].min(s.memory().unwrap().glob[layout.me as usize * 4]);
        assert_eq!(after.memory().unwrap().loc[slot], expected);
        assert_eq!(after.time(), s.time());
    }

    #[test]
    fn apply_rejects_disabled_transition() {
        let s = initial_state(&p144(), &abs(8), TuningParams::new(4, 4)).unwrap();
        assert!(s.apply(Transition::new(CLOCK_PID, Action::Tick)).is_err());
        assert!(!s.is_terminal());
        assert!(s.final_time().is_err());
    }

    #[test]
    fn single_round_times() {
        let out = deterministic_run(
            &p144(),
            &abs(8),
            TuningParams::new(4, 4),
            Policy::RoundRobin,
        )
        .unwrap();
        assert_eq!(out.time, 44);
        assert_eq!(out.result, None);
        assert_eq!(out.steps, out.trace.transitions.len());

        let p141 = PlatformConfig::new(1, 1, 4, 1).unwrap();
        let out =
            deterministic_run(&p141, &abs(4), TuningParams::new(2, 2), Policy::RoundRobin).unwrap();
        assert_eq!(out.time, 9);
    }

    #[test]
    fn rounds_and_groups_multiply() {
        // wg=8 on 4 elements: two rounds of 84
        let out = deterministic_run(
            &p144(),
            &abs(16),
            TuningParams::new(8, 4),
            Policy::RoundRobin,
        )
        .unwrap();
        assert_eq!(out.time, 168);
        // wgs = 16/(2*2) = 4 groups in sequence
        let out = deterministic_run(
            &p144(),
            &abs(16),
            TuningParams::new(2, 2),
            Policy::RoundRobin,
        )
        .unwrap();
        assert_eq!(out.time, 4 * 84);
    }

    #[test]
    fn terminal_state_is_quiescent() {
        let out = deterministic_run(
            &p144(),
            &abs(8),
            TuningParams::new(2, 2),
            Policy::RoundRobin,
        )
        .unwrap();
        let s0 = initial_state(&p144(), &abs(8), TuningParams::new(2, 2)).unwrap();
        let end = s0.replay(&out.trace.transitions).unwrap();
        assert!(end.is_terminal());
        assert!(end.enabled().is_empty());
        assert_eq!(end.final_time().unwrap(), out.time);
        assert_eq!(end.consumed(), end.model().expected_work());
    }

    #[test]
    fn minimum_result_independent_of_schedule() {
        let problem = ProblemSpec::minimum(vec![5, 3, 9, 7]).unwrap();
        for seed in 0..5 {
            let out = deterministic_run(
                &p144(),
                &problem,
                TuningParams::new(2, 2),
                Policy::SeededRandom(seed),
            )
            .unwrap();
            assert_eq!(out.result, Some(3));
        }
        let problem = ProblemSpec::minimum_default(16).unwrap();
        assert_eq!(problem.kernel, KernelKind::Minimum);
        let out = deterministic_run(
            &p144(),
            &problem,
            TuningParams::new(8, 2),
            Policy::RoundRobin,
        )
        .unwrap();
        assert_eq!(out.result, Some(1));
    }

    #[test]
    fn fingerprints_follow_state_equality() {
        let s = initial_state(&p144(), &abs(8), TuningParams::new(4, 4)).unwrap();
        assert_eq!(s.fingerprint(), s.fingerprint());
        assert_eq!(s.fingerprint(), s.clone().fingerprint());
        let busy = run_to(&s, |s| s.enabled().iter().any(|t| t.action == Action::Tick));
        let tick = *busy
            .enabled()
            .iter()
            .find(|t| t.action == Action::Tick)
            .unwrap();
        let later = busy.apply(tick).unwrap();
        let mut timeshifted = busy.clone();
        timeshifted.time = later.time;
        assert_ne!(busy.fingerprint(), timeshifted.fingerprint());
        let other = initial_state(&p144(), &abs(8), TuningParams::new(4, 2)).unwrap();
        assert_ne!(s, other);
        assert_ne!(s.fingerprint(), other.fingerprint());
    }

    #[test]
    fn labels_roundtrip() {
        let mut seen = HashSet::new();
        let out = deterministic_run(
            &p144(),
            &abs(8),
            TuningParams::new(4, 4),
            Policy::RoundRobin,
        )
        .unwrap();
        for t in &out.trace.transitions {
            let label = t.label();
            assert_eq!(label.parse::<Action>().unwrap(), t.action);
            seen.insert(t.kind());
        }
        assert_eq!(seen.len(), 3);
    }
}
