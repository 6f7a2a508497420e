//! Discrete-time simulation: constant-rate entry, per-step wake loop,
//! termination detection and run metrics.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agent::{
    energy_tick_from, sense, AgentId, AgentRecord, Mode, ParamsError, Projected, SimParams,
    TickOutcome, ENERGY_EPS,
};
use crate::grid::{Coord, Direction, Layer, Occupancy, Region};
use crate::rules::{mobile_decide, settled_decide, ActionKind};
use crate::scheduling::{key_agent, wake_key};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Params(#[from] ParamsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Closed,
    LowEnergy,
    StepCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Closed => "closed",
            Termination::LowEnergy => "low_energy",
            Termination::StepCap => "step_cap",
        }
    }

    pub fn is_success(self) -> bool {
        self != Termination::StepCap
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Enter,
    Move,
    Settle,
    Shutdown,
    Transition,
    Fail,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Enter => "enter",
            EventKind::Move => "move",
            EventKind::Settle => "settle",
            EventKind::Shutdown => "shutdown",
            EventKind::Transition => "transition",
            EventKind::Fail => "fail",
        }
    }
}

/// One state change of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: u64,
    pub agent: AgentId,
    pub kind: EventKind,
    pub from: Coord,
    pub to: Coord,
    pub s1: Projected,
    pub s2: i64,
    pub energy: f64,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}:{},{}:{},{},{},{}",
            self.t,
            self.agent,
            self.kind.as_str(),
            self.from.row,
            self.from.col,
            self.to.row,
            self.to.col,
            self.s1,
            self.s2,
            self.energy
        )
    }
}

/// Header line matching [`Event`]'s `Display` output.
pub const EVENT_HEADER: &str = "t,agent,action,from,to,s1,s2,E";

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub termination: Termination,
    /// Step index at which termination was observed (the cap for `step_cap`).
    pub t_c: u64,
    /// Agents that entered the region.
    pub n_agents: usize,
    pub e_total: f64,
    pub max_ei: f64,
    /// Settled agents that are still active.
    pub a_c: usize,
    pub nda_shutdown: usize,
    pub nda_failed: usize,
    /// `(N(t), A_C(t))` at the end of every completed step.
    pub series: Vec<(usize, usize)>,
}

impl RunMetrics {
    pub fn nda(&self) -> usize {
        self.nda_shutdown + self.nda_failed
    }
}

/// Options for instrumented runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Instrumentation {
    pub log_events: bool,
    pub check_invariants: bool,
}

pub struct RunOutput {
    pub metrics: RunMetrics,
    pub agents: Vec<AgentRecord>,
    /// Final two-layer occupancy.
    pub occupancy: Occupancy,
    pub events: Vec<Event>,
    pub violations: Vec<String>,
}

/// State of one simulation run.
pub struct Simulation<'r> {
    region: &'r Region,
    params: SimParams,
    occ: Occupancy,
    agents: Vec<AgentRecord>,
    /// Indices of active agents, ascending by id.
    active: Vec<usize>,
    start_modes: Vec<Mode>,
    /// Settled agents whose neighborhood changed since their last wake-up.
    /// A settled agent that is not dirty would only re-project its state.
    dirty: Vec<bool>,
    /// Last step in which each agent held a wake slot.
    stamp: Vec<u64>,
    keys: Vec<u64>,
    late: BinaryHeap<Reverse<u64>>,
    cur_key: u64,
    rng: ChaCha8Rng,
    t: u64,
    cap: u64,
    settled: usize,
    termination: Option<Termination>,
    t_c: u64,
    series: Vec<(usize, usize)>,
    inst: Instrumentation,
    events: Vec<Event>,
    violations: Vec<String>,
}

impl<'r> Simulation<'r> {
    pub fn new(region: &'r Region, params: SimParams) -> Result<Self, EngineError> {
        Self::with_instrumentation(region, params, Instrumentation::default())
    }

    pub fn with_instrumentation(
        region: &'r Region,
        params: SimParams,
        inst: Instrumentation,
    ) -> Result<Self, EngineError> {
        params.validate()?;
        let cap = params.step_cap(region.n());
        Ok(Self {
            region,
            occ: Occupancy::new(region),
            agents: Vec::new(),
            active: Vec::new(),
            start_modes: Vec::new(),
            dirty: Vec::new(),
            stamp: Vec::new(),
            keys: Vec::new(),
            late: BinaryHeap::new(),
            cur_key: 0,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            t: 0,
            cap,
            settled: 0,
            termination: None,
            t_c: 0,
            series: Vec::new(),
            inst,
            events: Vec::new(),
            violations: Vec::new(),
            params,
        })
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn agents(&self) -> &[AgentRecord] {
        &self.agents
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occ
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    fn agent(&self, id: AgentId) -> &AgentRecord {
        &self.agents[id.0 as usize - 1]
    }

    fn log(&mut self, id: AgentId, kind: EventKind, from: usize, to: usize) {
        if !self.inst.log_events {
            return;
        }
        let a = self.agent(id);
        let coord = |c: usize| self.region.coord(c);
        let ev = Event {
            t: self.t,
            agent: id,
            kind,
            from: coord(from),
            to: coord(to),
            s1: a.s1,
            s2: a.s2,
            energy: a.energy,
        };
        self.events.push(ev);
    }

    fn violation(&mut self, msg: String) {
        self.violations.push(format!("t={}: {msg}", self.t));
    }

    /// Lets a new agent into the entry cell if its air layer is free.
    /// Must only be called during steps that are multiples of ΔT.
    pub fn attempt_entry(&mut self) -> bool {
        debug_assert_eq!(self.t % u64::from(self.params.dt), 0);
        if self.termination.is_some() {
            return false;
        }
        let entry = self.region.entry_index();
        if self.occ.air(entry).is_some() {
            return false;
        }
        let id = AgentId(self.agents.len() as u32 + 1);
        let s2 = self.occ.ground(entry).map_or(0, |g| self.agent(g).s2);
        let mut a = AgentRecord::in_source(id, self.params.e0);
        a.enter(entry, s2, self.t);
        self.agents.push(a);
        self.dirty.push(false);
        // Dormant for the rest of this step.
        self.stamp.push(self.t);
        self.occ
            .place(self.region, Layer::Air, entry, id)
            .expect("entry air checked free");
        self.log(id, EventKind::Enter, entry, entry);
        true
    }

    /// Entry observation: the projection of the settled agent at the entry.
    pub fn detect_termination(&self) -> Option<Termination> {
        let g = self.occ.ground(self.region.entry_index())?;
        match self.agent(g).s1 {
            Projected::LowEnergy => Some(Termination::LowEnergy),
            Projected::ClosedBeacon => Some(Termination::Closed),
            _ => None,
        }
    }

    /// Advances one time step. Returns the termination reason once the run
    /// has ended.
    pub fn step(&mut self) -> Option<Termination> {
        if self.termination.is_some() {
            return self.termination;
        }
        let t = self.t;
        let first_new = self.agents.len();
        self.start_modes.clear();
        self.start_modes
            .extend(self.active.iter().map(|&i| self.agents[i].mode));
        // The entry window spans the whole first step of each interval: if
        // the entry air is busy at the start, the next agent enters as soon
        // as it is vacated. Entrants stay dormant for the rest of the step.
        let mut entry_open = t % u64::from(self.params.dt) == 0 && !self.attempt_entry();

        let mut keys = std::mem::take(&mut self.keys);
        keys.clear();
        for k in 0..self.active.len() {
            let idx = self.active[k];
            let a = &self.agents[idx];
            let wakes = match a.mode {
                Mode::Mobile => true,
                Mode::Settled => self.dirty[idx] && a.s1 != Projected::LowEnergy,
                _ => false,
            };
            if wakes {
                self.stamp[idx] = t;
                keys.push(wake_key(
                    self.params.scheduler,
                    a.id,
                    a.pos,
                    self.params.m,
                    self.region,
                    &mut self.rng,
                ));
            }
        }
        keys.sort_unstable();
        self.late.clear();
        let mut next = 0;
        loop {
            let key = match (keys.get(next), self.late.peek()) {
                (Some(&k), Some(&Reverse(l))) if l < k => {
                    self.late.pop();
                    l
                }
                (Some(&k), _) => {
                    next += 1;
                    k
                }
                (None, Some(&Reverse(l))) => {
                    self.late.pop();
                    l
                }
                (None, None) => break,
            };
            self.cur_key = key;
            self.wake(key_agent(key));
            if let Some(reason) = self.termination {
                self.t_c = t;
                self.keys = keys;
                return Some(reason);
            }
            if entry_open && self.attempt_entry() {
                entry_open = false;
            }
        }
        self.keys = keys;

        let alpha = self.params.alpha;
        let threshold = self.params.ecrit_settled + ENERGY_EPS;
        let mut removed = false;
        for k in 0..self.active.len() {
            let idx = self.active[k];
            let start = self.start_modes[k];
            let a = &mut self.agents[idx];
            match energy_tick_from(a, start, alpha) {
                TickOutcome::Failed => {
                    let (id, pos) = (a.id, a.pos);
                    self.occ.clear(Layer::Ground, pos);
                    self.settled -= 1;
                    self.touch_neighbors(pos, false);
                    self.log(id, EventKind::Fail, pos, pos);
                }
                TickOutcome::Alive => {
                    if a.mode == Mode::Settled && alpha > 0.0 && a.energy <= threshold {
                        self.dirty[idx] = true;
                    }
                }
            }
            removed |= !self.agents[idx].mode.is_active();
        }
        if removed {
            let agents = &self.agents;
            self.active.retain(|&i| agents[i].mode.is_active());
        }
        self.active.extend(first_new..self.agents.len());
        if self.inst.check_invariants {
            self.check_step_invariants();
        }
        self.t += 1;
        self.series.push((self.agents.len(), self.settled));
        if self.t >= self.cap {
            self.termination = Some(Termination::StepCap);
            self.t_c = self.t;
        }
        self.termination
    }

    /// Marks the settled agents around `cell` as dirty. During the wake
    /// phase, an agent without a slot this step draws one now; it still
    /// wakes this step if that slot lies after the current one.
    fn touch_neighbors(&mut self, cell: usize, in_wake_phase: bool) {
        let table = *self.region.neighbor_table(cell);
        for v in table.into_iter().flatten() {
            let Some(id) = self.occ.ground(v as usize) else {
                continue;
            };
            let idx = id.0 as usize - 1;
            if self.dirty[idx] {
                continue;
            }
            self.dirty[idx] = true;
            if in_wake_phase && self.stamp[idx] != self.t {
                self.stamp[idx] = self.t;
                let key = wake_key(
                    self.params.scheduler,
                    id,
                    v as usize,
                    self.params.m,
                    self.region,
                    &mut self.rng,
                );
                if key > self.cur_key {
                    self.late.push(Reverse(key));
                }
            }
        }
    }

    fn wake(&mut self, id: AgentId) {
        let idx = id.0 as usize - 1;
        let mode = self.agents[idx].mode;
        match mode {
            Mode::Mobile => self.wake_mobile(idx),
            Mode::Settled => self.wake_settled(idx),
            _ => {}
        }
    }

    fn wake_mobile(&mut self, idx: usize) {
        let a = &self.agents[idx];
        let xi = sense(self.region, &self.occ, &self.agents, a);
        let act = mobile_decide(a, &xi, &self.params, &mut self.rng);
        let id = a.id;
        let pos = a.pos;
        let target = |d: Direction| {
            self.region
                .neighbor_idx(pos, d)
                .expect("decision targets an in-region cell")
        };
        match act.kind {
            ActionKind::Stay | ActionKind::Project | ActionKind::Transition(_) => {
                if let Some(s2) = act.new_s2 {
                    self.agents[idx].s2 = s2;
                }
            }
            ActionKind::Shutdown => {
                self.occ.clear(Layer::Air, pos);
                let a = &mut self.agents[idx];
                a.mode = Mode::Shutdown;
                self.log(id, EventKind::Shutdown, pos, pos);
            }
            ActionKind::Move(d) => {
                let to = target(d);
                self.occ.clear(Layer::Air, pos);
                if let Err(e) = self.occ.place(self.region, Layer::Air, to, id) {
                    self.violation(format!("agent {id} moved into occupied air: {e}"));
                }
                let a = &mut self.agents[idx];
                a.pos = to;
                if let Some(s2) = act.new_s2 {
                    a.s2 = s2;
                }
                self.log(id, EventKind::Move, pos, to);
            }
            ActionKind::SettleInPlace | ActionKind::SettleAt(_) => {
                let to = match act.kind {
                    ActionKind::SettleAt(d) => target(d),
                    _ => pos,
                };
                self.occ.clear(Layer::Air, pos);
                if let Err(e) = self.occ.place(self.region, Layer::Ground, to, id) {
                    self.violation(format!("agent {id} settled on occupied ground: {e}"));
                }
                let a = &mut self.agents[idx];
                a.pos = to;
                a.mode = Mode::Settled;
                a.s1 = Projected::Beacon;
                if let Some(s2) = act.new_s2 {
                    a.s2 = s2;
                }
                self.settled += 1;
                self.dirty[idx] = true;
                self.touch_neighbors(to, true);
                self.log(id, EventKind::Settle, pos, to);
            }
        }
    }

    fn wake_settled(&mut self, idx: usize) {
        let a = &self.agents[idx];
        self.dirty[idx] = false;
        if a.s1 == Projected::LowEnergy {
            // Absorbing; the decision would only re-project it.
            return;
        }
        let xi = sense(self.region, &self.occ, &self.agents, a);
        let act = settled_decide(a, &xi, &self.params);
        let ActionKind::Transition(s1) = act.kind else {
            return;
        };
        let (id, pos, old) = (a.id, a.pos, a.s1);
        if self.inst.check_invariants {
            if s1.rank() <= old.rank() {
                self.violation(format!("agent {id} regressed from {old} to {s1}"));
            }
            if s1 == Projected::ClosedBeacon && xi.any_empty_ground_neighbor() {
                self.violation(format!("agent {id} closed next to an empty cell"));
            }
        }
        self.agents[idx].s1 = s1;
        self.touch_neighbors(pos, true);
        self.log(id, EventKind::Transition, pos, pos);
        if pos == self.region.entry_index() {
            self.termination = self.detect_termination();
        }
    }

    fn check_step_invariants(&mut self) {
        let e0 = f64::from(self.params.e0);
        let alpha = self.params.alpha;
        let mut msgs = Vec::new();
        let mut settled = 0;
        for a in &self.agents {
            let ledger = a.consumed(alpha);
            if (e0 - a.energy - ledger).abs() > ENERGY_EPS * e0.max(1.0) {
                msgs.push(format!("agent {} ledger off: E={} consumed={ledger}", a.id, a.energy));
            }
            let (layer, expect_s1) = match a.mode {
                Mode::Mobile => (Some(Layer::Air), Some(a.s1 == Projected::Mobile)),
                Mode::Settled => {
                    settled += 1;
                    (Some(Layer::Ground), Some(a.s1 != Projected::Mobile))
                }
                _ => (None, None),
            };
            if let Some(layer) = layer {
                if self.occ.get(layer, a.pos) != Some(a.id) {
                    msgs.push(format!("agent {} missing from its {layer:?} cell", a.id));
                }
            }
            if expect_s1 == Some(false) {
                msgs.push(format!("agent {} has s1={} in mode {:?}", a.id, a.s1, a.mode));
            }
        }
        if settled != self.occ.settled_count() || settled != self.settled {
            msgs.push(format!(
                "settled count mismatch: agents={settled} ground={} tracked={}",
                self.occ.settled_count(),
                self.settled
            ));
        }
        for m in msgs {
            self.violation(m);
        }
    }

    /// Steps until termination or the step cap.
    pub fn run_to_end(&mut self) -> Termination {
        loop {
            if let Some(r) = self.step() {
                return r;
            }
        }
    }

    pub fn metrics(&self) -> RunMetrics {
        let alpha = self.params.alpha;
        let mut e_total = 0.0;
        let mut max_ei: f64 = 0.0;
        let mut nda_shutdown = 0;
        let mut nda_failed = 0;
        for a in &self.agents {
            let c = a.consumed(alpha);
            e_total += c;
            max_ei = max_ei.max(c);
            match a.mode {
                Mode::Shutdown => nda_shutdown += 1,
                Mode::Failed => nda_failed += 1,
                _ => {}
            }
        }
        RunMetrics {
            termination: self.termination.unwrap_or(Termination::StepCap),
            t_c: self.t_c,
            n_agents: self.agents.len(),
            e_total,
            max_ei,
            a_c: self.settled,
            nda_shutdown,
            nda_failed,
            series: self.series.clone(),
        }
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput {
            metrics: self.metrics(),
            agents: self.agents,
            occupancy: self.occ,
            events: self.events,
            violations: self.violations,
        }
    }
}

/// Runs one simulation to completion.
pub fn run(region: &Region, params: &SimParams) -> Result<RunMetrics, EngineError> {
    let mut sim = Simulation::new(region, params.clone())?;
    sim.run_to_end();
    Ok(sim.metrics())
}

/// Runs one simulation with event logging and/or invariant checks.
pub fn run_instrumented(
    region: &Region,
    params: &SimParams,
    inst: Instrumentation,
) -> Result<RunOutput, EngineError> {
    let mut sim = Simulation::with_instrumentation(region, params.clone(), inst)?;
    sim.run_to_end();
    Ok(sim.into_output())
}

/// Checks that the direction codes of the settled tree-traversal agents
/// form a forest rooted at the entry: following each agent's code back to
/// the cell it arrived from must reach the entry without revisiting a cell.
/// Only meaningful while no settled agent has failed, since a failure
/// vacates a cell in the middle of a chain.
pub fn tree_violations(region: &Region, occ: &Occupancy, agents: &[AgentRecord]) -> Vec<String> {
    let entry = region.entry_index();
    let mut out = Vec::new();
    for a in agents.iter().filter(|a| a.mode == Mode::Settled) {
        let mut cell = a.pos;
        let mut hops = 0;
        loop {
            if cell == entry {
                break;
            }
            let Some(id) = occ.ground(cell) else {
                out.push(format!("agent {}: chain reaches empty cell", a.id));
                break;
            };
            let code = agents[id.0 as usize - 1].s2;
            let Some(dir) = Direction::from_code(code) else {
                out.push(format!("agent {}: code {code} away from the entry", a.id));
                break;
            };
            let Some(parent) = region.neighbor_idx(cell, dir.opposite()) else {
                out.push(format!("agent {}: arrow points out of the region", a.id));
                break;
            };
            cell = parent;
            hops += 1;
            if hops > region.n() {
                out.push(format!("agent {}: cycle in arrows", a.id));
                break;
            }
        }
    }
    if let Some(root) = occ.ground(entry) {
        if agents[root.0 as usize - 1].s2 != 0 {
            out.push("entry agent does not carry code 0".to_string());
        }
    }
    out
}
