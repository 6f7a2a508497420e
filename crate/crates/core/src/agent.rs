//! Agent records, simulation parameters and the sensing snapshot.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{Occupancy, Region};
use crate::scheduling::SchedulerKind;

/// 1-based entry index of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    InSource,
    Mobile,
    Settled,
    /// Mobile agent that ran out of usable energy and landed. Absorbing.
    Shutdown,
    /// Settled agent whose energy reached zero. Absorbing.
    Failed,
}

impl Mode {
    pub fn is_active(self) -> bool {
        matches!(self, Mode::Mobile | Mode::Settled)
    }
}

/// The projected state `s1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Projected {
    Mobile,
    Beacon,
    ClosedBeacon,
    LowEnergy,
}

impl Projected {
    /// Rank along Beacon → ClosedBeacon → LowEnergy; settled states never
    /// move to a lower rank.
    pub fn rank(self) -> u8 {
        match self {
            Projected::Mobile => 0,
            Projected::Beacon => 1,
            Projected::ClosedBeacon => 2,
            Projected::LowEnergy => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Projected::Mobile => "mobile",
            Projected::Beacon => "beacon",
            Projected::ClosedBeacon => "closed",
            Projected::LowEnergy => "low_energy",
        }
    }
}

impl fmt::Display for Projected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub id: AgentId,
    pub mode: Mode,
    pub s1: Projected,
    /// Step count (SLLG/SLUG) or direction code 0..4 (SLTT).
    pub s2: i64,
    /// Cell index into the region.
    pub pos: usize,
    /// Remaining energy, decremented tick by tick.
    pub energy: f64,
    pub t_m: u64,
    pub t_s: u64,
    /// Step at which the agent entered the region.
    pub entered_at: u64,
}

impl AgentRecord {
    pub fn in_source(id: AgentId, e0: u32) -> Self {
        Self {
            id,
            mode: Mode::InSource,
            s1: Projected::Mobile,
            s2: 0,
            pos: usize::MAX,
            energy: f64::from(e0),
            t_m: 0,
            t_s: 0,
            entered_at: 0,
        }
    }

    /// Enters at `pos` paying one unit; the agent then stays dormant for the
    /// rest of the current step.
    pub fn enter(&mut self, pos: usize, s2: i64, t: u64) {
        debug_assert_eq!(self.mode, Mode::InSource);
        self.mode = Mode::Mobile;
        self.s1 = Projected::Mobile;
        self.s2 = s2;
        self.pos = pos;
        self.t_m += 1;
        self.energy -= 1.0;
        self.entered_at = t;
    }

    /// Energy consumed so far according to the ledger, `t_m + α·t_s`.
    pub fn consumed(&self, alpha: f64) -> f64 {
        self.t_m as f64 + alpha * self.t_s as f64
    }
}

/// Outcome of [`energy_tick`] for a settled agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickOutcome {
    Alive,
    Failed,
}

/// Energies at or below this are treated as zero.
pub const ENERGY_EPS: f64 = 1e-9;

/// Charges one time step of energy: one unit if mobile, `α` if settled.
/// A settled agent whose energy reaches zero fails.
pub fn energy_tick(a: &mut AgentRecord, alpha: f64) -> TickOutcome {
    energy_tick_from(a, a.mode, alpha)
}

/// Like [`energy_tick`], but charges according to the mode the agent had at
/// the start of the step. An agent that settled or shut down during the
/// step still pays the mobile rate for it.
pub fn energy_tick_from(a: &mut AgentRecord, start: Mode, alpha: f64) -> TickOutcome {
    match start {
        Mode::Mobile => {
            a.t_m += 1;
            a.energy -= 1.0;
            TickOutcome::Alive
        }
        Mode::Settled if a.mode == Mode::Settled => {
            a.t_s += 1;
            a.energy -= alpha;
            if a.energy <= ENERGY_EPS {
                a.mode = Mode::Failed;
                TickOutcome::Failed
            } else {
                TickOutcome::Alive
            }
        }
        _ => TickOutcome::Alive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Limited gradient: advance only up steps of exactly one.
    Sllg,
    /// Unlimited gradient: advance to the smallest higher step count.
    Slug,
    /// Tree traversal: settled agents project the direction of their arrival.
    Sltt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Sllg, Algorithm::Slug, Algorithm::Sltt];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Sllg => "SLLG-EA",
            Algorithm::Slug => "SLUG-EA",
            Algorithm::Sltt => "SLTT-EA",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown {what} {value:?}")]
pub struct ParseEnumError {
    pub what: &'static str,
    pub value: String,
}

impl FromStr for Algorithm {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SLLG-EA" | "SLLG" => Ok(Algorithm::Sllg),
            "SLUG-EA" | "SLUG" => Ok(Algorithm::Slug),
            "SLTT-EA" | "SLTT" => Ok(Algorithm::Sltt),
            _ => Err(ParseEnumError {
                what: "algorithm",
                value: s.to_string(),
            }),
        }
    }
}

/// Termination approach for settled agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Approach {
    /// Propagate Low Energy as soon as any neighbor reports it.
    FastTermination = 1,
    /// Propagate Low Energy only once every relevant neighbor is done.
    MaxCoverage = 2,
}

impl Approach {
    pub fn number(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Approach {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(Approach::FastTermination),
            "2" => Ok(Approach::MaxCoverage),
            _ => Err(ParseEnumError {
                what: "approach",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("dt must be at least 1")]
    EntryInterval,
    #[error("e0 ({e0}) must exceed ecrit_mobile ({ecrit_mobile})")]
    InitialEnergy { e0: u32, ecrit_mobile: u32 },
    #[error("ecrit_mobile must be at least 1")]
    MobileThreshold,
    #[error("ecrit_settled must be non-negative, got {0}")]
    SettledThreshold(f64),
    #[error("alpha must be non-negative, got {0}")]
    Alpha(f64),
    #[error("m (sub-steps) must be at least 1")]
    SubSteps,
}

/// Default number of sub-steps per time step.
pub const DEFAULT_SUB_STEPS: u32 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Entry interval ΔT in time steps.
    pub dt: u32,
    pub e0: u32,
    pub ecrit_mobile: u32,
    pub ecrit_settled: f64,
    /// Settled-to-mobile power ratio.
    pub alpha: f64,
    /// Sub-steps per time step.
    pub m: u32,
    pub algorithm: Algorithm,
    pub approach: Approach,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    /// Step cap; `None` selects `50·n·(ΔT+2)`.
    pub max_steps: Option<u64>,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 2,
            e0: 15,
            ecrit_mobile: 1,
            ecrit_settled: 1.0,
            alpha: 0.0,
            m: DEFAULT_SUB_STEPS,
            algorithm: Algorithm::Sllg,
            approach: Approach::FastTermination,
            scheduler: SchedulerKind::Random,
            seed: 0,
            max_steps: None,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.dt < 1 {
            return Err(ParamsError::EntryInterval);
        }
        if self.ecrit_mobile < 1 {
            return Err(ParamsError::MobileThreshold);
        }
        if self.e0 <= self.ecrit_mobile {
            return Err(ParamsError::InitialEnergy {
                e0: self.e0,
                ecrit_mobile: self.ecrit_mobile,
            });
        }
        if !(self.ecrit_settled >= 0.0) {
            return Err(ParamsError::SettledThreshold(self.ecrit_settled));
        }
        if !(self.alpha >= 0.0) {
            return Err(ParamsError::Alpha(self.alpha));
        }
        if self.m < 1 {
            return Err(ParamsError::SubSteps);
        }
        Ok(())
    }

    /// Largest distance from the entry an agent can still settle at.
    pub fn d_max(&self) -> i64 {
        i64::from(self.e0) - i64::from(self.ecrit_mobile) - 1
    }

    pub fn step_cap(&self, n: usize) -> u64 {
        self.max_steps
            .unwrap_or_else(|| 50 * n as u64 * (u64::from(self.dt) + 2))
    }
}

/// What an agent perceives at one sensing position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sensed {
    Wall,
    Empty,
    Agent { s1: Projected, s2: i64 },
}

impl Sensed {
    pub fn is_empty(self) -> bool {
        self == Sensed::Empty
    }

    /// `(s1, s2)` of an observed agent.
    pub fn agent(self) -> Option<(Projected, i64)> {
        match self {
            Sensed::Agent { s1, s2 } => Some((s1, s2)),
            _ => None,
        }
    }
}

/// The 10-tuple ξ: slots 0..4 are the ground (0 beneath, 1..4 = N, E, S, W)
/// and slots 5..9 the air above the same cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensedNeighborhood(pub [Sensed; 10]);

impl SensedNeighborhood {
    pub fn ground(&self, pos: usize) -> Sensed {
        self.0[pos]
    }

    pub fn air(&self, pos: usize) -> Sensed {
        self.0[pos + 5]
    }

    pub fn beneath(&self) -> Sensed {
        self.0[0]
    }

    /// True when any ground slot 0..4 is empty.
    pub fn any_empty_ground(&self) -> bool {
        self.0[..5].iter().any(|s| s.is_empty())
    }

    pub fn any_empty_ground_neighbor(&self) -> bool {
        self.0[1..5].iter().any(|s| s.is_empty())
    }
}

/// Builds the sensing snapshot of `a`. Mobile agents see both layers,
/// settled agents only the ground. Shut-down and failed agents hold no
/// occupancy and are therefore invisible. `agents[k]` must hold the agent
/// with id `k + 1`.
pub fn sense(
    region: &Region,
    occ: &Occupancy,
    agents: &[AgentRecord],
    a: &AgentRecord,
) -> SensedNeighborhood {
    debug_assert!(a.mode.is_active());
    let look = |id: Option<AgentId>| match id {
        None => Sensed::Empty,
        Some(id) => {
            let b = &agents[id.0 as usize - 1];
            Sensed::Agent { s1: b.s1, s2: b.s2 }
        }
    };
    let mut xi = [Sensed::Wall; 10];
    let table = region.neighbor_table(a.pos);
    xi[0] = look(occ.ground(a.pos));
    for k in 0..4 {
        if let Some(v) = table[k] {
            xi[k + 1] = look(occ.ground(v as usize));
        }
    }
    if a.mode == Mode::Mobile {
        xi[5] = look(occ.air(a.pos));
        for k in 0..4 {
            if let Some(v) = table[k] {
                xi[k + 6] = look(occ.air(v as usize));
            }
        }
    } else {
        for slot in &mut xi[5..] {
            *slot = Sensed::Empty;
        }
    }
    SensedNeighborhood(xi)
}
