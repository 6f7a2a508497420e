//! Wake-up decision rules of the three coverage algorithms.
//!
//! Each rule is a pure function of the agent record, its sensing snapshot,
//! the run parameters and (for mobile agents) the random stream. Random
//! choices scan positions 1..4 in order and consume exactly one draw.

use rand::Rng;

use crate::agent::{
    Algorithm, AgentRecord, Approach, Projected, Sensed, SensedNeighborhood, SimParams,
    ENERGY_EPS,
};
use crate::grid::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Stay,
    Move(Direction),
    SettleInPlace,
    SettleAt(Direction),
    Shutdown,
    /// A settled agent changes its projected state.
    Transition(Projected),
    /// A settled agent keeps projecting its current state.
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action {
    pub kind: ActionKind,
    pub new_s2: Option<i64>,
}

impl Action {
    fn new(kind: ActionKind, new_s2: Option<i64>) -> Self {
        Self { kind, new_s2 }
    }

    fn stay(new_s2: Option<i64>) -> Self {
        Self::new(ActionKind::Stay, new_s2)
    }
}

fn pick<R: Rng + ?Sized>(cands: &[Direction], rng: &mut R) -> Direction {
    cands[rng.gen_range(0..cands.len())]
}

fn settled_at(xi: &SensedNeighborhood, pos: usize) -> Option<(Projected, i64)> {
    xi.ground(pos).agent()
}

fn air_free(xi: &SensedNeighborhood, pos: usize) -> bool {
    xi.air(pos).is_empty()
}

/// Shared guards of every mobile rule: shutdown, then settling on an empty
/// ground cell. `s2_at` gives the step count or direction code to adopt
/// when settling in direction `d`.
fn mobile_settle<R: Rng + ?Sized>(
    a: &AgentRecord,
    xi: &SensedNeighborhood,
    p: &SimParams,
    in_place_s2: i64,
    s2_at: impl Fn(Direction) -> i64,
    rng: &mut R,
) -> Option<Action> {
    if a.energy <= f64::from(p.ecrit_mobile) + ENERGY_EPS {
        return Some(Action::new(ActionKind::Shutdown, None));
    }
    if xi.beneath().is_empty() {
        return Some(Action::new(ActionKind::SettleInPlace, Some(in_place_s2)));
    }
    let mut empty = [Direction::North; 4];
    let mut k = 0;
    for d in Direction::ALL {
        if xi.ground(d.code() as usize).is_empty() {
            empty[k] = d;
            k += 1;
        }
    }
    if k > 0 {
        let d = pick(&empty[..k], rng);
        return Some(Action::new(ActionKind::SettleAt(d), Some(s2_at(d))));
    }
    None
}

/// Moves to a uniformly random candidate with free air; stays when every
/// candidate is blocked. Returns `None` when there are no candidates.
fn advance<R: Rng + ?Sized>(
    xi: &SensedNeighborhood,
    is_candidate: impl Fn(usize, Projected, i64) -> bool,
    s2_after: impl Fn(Direction, i64) -> i64,
    rng: &mut R,
) -> Option<Action> {
    let mut any = false;
    let mut free = [Direction::North; 4];
    let mut k = 0;
    for d in Direction::ALL {
        let pos = d.code() as usize;
        if let Some((s1, s2)) = settled_at(xi, pos) {
            if is_candidate(pos, s1, s2) {
                any = true;
                if air_free(xi, pos) {
                    free[k] = d;
                    k += 1;
                }
            }
        }
    }
    if !any {
        return None;
    }
    if k == 0 {
        return Some(Action::stay(None));
    }
    let d = pick(&free[..k], rng);
    let s2 = settled_at(xi, d.code() as usize).map_or(0, |x| x.1);
    Some(Action::new(ActionKind::Move(d), Some(s2_after(d, s2))))
}

/// Retraces toward the entry: among free candidates, the largest `s2`
/// wins, ties broken uniformly.
fn retrace_max<R: Rng + ?Sized>(
    xi: &SensedNeighborhood,
    is_candidate: impl Fn(Projected, i64) -> bool,
    rng: &mut R,
) -> Action {
    let mut best = i64::MIN;
    let mut ties = [Direction::North; 4];
    let mut k = 0;
    for d in Direction::ALL {
        let pos = d.code() as usize;
        if let Some((s1, s2)) = settled_at(xi, pos) {
            if is_candidate(s1, s2) && air_free(xi, pos) {
                if s2 > best {
                    best = s2;
                    k = 0;
                }
                if s2 == best {
                    ties[k] = d;
                    k += 1;
                }
            }
        }
    }
    if k == 0 {
        return Action::stay(None);
    }
    let d = pick(&ties[..k], rng);
    Action::new(ActionKind::Move(d), Some(best))
}

/// Step count adopted when settling on the empty cell beneath: 1 at the
/// entry (where the agent still carries 0), otherwise the count it already
/// carries from the beacon that used to occupy the cell.
fn gradient_in_place(a: &AgentRecord) -> i64 {
    a.s2.max(1)
}

pub fn mobile_decide_sllg<R: Rng + ?Sized>(
    a: &AgentRecord,
    xi: &SensedNeighborhood,
    p: &SimParams,
    rng: &mut R,
) -> Action {
    let own = a.s2;
    if let Some(act) = mobile_settle(a, xi, p, gradient_in_place(a), |_| own + 1, rng) {
        return act;
    }
    if let Some(act) = advance(
        xi,
        |_, s1, s2| s1 == Projected::Beacon && s2 == own + 1,
        |_, _| own + 1,
        rng,
    ) {
        return act;
    }
    retrace_max(xi, |s1, s2| s1 == Projected::ClosedBeacon && s2 < own, rng)
}

pub fn mobile_decide_slug<R: Rng + ?Sized>(
    a: &AgentRecord,
    xi: &SensedNeighborhood,
    p: &SimParams,
    rng: &mut R,
) -> Action {
    // Re-read the count of the beacon beneath on every wake.
    let own = match xi.beneath() {
        Sensed::Agent { s2, .. } => s2,
        _ => a.s2,
    };
    let refreshed = (own != a.s2).then_some(own);
    let with_refresh = |mut act: Action| {
        if act.new_s2.is_none() {
            act.new_s2 = refreshed;
        }
        act
    };
    let in_place = own.max(1);
    if let Some(act) = mobile_settle(a, xi, p, in_place, |_| own + 1, rng) {
        return with_refresh(act);
    }
    let mut target = i64::MAX;
    for pos in 1..5 {
        if let Some((Projected::Beacon, s2)) = settled_at(xi, pos) {
            if s2 > own {
                target = target.min(s2);
            }
        }
    }
    if target != i64::MAX {
        // Blocked minimal targets mean waiting, not falling back to a
        // steeper beacon.
        let act = advance(
            xi,
            |_, s1, s2| s1 == Projected::Beacon && s2 == target,
            |_, s2| s2,
            rng,
        )
        .expect("target exists");
        return with_refresh(act);
    }
    with_refresh(retrace_max(
        xi,
        |s1, s2| matches!(s1, Projected::Beacon | Projected::ClosedBeacon) && s2 < own,
        rng,
    ))
}

pub fn mobile_decide_sltt<R: Rng + ?Sized>(
    a: &AgentRecord,
    xi: &SensedNeighborhood,
    p: &SimParams,
    rng: &mut R,
) -> Action {
    let code = |d: Direction| i64::from(d.code());
    if let Some(act) = mobile_settle(a, xi, p, a.s2, code, rng) {
        return act;
    }
    if let Some(act) = advance(
        xi,
        |pos, s1, s2| s1 == Projected::Beacon && s2 == pos as i64,
        |d, _| code(d),
        rng,
    ) {
        return act;
    }
    // Closed beacons whose arrow points back at this cell. The entry's code
    // 0 is not a direction and never matches.
    let mut free = [Direction::North; 4];
    let mut k = 0;
    for d in Direction::ALL {
        let pos = d.code() as usize;
        if let Some((Projected::ClosedBeacon, s2)) = settled_at(xi, pos) {
            if (1..=4).contains(&s2) && (s2 - pos as i64).abs() == 2 && air_free(xi, pos) {
                free[k] = d;
                k += 1;
            }
        }
    }
    if k == 0 {
        return Action::stay(None);
    }
    let d = pick(&free[..k], rng);
    Action::new(ActionKind::Move(d), Some(code(d)))
}

pub fn mobile_decide<R: Rng + ?Sized>(
    a: &AgentRecord,
    xi: &SensedNeighborhood,
    p: &SimParams,
    rng: &mut R,
) -> Action {
    match p.algorithm {
        Algorithm::Sllg => mobile_decide_sllg(a, xi, p, rng),
        Algorithm::Slug => mobile_decide_slug(a, xi, p, rng),
        Algorithm::Sltt => mobile_decide_sltt(a, xi, p, rng),
    }
}

/// Neighborhood summary used by every settled rule.
struct Local {
    any_empty: bool,
    any_low: bool,
    /// Up-gradient neighbors (children, for the tree variant).
    up: u8,
    up_closed: u8,
    up_done: u8,
}

fn local(xi: &SensedNeighborhood, is_up: impl Fn(usize, i64) -> bool) -> Local {
    let mut l = Local {
        any_empty: false,
        any_low: false,
        up: 0,
        up_closed: 0,
        up_done: 0,
    };
    for pos in 1..5 {
        match xi.ground(pos) {
            Sensed::Empty => l.any_empty = true,
            Sensed::Wall => {}
            Sensed::Agent { s1, s2 } => {
                if s1 == Projected::LowEnergy {
                    l.any_low = true;
                }
                if is_up(pos, s2) {
                    l.up += 1;
                    if s1 == Projected::ClosedBeacon {
                        l.up_closed += 1;
                    }
                    if matches!(s1, Projected::ClosedBeacon | Projected::LowEnergy) {
                        l.up_done += 1;
                    }
                }
            }
        }
    }
    l
}

fn settled_common(
    a: &AgentRecord,
    p: &SimParams,
    approach: Approach,
    forced_low: bool,
    l: Local,
) -> Action {
    let to = |s1: Projected| {
        if s1 == a.s1 {
            Action::new(ActionKind::Project, None)
        } else {
            Action::new(ActionKind::Transition(s1), None)
        }
    };
    if a.s1 == Projected::LowEnergy {
        return to(Projected::LowEnergy);
    }
    if forced_low || a.energy <= p.ecrit_settled + ENERGY_EPS {
        return to(Projected::LowEnergy);
    }
    match approach {
        Approach::FastTermination => {
            if l.any_low {
                return to(Projected::LowEnergy);
            }
        }
        Approach::MaxCoverage => {
            if !l.any_empty && l.any_low && l.up_done == l.up {
                return to(Projected::LowEnergy);
            }
        }
    }
    if a.s1 == Projected::ClosedBeacon || (!l.any_empty && l.up_closed == l.up) {
        return to(Projected::ClosedBeacon);
    }
    to(Projected::Beacon)
}

pub fn settled_decide_sllg(
    a: &AgentRecord,
    xi: &SensedNeighborhood,
    p: &SimParams,
    approach: Approach,
) -> Action {
    let own = a.s2;
    settled_common(a, p, approach, false, local(xi, |_, s2| s2 == own + 1))
}

pub fn settled_decide_slug(
    a: &AgentRecord,
    xi: &SensedNeighborhood,
    p: &SimParams,
    approach: Approach,
) -> Action {
    let own = a.s2;
    let at_range_limit = own >= p.d_max();
    settled_common(a, p, approach, at_range_limit, local(xi, |_, s2| s2 > own))
}

pub fn settled_decide_sltt(
    a: &AgentRecord,
    xi: &SensedNeighborhood,
    p: &SimParams,
    approach: Approach,
) -> Action {
    settled_common(a, p, approach, false, local(xi, |pos, s2| s2 == pos as i64))
}

pub fn settled_decide(a: &AgentRecord, xi: &SensedNeighborhood, p: &SimParams) -> Action {
    match p.algorithm {
        Algorithm::Sllg => settled_decide_sllg(a, xi, p, p.approach),
        Algorithm::Slug => settled_decide_slug(a, xi, p, p.approach),
        Algorithm::Sltt => settled_decide_sltt(a, xi, p, p.approach),
    }
}
