//! Energy-aware coverage of grid regions by a swarm of flying agents.
//!
//! Agents enter a region through a single entry cell at a constant rate,
//! explore it and settle so that each empty cell ends up holding one settled
//! agent. Settled agents project a small state that guides later arrivals
//! and propagates closure or low-energy indications back to the entry.
//!
//! The crate provides the grid model ([`grid`]), agent state and sensing
//! ([`agent`]), wake-order schedulers ([`scheduling`]), the decision rules
//! of the three algorithms ([`rules`]), the simulation engine ([`engine`])
//! and the closed-form bounds used to validate runs ([`bounds`]).

pub mod agent;
pub mod bounds;
pub mod engine;
pub mod grid;
pub mod rules;
pub mod scheduling;

pub use agent::{Algorithm, AgentId, AgentRecord, Approach, Mode, Projected, SimParams};
pub use engine::{run, run_instrumented, Instrumentation, RunMetrics, Simulation, Termination};
pub use grid::{Coord, Direction, Region};
pub use scheduling::SchedulerKind;
