//! Deterministic shared-memory parallel simulation of the one-dimensional
//! Nagel-Schreckenberg traffic model.
//!
//! Every worker count produces the same trajectory as the serial code: all
//! random draws come from one linear congruential sequence, and each worker
//! fast-forwards its own copy of the generator to the draws its cars own.

pub mod bench;
pub mod cli;
pub mod engine;
pub mod io;
pub mod model;
pub mod prng;
pub mod verify;

pub use engine::{
    checksum_trajectory, make_partition, run, run_with, step_parallel, Partition, RunConfig,
    RunResult,
};
pub use model::{
    agent_to_grid, grid_to_agent, init_state, measure, step_grid_serial, step_serial, AgentState,
    Cell, GridState, Observables, OutputMode, ParamsError, SimParams,
};
pub use prng::{JumpCoefficients, LcgState};
