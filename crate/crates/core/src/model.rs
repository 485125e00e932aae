//! Simulation state in agent and grid form, and the serial update rule.

use std::fmt;
use std::str::FromStr;

use crate::prng::LcgState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamsError {
    #[error("car count must be at least 1")]
    NoCars,
    #[error("{cars} cars do not fit on a road of {length} cells")]
    TooManyCars { cars: usize, length: usize },
    #[error("deceleration probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("maximum velocity must be at least 1")]
    MaxVelocity,
    #[error("output stride must be at least 1")]
    Stride,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OutputMode {
    #[default]
    None,
    Ascii,
    Pgm,
}

impl OutputMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputMode::None => "none",
            OutputMode::Ascii => "ascii",
            OutputMode::Pgm => "pgm",
        }
    }
}

impl fmt::Display for OutputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "off" => Ok(OutputMode::None),
            "ascii" | "txt" => Ok(OutputMode::Ascii),
            "pgm" => Ok(OutputMode::Pgm),
            other => Err(format!(
                "unknown output mode `{other}` (expected none, ascii or pgm)"
            )),
        }
    }
}

/// Full description of one experiment. Execution settings such as the worker
/// count are deliberately not part of it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub road_length: usize,
    pub car_count: usize,
    pub v_max: u32,
    pub p: f64,
    pub steps: u64,
    pub seed: u64,
    pub output_mode: OutputMode,
    pub output_stride: u64,
}

impl SimParams {
    /// Ring of 1000 cells with 200 cars, p = 0.13, v_max = 5.
    pub fn canonical(steps: u64, seed: u64) -> Self {
        SimParams {
            road_length: 1000,
            car_count: 200,
            v_max: 5,
            p: 0.13,
            steps,
            seed,
            output_mode: OutputMode::None,
            output_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.car_count == 0 {
            return Err(ParamsError::NoCars);
        }
        if self.car_count > self.road_length {
            return Err(ParamsError::TooManyCars {
                cars: self.car_count,
                length: self.road_length,
            });
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(ParamsError::Probability(self.p));
        }
        if self.v_max == 0 {
            return Err(ParamsError::MaxVelocity);
        }
        if self.output_stride == 0 {
            return Err(ParamsError::Stride);
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        self.car_count as f64 / self.road_length as f64
    }
}

/// Per-car positions and velocities on a ring road.
///
/// Car `i + 1 (mod N)` is the car directly ahead of car `i`. Cars start in
/// ascending position order; wraparound rotates that order but never permutes
/// it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentState {
    pub positions: Vec<usize>,
    pub velocities: Vec<u32>,
    pub road_length: usize,
}

impl AgentState {
    pub fn car_count(&self) -> usize {
        self.positions.len()
    }

    /// Empty cells between car `i` and the car ahead of it.
    #[inline]
    pub fn gap_ahead(&self, i: usize) -> usize {
        let n = self.positions.len();
        let ahead = self.positions[(i + 1) % n];
        ring_gap(self.positions[i], ahead, self.road_length)
    }
}

/// `(ahead - pos - 1) mod length`; a car alone on the ring sees `length - 1`.
#[inline(always)]
pub(crate) fn ring_gap(pos: usize, ahead: usize, length: usize) -> usize {
    (ahead + 2 * length - pos - 1) % length
}

/// Velocity after acceleration, braking and random deceleration.
#[inline(always)]
pub(crate) fn next_velocity(v: u32, gap: usize, v_max: u32, u: f64, p: f64) -> u32 {
    let v = (v + 1).min(v_max);
    let v = (v as usize).min(gap) as u32;
    if u < p {
        v.saturating_sub(1)
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    Occupied(u32),
}

impl Cell {
    pub fn is_occupied(self) -> bool {
        matches!(self, Cell::Occupied(_))
    }
}

/// Per-cell occupancy of the ring.
///
/// `lead` is the cell holding car 0, the car whose random draw comes first in
/// each step. Cars are numbered in cyclic ascending cell order from there.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridState {
    pub cells: Vec<Cell>,
    pub lead: usize,
}

impl GridState {
    pub fn car_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_occupied()).count()
    }

    pub fn road_length(&self) -> usize {
        self.cells.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub mean_velocity: f64,
    pub density: f64,
    pub flow: f64,
}

/// Cars evenly spaced at `floor(i L / N)`, all at rest.
pub fn init_state(params: &SimParams) -> Result<AgentState, ParamsError> {
    params.validate()?;
    let (l, n) = (params.road_length, params.car_count);
    let positions = (0..n)
        .map(|i| ((i as u128 * l as u128) / n as u128) as usize)
        .collect();
    Ok(AgentState {
        positions,
        velocities: vec![0; n],
        road_length: l,
    })
}

/// One synchronous update of every car, consuming exactly N draws in car
/// order.
pub fn step_serial(state: &AgentState, rng: &mut LcgState, params: &SimParams) -> AgentState {
    let n = state.car_count();
    let l = state.road_length;
    let mut velocities = Vec::with_capacity(n);
    for i in 0..n {
        let u = rng.next_uniform();
        velocities.push(next_velocity(
            state.velocities[i],
            state.gap_ahead(i),
            params.v_max,
            u,
            params.p,
        ));
    }
    let positions = state
        .positions
        .iter()
        .zip(&velocities)
        .map(|(&x, &v)| (x + v as usize) % l)
        .collect();
    AgentState {
        positions,
        velocities,
        road_length: l,
    }
}

pub fn agent_to_grid(state: &AgentState) -> GridState {
    let mut cells = vec![Cell::Empty; state.road_length];
    for (&x, &v) in state.positions.iter().zip(&state.velocities) {
        cells[x] = Cell::Occupied(v);
    }
    GridState {
        cells,
        lead: state.positions[0],
    }
}

pub fn grid_to_agent(state: &GridState) -> AgentState {
    let l = state.cells.len();
    let mut positions = Vec::new();
    let mut velocities = Vec::new();
    for k in 0..l {
        let x = (state.lead + k) % l;
        if let Cell::Occupied(v) = state.cells[x] {
            positions.push(x);
            velocities.push(v);
        }
    }
    AgentState {
        positions,
        velocities,
        road_length: l,
    }
}

/// Same physical update as [`step_serial`], computed on the grid. Gaps are
/// found by scanning forward at most `v_max` cells.
pub fn step_grid_serial(state: &GridState, rng: &mut LcgState, params: &SimParams) -> GridState {
    let l = state.cells.len();
    let mut next = vec![Cell::Empty; l];
    let mut new_lead = state.lead;
    for k in 0..l {
        let x = (state.lead + k) % l;
        let Cell::Occupied(v) = state.cells[x] else {
            continue;
        };
        let u = rng.next_uniform();
        let reach = params.v_max as usize;
        let mut gap = 0;
        while gap < reach && gap < l - 1 && !state.cells[(x + gap + 1) % l].is_occupied() {
            gap += 1;
        }
        let v = next_velocity(v, gap, params.v_max, u, params.p);
        let dest = (x + v as usize) % l;
        next[dest] = Cell::Occupied(v);
        if x == state.lead {
            new_lead = dest;
        }
    }
    GridState {
        cells: next,
        lead: new_lead,
    }
}

pub fn measure(state: &AgentState) -> Observables {
    let n = state.car_count();
    let total: u64 = state.velocities.iter().map(|&v| v as u64).sum();
    let mean_velocity = total as f64 / n as f64;
    let density = n as f64 / state.road_length as f64;
    Observables {
        mean_velocity,
        density,
        flow: density * mean_velocity,
    }
}
