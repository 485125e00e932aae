//! Reproducibility check across worker counts and representations.

use crate::engine::{run_with, RunConfig, TrajectoryHasher};
use crate::model::{
    agent_to_grid, grid_to_agent, init_state, step_grid_serial, step_serial, OutputMode,
    ParamsError, SimParams,
};
use crate::prng::LcgState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    /// The grid path disagrees with the agent path after `step` steps.
    Grid { step: u64 },
    /// The engine with `workers` threads disagrees with the serial reference
    /// after `step` steps (0 means the initial state).
    Workers { workers: usize, step: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    /// Checksum of the serial agent-path trajectory.
    pub reference: u64,
    pub grid: u64,
    /// `(workers, checksum)` for every worker count tried.
    pub engine: Vec<(usize, u64)>,
    pub divergence: Option<Divergence>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Running checksum after each prefix of the serial trajectory: entry `k`
/// covers states `0..=k`.
fn serial_prefix_digests(params: &SimParams) -> Result<Vec<u64>, ParamsError> {
    let mut state = init_state(params)?;
    let mut rng = LcgState::seeded(params.seed);
    let mut hasher = TrajectoryHasher::new();
    hasher.write_state(&state);
    let mut digests = vec![hasher.finish()];
    for _ in 0..params.steps {
        state = step_serial(&state, &mut rng, params);
        hasher.write_state(&state);
        digests.push(hasher.finish());
    }
    Ok(digests)
}

/// Steps the grid path alongside the agent path; returns its checksum and the
/// first step at which the two disagree.
fn grid_check(params: &SimParams) -> Result<(u64, Option<u64>), ParamsError> {
    let mut agent = init_state(params)?;
    let mut grid = agent_to_grid(&agent);
    let mut agent_rng = LcgState::seeded(params.seed);
    let mut grid_rng = agent_rng;
    let mut hasher = TrajectoryHasher::new();
    hasher.write_state(&grid_to_agent(&grid));
    let mut first_bad = None;
    for t in 1..=params.steps {
        agent = step_serial(&agent, &mut agent_rng, params);
        grid = step_grid_serial(&grid, &mut grid_rng, params);
        let from_grid = grid_to_agent(&grid);
        if first_bad.is_none() && from_grid != agent {
            first_bad = Some(t);
        }
        hasher.write_state(&from_grid);
    }
    Ok((hasher.finish(), first_bad))
}

/// Runs workers `1..=max_workers` plus both serial paths and compares every
/// checksum with the serial agent path. On a mismatch, the first divergent
/// step is located by bisecting over truncated runs.
pub fn verify(
    params: &SimParams,
    max_workers: usize,
    config: RunConfig,
) -> Result<VerifyReport, ParamsError> {
    let mut params = params.clone();
    params.output_mode = OutputMode::None;
    let prefixes = serial_prefix_digests(&params)?;
    let reference = *prefixes.last().expect("at least the initial state");
    let (grid, grid_bad) = grid_check(&params)?;

    let mut engine = Vec::with_capacity(max_workers);
    let mut divergence = grid_bad.map(|step| Divergence::Grid { step });
    for workers in 1..=max_workers {
        let cfg = RunConfig { workers, ..config };
        let checksum = run_with(&params, cfg)?.checksum;
        engine.push((workers, checksum));
        if checksum != reference && divergence.is_none() {
            let step = first_divergent_step(&params, cfg, &prefixes)?;
            divergence = Some(Divergence::Workers { workers, step });
        }
    }
    Ok(VerifyReport {
        reference,
        grid,
        engine,
        divergence,
    })
}

fn first_divergent_step(
    params: &SimParams,
    config: RunConfig,
    prefixes: &[u64],
) -> Result<u64, ParamsError> {
    // Smallest k with a mismatching prefix checksum; k = steps is known bad.
    let (mut lo, mut hi) = (0u64, params.steps);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let truncated = SimParams {
            steps: mid,
            ..params.clone()
        };
        if run_with(&truncated, config)?.checksum != prefixes[mid as usize] {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::DrawOrder;

    #[test]
    fn healthy_engine_passes() {
        let params = SimParams::canonical(60, 3);
        let report = verify(&params, 4, RunConfig::new(1)).unwrap();
        assert!(report.passed());
        assert_eq!(report.grid, report.reference);
        assert!(report.engine.iter().all(|&(_, c)| c == report.reference));
    }

    #[test]
    fn reversed_draws_are_localized() {
        let params = SimParams::canonical(60, 3);
        let config = RunConfig {
            workers: 1,
            draw_order: DrawOrder::ReversedWithinBlock,
        };
        let report = verify(&params, 3, config).unwrap();
        // Reversal changes which car receives which draw from the first step.
        assert_eq!(
            report.divergence,
            Some(Divergence::Workers {
                workers: 1,
                step: 1
            })
        );
    }
}
