//! Multi-worker stepping that reproduces the serial trajectory bit for bit.
//!
//! Car `i` at step `t` always consumes draw `t * N + i` of the shared
//! sequence. A worker owning cars `[lo, hi)` fast-forwards a private copy of
//! the generator to `t * N + lo`, so which worker happens to draw a number
//! never changes the number drawn.

use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};
use std::sync::Barrier;
use std::thread;

use crate::model::{
    init_state, next_velocity, ring_gap, AgentState, OutputMode, ParamsError, SimParams,
};
use crate::prng::LcgState;

pub const FNV_OFFSET_BASIS: u64 = 14_695_981_039_346_656_037;
pub const FNV_PRIME: u64 = 1_099_511_628_211;

/// Contiguous half-open car ranges, one per worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<(usize, usize)>,
}

impl Partition {
    pub fn workers(&self) -> usize {
        self.blocks.len()
    }
}

/// Block `b` is `[floor(b N / W), floor((b + 1) N / W))`.
pub fn make_partition(car_count: usize, workers: usize) -> Partition {
    assert!(workers >= 1, "need at least one worker");
    let bound = |b: usize| ((b as u128 * car_count as u128) / workers as u128) as usize;
    Partition {
        blocks: (0..workers).map(|b| (bound(b), bound(b + 1))).collect(),
    }
}

/// Streaming FNV-1a over each state's positions then velocities, every value
/// widened to a little-endian `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryHasher {
    hash: u64,
}

impl Default for TrajectoryHasher {
    fn default() -> Self {
        TrajectoryHasher {
            hash: FNV_OFFSET_BASIS,
        }
    }
}

impl TrajectoryHasher {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn write_u64(&mut self, value: u64) {
        let mut h = self.hash;
        for byte in value.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        self.hash = h;
    }

    pub fn write_row<P, V>(&mut self, positions: P, velocities: V)
    where
        P: IntoIterator<Item = u64>,
        V: IntoIterator<Item = u64>,
    {
        positions.into_iter().for_each(|x| self.write_u64(x));
        velocities.into_iter().for_each(|v| self.write_u64(v));
    }

    pub fn write_state(&mut self, state: &AgentState) {
        self.write_row(
            state.positions.iter().map(|&x| x as u64),
            state.velocities.iter().map(|&v| v as u64),
        );
    }

    pub fn finish(&self) -> u64 {
        self.hash
    }
}

/// Digest of a whole trajectory, one row per recorded state.
pub fn checksum_trajectory<'a, I>(rows: I) -> u64
where
    I: IntoIterator<Item = (&'a [u64], &'a [u64])>,
{
    let mut hasher = TrajectoryHasher::new();
    for (positions, velocities) in rows {
        hasher.write_row(positions.iter().copied(), velocities.iter().copied());
    }
    hasher.finish()
}

/// Snapshot of the agent state at the start of step `step`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub step: u64,
    pub positions: Vec<usize>,
    pub velocities: Vec<u32>,
}

/// Fast-forward work done by all workers over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JumpStats {
    /// Number of non-trivial jumps executed.
    pub jumps: u64,
    /// Longest span of any single jump after the initial positioning.
    pub max_span: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_state: AgentState,
    pub frames: Vec<Frame>,
    /// Digest of states `0..=T` (initial state plus the state after every
    /// step), independent of the output mode.
    pub checksum: u64,
    pub draws_consumed: u64,
    pub jump_stats: JumpStats,
}

/// Order in which a worker hands its block's draws to its cars.
///
/// Anything but `Ascending` breaks reproducibility; it exists so that the
/// verification tooling can be exercised against a known-bad engine.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DrawOrder {
    #[default]
    Ascending,
    ReversedWithinBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub workers: usize,
    #[doc(hidden)]
    pub draw_order: DrawOrder,
}

impl RunConfig {
    pub fn new(workers: usize) -> Self {
        RunConfig {
            workers,
            draw_order: DrawOrder::Ascending,
        }
    }
}

/// Velocities for cars `lo..hi` after phases 1-3, with `rng` positioned at the
/// draw of car `lo`.
#[allow(clippy::too_many_arguments)]
fn block_velocities<F, G>(
    lo: usize,
    hi: usize,
    position: F,
    velocity: G,
    rng: &mut LcgState,
    params: &SimParams,
    order: DrawOrder,
    out: &mut [u32],
) where
    F: Fn(usize) -> usize,
    G: Fn(usize) -> u32,
{
    let n = params.car_count;
    let l = params.road_length;
    let len = hi - lo;
    for k in 0..len {
        let u = rng.next_uniform();
        let i = match order {
            DrawOrder::Ascending => lo + k,
            DrawOrder::ReversedWithinBlock => hi - 1 - k,
        };
        let gap = ring_gap(position(i), position((i + 1) % n), l);
        out[i - lo] = next_velocity(velocity(i), gap, params.v_max, u, params.p);
    }
}

/// One step with `partition.workers()` threads, each positioning its own
/// generator copy by jumping from `seed_state` (draw index 0) to `t N + lo`.
pub fn step_parallel(
    state: &AgentState,
    seed_state: &LcgState,
    t: u64,
    partition: &Partition,
    params: &SimParams,
) -> AgentState {
    let n = state.car_count();
    let l = state.road_length;
    let mut velocities = vec![0u32; n];
    // Phases 1-3: positions are only read.
    thread::scope(|scope| {
        let mut rest = velocities.as_mut_slice();
        for &(lo, hi) in &partition.blocks {
            let (chunk, tail) = rest.split_at_mut(hi - lo);
            rest = tail;
            scope.spawn(move || {
                let mut rng = seed_state.jumped(t * n as u64 + lo as u64);
                block_velocities(
                    lo,
                    hi,
                    |i| state.positions[i],
                    |i| state.velocities[i],
                    &mut rng,
                    params,
                    DrawOrder::Ascending,
                    chunk,
                );
            });
        }
    });
    // Phase 4, after every velocity is final.
    let mut positions = vec![0usize; n];
    thread::scope(|scope| {
        let mut rest = positions.as_mut_slice();
        for &(lo, hi) in &partition.blocks {
            let (chunk, tail) = rest.split_at_mut(hi - lo);
            rest = tail;
            let velocities = &velocities;
            scope.spawn(move || {
                for (k, x) in chunk.iter_mut().enumerate() {
                    *x = (state.positions[lo + k] + velocities[lo + k] as usize) % l;
                }
            });
        }
    });
    AgentState {
        positions,
        velocities,
        road_length: l,
    }
}

/// Runs `params.steps` steps from the initial condition with `workers`
/// threads.
pub fn run(params: &SimParams, workers: usize) -> Result<RunResult, ParamsError> {
    run_with(params, RunConfig::new(workers))
}

struct WorkerReport {
    draws: u64,
    jumps: u64,
    max_span: u64,
    leader: Option<(u64, Vec<Frame>)>,
}

pub fn run_with(params: &SimParams, config: RunConfig) -> Result<RunResult, ParamsError> {
    let initial = init_state(params)?;
    let workers = config.workers.max(1);
    let n = params.car_count;
    let l = params.road_length;
    let steps = params.steps;
    let stride = params.output_stride;
    let record = params.output_mode != OutputMode::None;
    let partition = make_partition(n, workers);
    let seed = LcgState::seeded(params.seed);

    let positions: Vec<AtomicUsize> = initial
        .positions
        .iter()
        .map(|&x| AtomicUsize::new(x))
        .collect();
    let velocities: Vec<AtomicU32> = initial
        .velocities
        .iter()
        .map(|&v| AtomicU32::new(v))
        .collect();
    let barrier = Barrier::new(workers);

    let reports: Vec<WorkerReport> = thread::scope(|scope| {
        let handles: Vec<_> = partition
            .blocks
            .iter()
            .enumerate()
            .map(|(w, &(lo, hi))| {
                let (positions, velocities, barrier) = (&positions, &velocities, &barrier);
                scope.spawn(move || {
                    let is_leader = w == 0;
                    let mut hasher = TrajectoryHasher::new();
                    let mut frames = Vec::new();
                    let observe =
                        |t: u64, hasher: &mut TrajectoryHasher, frames: &mut Vec<Frame>| {
                            hasher.write_row(
                                positions.iter().map(|x| x.load(Ordering::Relaxed) as u64),
                                velocities.iter().map(|v| v.load(Ordering::Relaxed) as u64),
                            );
                            if record && t < steps && t.is_multiple_of(stride) {
                                frames.push(Frame {
                                    step: t,
                                    positions: positions
                                        .iter()
                                        .map(|x| x.load(Ordering::Relaxed))
                                        .collect(),
                                    velocities: velocities
                                        .iter()
                                        .map(|v| v.load(Ordering::Relaxed))
                                        .collect(),
                                });
                            }
                        };

                    let mut report = WorkerReport {
                        draws: 0,
                        jumps: 0,
                        max_span: 0,
                        leader: None,
                    };
                    let mut rng = seed;
                    if lo > 0 {
                        rng.jump(lo as u64);
                        report.jumps += 1;
                    }
                    // Distance from the end of this block to the start of the
                    // same block one step later.
                    let hop = (n - (hi - lo)) as u64;
                    let hop_coeffs = rng.jump_coefficients(hop);
                    let mut scratch = vec![0u32; hi - lo];

                    for t in 0..steps {
                        if is_leader {
                            observe(t, &mut hasher, &mut frames);
                        }
                        let before = rng.draws();
                        block_velocities(
                            lo,
                            hi,
                            |i| positions[i].load(Ordering::Relaxed),
                            |i| velocities[i].load(Ordering::Relaxed),
                            &mut rng,
                            params,
                            config.draw_order,
                            &mut scratch,
                        );
                        report.draws += rng.draws() - before;
                        // Every velocity (and the leader's snapshot) is
                        // complete before any car moves.
                        barrier.wait();
                        for (k, &v) in scratch.iter().enumerate() {
                            let i = lo + k;
                            let x = positions[i].load(Ordering::Relaxed);
                            positions[i].store((x + v as usize) % l, Ordering::Relaxed);
                            velocities[i].store(v, Ordering::Relaxed);
                        }
                        if hop > 0 {
                            rng.apply(&hop_coeffs);
                            report.jumps += 1;
                            report.max_span = report.max_span.max(hop);
                        }
                        barrier.wait();
                    }
                    if is_leader {
                        observe(steps, &mut hasher, &mut frames);
                        report.leader = Some((hasher.finish(), frames));
                    }
                    report
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    let mut draws_consumed = 0;
    let mut jump_stats = JumpStats::default();
    let mut leader = None;
    for report in reports {
        draws_consumed += report.draws;
        jump_stats.jumps += report.jumps;
        jump_stats.max_span = jump_stats.max_span.max(report.max_span);
        if report.leader.is_some() {
            leader = report.leader;
        }
    }
    let (checksum, frames) = leader.expect("leader report");
    let final_state = AgentState {
        positions: positions.into_iter().map(AtomicUsize::into_inner).collect(),
        velocities: velocities.into_iter().map(AtomicU32::into_inner).collect(),
        road_length: l,
    };
    Ok(RunResult {
        final_state,
        frames,
        checksum,
        draws_consumed,
        jump_stats,
    })
}
