//! C ABI for the `nasch` simulator.
//!
//! Every fallible call returns a [`NaschStatus`]; on failure a description is
//! available from [`nasch_last_error_message`] on the same thread. Simulation
//! handles are opaque and must be released with [`nasch_sim_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nasch::io::{read_params, write_ascii, write_pgm, SpacetimeImage};
use nasch::{
    init_state, make_partition, measure, run, step_parallel, step_serial, AgentState, LcgState,
    OutputMode, SimParams,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaschStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    InvalidArgument = 3,
    BufferTooSmall = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaschOutputMode {
    None = 0,
    Ascii = 1,
    Pgm = 2,
}

/// Experiment description; mirrors the parameter file keys.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaschParams {
    pub road_length: u64,
    pub car_count: u64,
    pub v_max: u32,
    pub p: f64,
    pub steps: u64,
    pub seed: u64,
    /// One of the `NaschOutputMode` values.
    pub output_mode: u32,
    pub output_stride: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NaschObservables {
    pub mean_velocity: f64,
    pub density: f64,
    pub flow: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NaschRunSummary {
    pub checksum: u64,
    pub draws_consumed: u64,
    pub observables: NaschObservables,
}

/// Opaque simulation handle stepping one trajectory.
pub struct NaschSim {
    params: SimParams,
    state: AgentState,
    seed: LcgState,
    rng: LcgState,
    step: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: NaschStatus, msg: impl Into<String>) -> NaschStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> NaschStatus) -> NaschStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(NaschStatus::Panic, "internal panic"),
    }
}

impl From<OutputMode> for NaschOutputMode {
    fn from(mode: OutputMode) -> Self {
        match mode {
            OutputMode::None => NaschOutputMode::None,
            OutputMode::Ascii => NaschOutputMode::Ascii,
            OutputMode::Pgm => NaschOutputMode::Pgm,
        }
    }
}

fn output_mode(raw: u32) -> Result<OutputMode, NaschStatus> {
    match raw {
        0 => Ok(OutputMode::None),
        1 => Ok(OutputMode::Ascii),
        2 => Ok(OutputMode::Pgm),
        other => Err(fail(
            NaschStatus::InvalidParams,
            format!("unknown output mode {other}"),
        )),
    }
}

impl From<&SimParams> for NaschParams {
    fn from(p: &SimParams) -> Self {
        NaschParams {
            road_length: p.road_length as u64,
            car_count: p.car_count as u64,
            v_max: p.v_max,
            p: p.p,
            steps: p.steps,
            seed: p.seed,
            output_mode: NaschOutputMode::from(p.output_mode) as u32,
            output_stride: p.output_stride,
        }
    }
}

fn to_sim_params(p: &NaschParams) -> Result<SimParams, NaschStatus> {
    let size = |v: u64| {
        usize::try_from(v)
            .map_err(|_| fail(NaschStatus::InvalidParams, "size exceeds address space"))
    };
    let params = SimParams {
        road_length: size(p.road_length)?,
        car_count: size(p.car_count)?,
        v_max: p.v_max,
        p: p.p,
        steps: p.steps,
        seed: p.seed,
        output_mode: output_mode(p.output_mode)?,
        output_stride: p.output_stride,
    };
    params
        .validate()
        .map_err(|e| fail(NaschStatus::InvalidParams, e.to_string()))?;
    Ok(params)
}

fn summarize(result: &nasch::RunResult) -> NaschRunSummary {
    let obs = measure(&result.final_state);
    NaschRunSummary {
        checksum: result.checksum,
        draws_consumed: result.draws_consumed,
        observables: NaschObservables {
            mean_velocity: obs.mean_velocity,
            density: obs.density,
            flow: obs.flow,
        },
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nasch_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nasch_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Fills `out` with the canonical parameters (1000 cells, 200 cars, p = 0.13,
/// v_max = 5) for the given step count and seed.
///
/// # Safety
/// `out` must be null or point to writable memory for one `NaschParams`.
#[no_mangle]
pub unsafe extern "C" fn nasch_params_canonical(
    steps: u64,
    seed: u64,
    out: *mut NaschParams,
) -> NaschStatus {
    if out.is_null() {
        return fail(NaschStatus::NullPointer, "out is null");
    }
    *out = (&SimParams::canonical(steps, seed)).into();
    NaschStatus::Ok
}

/// Parses parameter-file text. `threads` may be null.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be writable;
/// `threads` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nasch_params_parse(
    text: *const c_char,
    out: *mut NaschParams,
    threads: *mut u32,
) -> NaschStatus {
    if text.is_null() || out.is_null() {
        return fail(NaschStatus::NullPointer, "text or out is null");
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        return fail(NaschStatus::InvalidArgument, "parameter text is not UTF-8");
    };
    guard(|| match read_params(text) {
        Ok((params, t)) => {
            *out = (&params).into();
            if !threads.is_null() {
                *threads = u32::try_from(t).unwrap_or(u32::MAX);
            }
            NaschStatus::Ok
        }
        Err(e) => fail(NaschStatus::InvalidParams, e.to_string()),
    })
}

/// Runs a whole simulation with `workers` threads.
///
/// # Safety
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nasch_run(
    params: *const NaschParams,
    workers: u32,
    out: *mut NaschRunSummary,
) -> NaschStatus {
    if params.is_null() || out.is_null() {
        return fail(NaschStatus::NullPointer, "params or out is null");
    }
    if workers == 0 {
        return fail(NaschStatus::InvalidArgument, "workers must be at least 1");
    }
    let params = match to_sim_params(&*params) {
        Ok(p) => SimParams {
            output_mode: OutputMode::None,
            ..p
        },
        Err(status) => return status,
    };
    guard(|| match run(&params, workers as usize) {
        Ok(result) => {
            *out = summarize(&result);
            NaschStatus::Ok
        }
        Err(e) => fail(NaschStatus::InvalidParams, e.to_string()),
    })
}

/// Runs a simulation and writes the trajectory to `path` in the params'
/// output mode. `out` may be null.
///
/// # Safety
/// `params` must be readable, `path` a valid NUL-terminated string, `out`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn nasch_run_to_file(
    params: *const NaschParams,
    workers: u32,
    path: *const c_char,
    out: *mut NaschRunSummary,
) -> NaschStatus {
    if params.is_null() || path.is_null() {
        return fail(NaschStatus::NullPointer, "params or path is null");
    }
    if workers == 0 {
        return fail(NaschStatus::InvalidArgument, "workers must be at least 1");
    }
    let params = match to_sim_params(&*params) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return fail(NaschStatus::InvalidArgument, "path is not UTF-8");
    };
    guard(|| {
        let result = match run(&params, workers as usize) {
            Ok(r) => r,
            Err(e) => return fail(NaschStatus::InvalidParams, e.to_string()),
        };
        let written = File::create(path).and_then(|file| {
            let mut sink = BufWriter::new(file);
            match params.output_mode {
                OutputMode::Ascii => write_ascii(&result.frames, &mut sink)?,
                OutputMode::Pgm => write_pgm(
                    &SpacetimeImage::from_frames(&result.frames, params.road_length),
                    &mut sink,
                )?,
                OutputMode::None => {}
            }
            sink.flush()
        });
        if let Err(e) = written {
            return fail(NaschStatus::Io, format!("{path}: {e}"));
        }
        if !out.is_null() {
            *out = summarize(&result);
        }
        NaschStatus::Ok
    })
}

/// Creates a handle at the initial condition.
///
/// # Safety
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nasch_sim_new(
    params: *const NaschParams,
    out: *mut *mut NaschSim,
) -> NaschStatus {
    if params.is_null() || out.is_null() {
        return fail(NaschStatus::NullPointer, "params or out is null");
    }
    let params = match to_sim_params(&*params) {
        Ok(p) => p,
        Err(status) => return status,
    };
    guard(|| match init_state(&params) {
        Ok(state) => {
            let seed = LcgState::seeded(params.seed);
            *out = Box::into_raw(Box::new(NaschSim {
                params,
                state,
                seed,
                rng: seed,
                step: 0,
            }));
            NaschStatus::Ok
        }
        Err(e) => fail(NaschStatus::InvalidParams, e.to_string()),
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from [`nasch_sim_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nasch_sim_free(sim: *mut NaschSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances the handle by `steps` steps using `workers` threads (1 selects
/// the serial path). The result does not depend on `workers`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nasch_sim_step(
    sim: *mut NaschSim,
    steps: u64,
    workers: u32,
) -> NaschStatus {
    let Some(sim) = sim.as_mut() else {
        return fail(NaschStatus::NullPointer, "sim is null");
    };
    if workers == 0 {
        return fail(NaschStatus::InvalidArgument, "workers must be at least 1");
    }
    guard(|| {
        let partition = make_partition(sim.params.car_count, workers as usize);
        for _ in 0..steps {
            sim.state = if workers == 1 {
                step_serial(&sim.state, &mut sim.rng, &sim.params)
            } else {
                let next = step_parallel(&sim.state, &sim.seed, sim.step, &partition, &sim.params);
                sim.rng.jump(sim.params.car_count as u64);
                next
            };
            sim.step += 1;
        }
        NaschStatus::Ok
    })
}

/// Steps taken so far.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nasch_sim_current_step(sim: *const NaschSim) -> u64 {
    sim.as_ref().map_or(0, |s| s.step)
}

/// Number of cars; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nasch_sim_car_count(sim: *const NaschSim) -> usize {
    sim.as_ref().map_or(0, |s| s.state.car_count())
}

/// Copies car positions into `buf`, which must hold at least car-count
/// entries.
///
/// # Safety
/// `sim` must be a live handle and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn nasch_sim_positions(
    sim: *const NaschSim,
    buf: *mut u64,
    len: usize,
) -> NaschStatus {
    let Some(sim) = sim.as_ref() else {
        return fail(NaschStatus::NullPointer, "sim is null");
    };
    if buf.is_null() {
        return fail(NaschStatus::NullPointer, "buf is null");
    }
    let n = sim.state.car_count();
    if len < n {
        return fail(
            NaschStatus::BufferTooSmall,
            format!("need {n} entries, got {len}"),
        );
    }
    let dst = std::slice::from_raw_parts_mut(buf, n);
    for (d, &x) in dst.iter_mut().zip(&sim.state.positions) {
        *d = x as u64;
    }
    NaschStatus::Ok
}

/// Copies car velocities into `buf`.
///
/// # Safety
/// `sim` must be a live handle and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn nasch_sim_velocities(
    sim: *const NaschSim,
    buf: *mut u32,
    len: usize,
) -> NaschStatus {
    let Some(sim) = sim.as_ref() else {
        return fail(NaschStatus::NullPointer, "sim is null");
    };
    if buf.is_null() {
        return fail(NaschStatus::NullPointer, "buf is null");
    }
    let n = sim.state.car_count();
    if len < n {
        return fail(
            NaschStatus::BufferTooSmall,
            format!("need {n} entries, got {len}"),
        );
    }
    std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&sim.state.velocities);
    NaschStatus::Ok
}

/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nasch_sim_observables(
    sim: *const NaschSim,
    out: *mut NaschObservables,
) -> NaschStatus {
    let Some(sim) = sim.as_ref() else {
        return fail(NaschStatus::NullPointer, "sim is null");
    };
    if out.is_null() {
        return fail(NaschStatus::NullPointer, "out is null");
    }
    let obs = measure(&sim.state);
    *out = NaschObservables {
        mean_velocity: obs.mean_velocity,
        density: obs.density,
        flow: obs.flow,
    };
    NaschStatus::Ok
}

/// Generator state for `seed` under the default multiplier.
#[no_mangle]
pub extern "C" fn nasch_lcg_seed(seed: u64) -> u64 {
    LcgState::seeded(seed).state()
}

/// State reached from `state` after `k` draws of the default generator.
/// `state` is normalized like a seed first (reduced modulo 2^31 - 1, zero
/// mapped to 1).
#[no_mangle]
pub extern "C" fn nasch_lcg_jump(state: u64, k: u64) -> u64 {
    LcgState::seeded(state).jumped(k).state()
}
