//! `nasch` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 verification failure,
//! 3 I/O failure.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::bench;
use crate::engine::{run_with, DrawOrder, RunConfig};
use crate::io::{read_params, write_ascii, write_pgm, SpacetimeImage};
use crate::model::{measure, OutputMode, SimParams};
use crate::verify::{verify, Divergence};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable consulted for the worker count when `--threads` is
/// absent. It overrides the parameter file.
pub const THREADS_ENV: &str = "NASCH_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "nasch",
    version,
    about = "Reproducible parallel Nagel-Schreckenberg traffic simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write its trajectory.
    Run(RunArgs),
    /// Check that every worker count reproduces the serial trajectory.
    Verify(VerifyArgs),
    /// Measure strong scaling of the stepping loop.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Parameter file (`key = value` lines).
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    /// Worker threads; overrides NASCH_THREADS and the file's `threads`.
    #[arg(long, value_name = "T")]
    threads: Option<usize>,
    /// Output mode: none, ascii or pgm.
    #[arg(long, value_name = "MODE")]
    output: Option<OutputMode>,
    /// Output path (defaults to trajectory.txt or spacetime.pgm).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the file's seed.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Overrides the file's step count.
    #[arg(long, value_name = "T")]
    steps: Option<u64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    /// Check worker counts 1 through W.
    #[arg(long, value_name = "W")]
    max_threads: usize,
    /// Deliberately break the engine to exercise the checker.
    #[arg(long, hide = true, value_name = "FAULT")]
    fault: Option<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    /// Comma-separated worker counts, e.g. 1,2,4,8.
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    threads_list: Vec<usize>,
    /// Timed runs per worker count; the minimum is reported.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Disable trajectory recording during the timed runs.
    #[arg(long)]
    no_output: bool,
    /// Also write the CSV to this file.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

/// Reason a command stopped, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// `threads_env` is the value of [`THREADS_ENV`], if set.
pub fn main_with(
    args: impl IntoIterator<Item = OsString>,
    threads_env: Option<&str>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            };
            let text = err.render().to_string();
            let _ = if err.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, threads_env, stdout, stderr),
        Command::Verify(args) => cmd_verify(args, stdout),
        Command::Bench(args) => cmd_bench(args, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let _ = writeln!(stderr, "nasch: {}", failure.message);
            failure.code
        }
    }
}

fn load_params(path: &Path) -> Result<(SimParams, usize), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    read_params(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// `--threads` beats the environment, which beats the parameter file.
pub fn resolve_threads(
    flag: Option<usize>,
    env: Option<&str>,
    file: usize,
) -> Result<usize, String> {
    let threads = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(raw)) => raw
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_ENV}=`{raw}` is not a worker count"))?,
        (None, None) => file,
    };
    if threads == 0 {
        return Err("worker count must be at least 1".into());
    }
    Ok(threads)
}

/// Physical core count from /proc/cpuinfo, when it can be determined.
pub fn physical_cores() -> Option<usize> {
    let info = fs::read_to_string("/proc/cpuinfo").ok()?;
    let mut cores = std::collections::BTreeSet::new();
    let mut package = None;
    for line in info.lines() {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        match key.trim() {
            "physical id" => package = Some(value.trim().to_string()),
            "core id" => {
                cores.insert((package.clone(), value.trim().to_string()));
            }
            _ => {}
        }
    }
    (!cores.is_empty()).then_some(cores.len())
}

fn warn_oversubscription(workers: usize, stderr: &mut dyn Write) {
    if let Some(cores) = physical_cores() {
        if workers > cores {
            let _ = writeln!(
                stderr,
                "nasch: warning: {workers} workers exceed {cores} physical cores; timings will be hard to interpret"
            );
        }
    }
}

fn cmd_run(
    args: RunArgs,
    threads_env: Option<&str>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let (mut params, file_threads) = load_params(&args.params)?;
    let workers =
        resolve_threads(args.threads, threads_env, file_threads).map_err(Failure::usage)?;
    if let Some(mode) = args.output {
        params.output_mode = mode;
    }
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(steps) = args.steps {
        params.steps = steps;
    }
    warn_oversubscription(workers, stderr);

    let result =
        run_with(&params, RunConfig::new(workers)).map_err(|e| Failure::usage(e.to_string()))?;

    let target = match params.output_mode {
        OutputMode::None => None,
        OutputMode::Ascii => Some(args.out.unwrap_or_else(|| PathBuf::from("trajectory.txt"))),
        OutputMode::Pgm => Some(args.out.unwrap_or_else(|| PathBuf::from("spacetime.pgm"))),
    };
    if let Some(path) = &target {
        let file = fs::File::create(path).map_err(|e| Failure::io(path, e))?;
        let mut sink = BufWriter::new(file);
        let written = match params.output_mode {
            OutputMode::Ascii => write_ascii(&result.frames, &mut sink),
            OutputMode::Pgm => write_pgm(
                &SpacetimeImage::from_frames(&result.frames, params.road_length),
                &mut sink,
            ),
            OutputMode::None => Ok(()),
        };
        written
            .and_then(|()| sink.flush())
            .map_err(|e| Failure::io(path, e))?;
    }

    let obs = measure(&result.final_state);
    let mut summary = format!(
        "steps={} workers={} mean_velocity={:.6} density={:.6} flow={:.6} draws={} checksum={:016x}",
        params.steps, workers, obs.mean_velocity, obs.density, obs.flow, result.draws_consumed, result.checksum
    );
    if let Some(path) = target {
        summary.push_str(&format!(" output={}", path.display()));
    }
    writeln!(stdout, "{summary}").map_err(|e| Failure::io(Path::new("<stdout>"), e))
}

fn cmd_verify(args: VerifyArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (params, _) = load_params(&args.params)?;
    if args.max_threads == 0 {
        return Err(Failure::usage("--max-threads must be at least 1"));
    }
    let draw_order = match args.fault.as_deref() {
        None => DrawOrder::Ascending,
        Some("reverse-draws") => DrawOrder::ReversedWithinBlock,
        Some(other) => return Err(Failure::usage(format!("unknown fault `{other}`"))),
    };
    let config = RunConfig {
        workers: 1,
        draw_order,
    };
    let report =
        verify(&params, args.max_threads, config).map_err(|e| Failure::usage(e.to_string()))?;

    let out = |stdout: &mut dyn Write, line: String| {
        writeln!(stdout, "{line}").map_err(|e| Failure::io(Path::new("<stdout>"), e))
    };
    out(
        stdout,
        format!("serial agent  checksum={:016x}", report.reference),
    )?;
    out(
        stdout,
        format!("serial grid   checksum={:016x}", report.grid),
    )?;
    for &(workers, checksum) in &report.engine {
        let mark = if checksum == report.reference {
            "ok"
        } else {
            "MISMATCH"
        };
        out(
            stdout,
            format!("workers={workers:<4} checksum={checksum:016x} {mark}"),
        )?;
    }
    match report.divergence {
        None => {
            out(stdout, "PASS: all checksums identical".to_string())?;
            Ok(())
        }
        Some(div) => {
            let detail = match div {
                Divergence::Grid { step } => {
                    format!("grid path diverges from agent path at step {step}")
                }
                Divergence::Workers { workers, step } => {
                    format!("{workers} workers diverge from the serial trajectory at step {step}")
                }
            };
            out(stdout, format!("FAIL: {detail}"))?;
            Err(Failure {
                code: EXIT_VERIFY,
                message: detail,
            })
        }
    }
}

fn cmd_bench(
    args: BenchArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let (mut params, _) = load_params(&args.params)?;
    if args.threads_list.contains(&0) {
        return Err(Failure::usage("--threads-list entries must be at least 1"));
    }
    if args.repeats == 0 {
        return Err(Failure::usage("--repeats must be at least 1"));
    }
    if args.no_output {
        params.output_mode = OutputMode::None;
    }
    if let Some(&most) = args.threads_list.iter().max() {
        warn_oversubscription(most, stderr);
    }
    let report = bench(&params, &args.threads_list, args.repeats)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let csv = report.to_csv();
    let text = format!("{}\n{csv}", report.to_table());
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
    if let Some(path) = &args.csv {
        fs::write(path, &csv).map_err(|e| Failure::io(path, e))?;
    }
    if report.consistent() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: "checksums differ across worker counts".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_precedence() {
        assert_eq!(resolve_threads(Some(3), Some("5"), 7), Ok(3));
        assert_eq!(resolve_threads(None, Some("5"), 7), Ok(5));
        assert_eq!(resolve_threads(None, None, 7), Ok(7));
        assert!(resolve_threads(Some(0), None, 7).is_err());
        assert!(resolve_threads(None, Some("lots"), 7).is_err());
    }
}
