//! Strong-scaling measurement of the stepping loop.

use std::fmt::Write as _;
use std::time::Instant;

use crate::engine::{run_with, RunConfig, RunResult};
use crate::model::{ParamsError, SimParams};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub workers: usize,
    /// Minimum over repeats, seconds.
    pub wall_time_s: f64,
    pub speedup: f64,
    pub efficiency: f64,
    pub checksum: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

pub const CSV_HEADER: &str = "workers,wall_time_s,speedup,efficiency,checksum";

impl BenchReport {
    /// True when every row carries the same checksum.
    pub fn consistent(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].checksum == w[1].checksum)
    }

    fn cells(row: &BenchRow) -> [String; 5] {
        [
            row.workers.to_string(),
            format!("{:.6}", row.wall_time_s),
            format!("{:.4}", row.speedup),
            format!("{:.4}", row.efficiency),
            format!("{:016x}", row.checksum),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&Self::cells(row).join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>8}  {:>12}  {:>8}  {:>10}  {:>16}",
            "workers", "wall_time_s", "speedup", "efficiency", "checksum"
        );
        for row in &self.rows {
            let [w, t, s, e, c] = Self::cells(row);
            let _ = writeln!(out, "{w:>8}  {t:>12}  {s:>8}  {e:>10}  {c:>16}");
        }
        let status = if self.consistent() {
            "OK: checksums identical across worker counts"
        } else {
            "FAILED: checksums differ across worker counts"
        };
        out.push_str(status);
        out.push('\n');
        out
    }
}

/// Times `repeats` runs per worker count and keeps the fastest. The baseline
/// for speedup is the single-worker time, which is measured even when 1 is not
/// in `worker_counts`.
pub fn bench(
    params: &SimParams,
    worker_counts: &[usize],
    repeats: usize,
) -> Result<BenchReport, ParamsError> {
    params.validate()?;
    let repeats = repeats.max(1);
    let mut counts: Vec<usize> = worker_counts.to_vec();
    if !counts.contains(&1) {
        counts.insert(0, 1);
    }
    let mut timings = Vec::with_capacity(counts.len());
    for &workers in &counts {
        let mut best = f64::INFINITY;
        let mut last: Option<RunResult> = None;
        for _ in 0..repeats {
            let start = Instant::now();
            let result = run_with(params, RunConfig::new(workers))?;
            best = best.min(start.elapsed().as_secs_f64());
            last = Some(result);
        }
        timings.push((workers, best, last.expect("at least one repeat").checksum));
    }
    let base = timings
        .iter()
        .find(|(w, _, _)| *w == 1)
        .map(|&(_, t, _)| t)
        .expect("baseline measured");
    let rows = timings
        .into_iter()
        .map(|(workers, wall_time_s, checksum)| {
            let speedup = base / wall_time_s;
            BenchRow {
                workers,
                wall_time_s,
                speedup,
                efficiency: speedup / workers as f64,
                checksum,
            }
        })
        .collect();
    Ok(BenchReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_worker_list() {
        let params = SimParams::canonical(20, 1);
        let report = bench(&params, &[1], 2).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].speedup, 1.0);
        assert_eq!(report.rows[0].efficiency, 1.0);
        assert!(report.consistent());
    }

    #[test]
    fn baseline_added() {
        let params = SimParams::canonical(10, 1);
        let report = bench(&params, &[2, 3], 1).unwrap();
        let workers: Vec<_> = report.rows.iter().map(|r| r.workers).collect();
        assert_eq!(workers, vec![1, 2, 3]);
        assert!(report.consistent());
    }

    #[test]
    fn csv_and_table_agree() {
        let report = BenchReport {
            rows: vec![
                BenchRow {
                    workers: 1,
                    wall_time_s: 0.5,
                    speedup: 1.0,
                    efficiency: 1.0,
                    checksum: 0xabc,
                },
                BenchRow {
                    workers: 2,
                    wall_time_s: 0.3,
                    speedup: 0.5 / 0.3,
                    efficiency: 0.5 / 0.6,
                    checksum: 0xabd,
                },
            ],
        };
        let csv = report.to_csv();
        assert!(csv.starts_with("workers,wall_time_s,speedup,efficiency,checksum\n"));
        let table = report.to_table();
        for line in csv.lines().skip(1) {
            let cols: Vec<_> = line.split(',').collect();
            let table_line = table
                .lines()
                .find(|l| l.split_whitespace().next() == Some(cols[0]))
                .unwrap();
            assert_eq!(table_line.split_whitespace().collect::<Vec<_>>(), cols);
        }
        assert!(!report.consistent());
        assert!(table.contains("FAILED"));
    }
}
