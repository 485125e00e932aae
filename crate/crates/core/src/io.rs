//! Parameter files and trajectory writers.
//!
//! Parameter files are plain `key = value` text:
//!
//! ```text
//! # ring road, 20% occupied
//! length = 1000
//! ncars  = 200
//! steps  = 1000
//! seed   = 13
//! output = pgm   # none | ascii | pgm
//! ```
//!
//! `length`, `ncars`, `steps` and `seed` are required. `vmax` defaults to 5,
//! `p` to 0.13, `output` to none, `stride` and `threads` to 1.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::engine::Frame;
use crate::model::{OutputMode, ParamsError, SimParams};

pub const DEFAULT_VMAX: u32 = 5;
pub const DEFAULT_P: f64 = 0.13;

const KEYS: [&str; 9] = [
    "length", "ncars", "vmax", "p", "steps", "seed", "output", "stride", "threads",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamFileError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice (first on line {first})")]
    Duplicate {
        line: usize,
        key: String,
        first: usize,
    },
    #[error("line {line}: cannot parse `{value}` for key `{key}`: {reason}")]
    Value {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key `{key}`")]
    Missing { key: &'static str },
    #[error("line {line}: invalid value for `{key}`: {source}")]
    Invalid {
        line: usize,
        key: &'static str,
        source: ParamsError,
    },
}

/// Parses a parameter file into physics parameters and a worker count.
pub fn read_params(text: &str) -> Result<(SimParams, usize), ParamFileError> {
    let mut entries: HashMap<&'static str, (usize, &str)> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParamFileError::Syntax {
                line,
                text: content.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|k| k.eq_ignore_ascii_case(key)) else {
            return Err(ParamFileError::UnknownKey {
                line,
                key: key.to_string(),
            });
        };
        if let Some(&(first, _)) = entries.get(known) {
            return Err(ParamFileError::Duplicate {
                line,
                key: known.to_string(),
                first,
            });
        }
        entries.insert(known, (line, value));
    }

    fn parse<T: std::str::FromStr>(
        entries: &HashMap<&'static str, (usize, &str)>,
        key: &'static str,
        default: Option<T>,
    ) -> Result<(T, usize), ParamFileError>
    where
        T::Err: std::fmt::Display,
    {
        match entries.get(key) {
            Some(&(line, value)) => {
                value
                    .parse::<T>()
                    .map(|v| (v, line))
                    .map_err(|e| ParamFileError::Value {
                        line,
                        key: key.to_string(),
                        value: value.to_string(),
                        reason: e.to_string(),
                    })
            }
            None => default
                .map(|d| (d, 0))
                .ok_or(ParamFileError::Missing { key }),
        }
    }

    let (road_length, length_line) = parse::<usize>(&entries, "length", None)?;
    let (car_count, ncars_line) = parse::<usize>(&entries, "ncars", None)?;
    let (steps, _) = parse::<u64>(&entries, "steps", None)?;
    let (seed, _) = parse::<u64>(&entries, "seed", None)?;
    let (v_max, vmax_line) = parse::<u32>(&entries, "vmax", Some(DEFAULT_VMAX))?;
    let (p, p_line) = parse::<f64>(&entries, "p", Some(DEFAULT_P))?;
    let (output_mode, _) = parse::<OutputMode>(&entries, "output", Some(OutputMode::None))?;
    let (output_stride, stride_line) = parse::<u64>(&entries, "stride", Some(1))?;
    let (threads, threads_line) = parse::<usize>(&entries, "threads", Some(1))?;

    let params = SimParams {
        road_length,
        car_count,
        v_max,
        p,
        steps,
        seed,
        output_mode,
        output_stride,
    };
    if let Err(source) = params.validate() {
        let (key, line) = match source {
            ParamsError::NoCars => ("ncars", ncars_line),
            ParamsError::TooManyCars { .. } => ("ncars", ncars_line.max(length_line)),
            ParamsError::Probability(_) => ("p", p_line),
            ParamsError::MaxVelocity => ("vmax", vmax_line),
            ParamsError::Stride => ("stride", stride_line),
        };
        return Err(ParamFileError::Invalid { line, key, source });
    }
    if threads == 0 {
        return Err(ParamFileError::Value {
            line: threads_line,
            key: "threads".to_string(),
            value: "0".to_string(),
            reason: "must be at least 1".to_string(),
        });
    }
    Ok((params, threads))
}

/// Renders parameters in the format accepted by [`read_params`].
pub fn write_params(params: &SimParams, threads: usize) -> String {
    format!(
        "length = {}\nncars = {}\nvmax = {}\np = {:?}\nsteps = {}\nseed = {}\noutput = {}\nstride = {}\nthreads = {}\n",
        params.road_length,
        params.car_count,
        params.v_max,
        params.p,
        params.steps,
        params.seed,
        params.output_mode,
        params.output_stride,
        threads,
    )
}

/// One line per frame: step index, then `position:velocity` per car.
pub fn write_ascii<W: Write>(frames: &[Frame], sink: &mut W) -> io::Result<()> {
    let mut line = String::new();
    for frame in frames {
        line.clear();
        line.push_str(&frame.step.to_string());
        for (x, v) in frame.positions.iter().zip(&frame.velocities) {
            line.push(' ');
            line.push_str(&x.to_string());
            line.push(':');
            line.push_str(&v.to_string());
        }
        line.push('\n');
        sink.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Occupancy of the road over time; row `r` is recorded frame `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpacetimeImage {
    pub rows: usize,
    pub cols: usize,
    occupied: Vec<bool>,
}

impl SpacetimeImage {
    pub fn new(rows: usize, cols: usize) -> Self {
        SpacetimeImage {
            rows,
            cols,
            occupied: vec![false; rows * cols],
        }
    }

    pub fn from_frames(frames: &[Frame], road_length: usize) -> Self {
        let mut image = Self::new(frames.len(), road_length);
        for (r, frame) in frames.iter().enumerate() {
            for &x in &frame.positions {
                image.set(r, x, true);
            }
        }
        image
    }

    pub fn set(&mut self, row: usize, col: usize, occupied: bool) {
        self.occupied[row * self.cols + col] = occupied;
    }

    pub fn is_occupied(&self, row: usize, col: usize) -> bool {
        self.occupied[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.occupied[row * self.cols..(row + 1) * self.cols]
    }
}

/// Binary PGM: header `P5 <cols> <rows> 255\n`, then one byte per cell,
/// 0 for occupied and 255 for empty.
pub fn write_pgm<W: Write>(image: &SpacetimeImage, sink: &mut W) -> io::Result<()> {
    writeln!(sink, "P5 {} {} 255", image.cols, image.rows)?;
    let pixels: Vec<u8> = image
        .occupied
        .iter()
        .map(|&o| if o { 0 } else { 255 })
        .collect();
    sink.write_all(&pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_file() {
        let (params, threads) = read_params("length=1000\nncars=200\nsteps=1000\nseed=13").unwrap();
        assert_eq!(params, SimParams::canonical(1000, 13));
        assert_eq!(threads, 1);
    }

    #[test]
    fn comments_and_whitespace() {
        let text =
            "# header\n  length =  50 # cells\n\nncars=5\n steps = 7\nseed=0\nOUTPUT = ascii\nstride = 2\nthreads=3\n";
        let (params, threads) = read_params(text).unwrap();
        assert_eq!(params.road_length, 50);
        assert_eq!(params.output_mode, OutputMode::Ascii);
        assert_eq!(params.output_stride, 2);
        assert_eq!(threads, 3);
    }

    #[test]
    fn errors_carry_key_and_line() {
        let base = "length=10\nsteps=1\nseed=1\n";
        let err = read_params(&format!("{base}ncars=0\n")).unwrap_err();
        assert!(matches!(
            err,
            ParamFileError::Invalid {
                line: 4,
                key: "ncars",
                source: ParamsError::NoCars
            }
        ));
        let err = read_params(&format!("{base}ncars=2\np=1.5\n")).unwrap_err();
        assert!(matches!(
            err,
            ParamFileError::Invalid {
                line: 5,
                key: "p",
                ..
            }
        ));
        let err = read_params(&format!("{base}ncars=2\ncolor=red\n")).unwrap_err();
        assert_eq!(
            err,
            ParamFileError::UnknownKey {
                line: 5,
                key: "color".into()
            }
        );
        let err = read_params(&format!("{base}ncars=two\n")).unwrap_err();
        assert!(matches!(err, ParamFileError::Value { line: 4, .. }));
        assert!(err.to_string().contains("ncars"));
        let err = read_params("length=10\nsteps=1\nncars=1\n").unwrap_err();
        assert_eq!(err, ParamFileError::Missing { key: "seed" });
        let err = read_params(&format!("{base}ncars=2\nbogus line\n")).unwrap_err();
        assert!(matches!(err, ParamFileError::Syntax { line: 5, .. }));
        let err = read_params(&format!("{base}ncars=2\nseed=4\n")).unwrap_err();
        assert!(matches!(
            err,
            ParamFileError::Duplicate {
                line: 5,
                first: 3,
                ..
            }
        ));
        let err = read_params(&format!("{base}ncars=2\nthreads=0\n")).unwrap_err();
        assert!(matches!(err, ParamFileError::Value { line: 5, .. }));
    }

    #[test]
    fn ascii_lines() {
        let frames = vec![Frame {
            step: 0,
            positions: vec![0, 5],
            velocities: vec![0, 0],
        }];
        let mut out = Vec::new();
        write_ascii(&frames, &mut out).unwrap();
        assert_eq!(out, b"0 0:0 5:0\n");
        let mut out = Vec::new();
        write_ascii(&[], &mut out).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn pgm_layout() {
        let mut image = SpacetimeImage::new(1, 3);
        image.set(0, 1, true);
        let mut out = Vec::new();
        write_pgm(&image, &mut out).unwrap();
        let mut expected = b"P5 3 1 255\n".to_vec();
        expected.extend([255, 0, 255]);
        assert_eq!(out, expected);
    }
}
