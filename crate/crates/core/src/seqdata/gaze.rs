//! Gaze trace CSV: header `frame,x,y[,observer]`, integer frame index,
//! floating-point pixel coordinates.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazePoint {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

impl GazePoint {
    /// Pixel containing the point.
    pub fn pixel(&self) -> (u32, u32) {
        (self.x.floor() as u32, self.y.floor() as u32)
    }
}

/// Fixations of one observer, at most one per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeTrace {
    pub observer_id: String,
    pub points: Vec<GazePoint>,
}

impl GazeTrace {
    pub fn new(observer_id: impl Into<String>) -> Self {
        Self {
            observer_id: observer_id.into(),
            points: Vec::new(),
        }
    }
}

/// Result of parsing one gaze CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedGaze {
    /// One trace per observer, in order of first appearance.
    pub traces: Vec<GazeTrace>,
    pub dropped_out_of_bounds: usize,
    pub dropped_duplicates: usize,
}

/// Bounds used to validate gaze rows.
#[derive(Debug, Clone, Copy)]
pub struct GazeBounds {
    pub frame_count: usize,
    pub width: u32,
    pub height: u32,
}

impl From<&super::ImageSequence> for GazeBounds {
    fn from(seq: &super::ImageSequence) -> Self {
        Self {
            frame_count: seq.frame_count(),
            width: seq.width(),
            height: seq.height(),
        }
    }
}

/// Parses gaze CSV text. Rows outside the frame range or image bounds are
/// dropped, as are repeated frames for one observer (earliest row wins).
/// `default_observer` names rows that carry no observer column.
pub fn parse_gaze_str(
    text: &str,
    bounds: GazeBounds,
    default_observer: &str,
    source: &Path,
) -> Result<ParsedGaze> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header `frame,x,y`".into()))?;
    let cols: Vec<String> = header
        .trim_start_matches('\u{feff}')
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let has_observer = match cols.as_slice() {
        [f, x, y] if f == "frame" && x == "x" && y == "y" => false,
        [f, x, y, o] if f == "frame" && x == "x" && y == "y" && o == "observer" => true,
        _ => return Err(parse_err(1, format!("expected header `frame,x,y[,observer]`, got `{header}`"))),
    };

    let mut traces: Vec<GazeTrace> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut dropped_out_of_bounds = 0;
    let mut dropped_duplicates = 0;

    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let want = if has_observer { 4 } else { 3 };
        if fields.len() != want {
            return Err(parse_err(lineno, format!("expected {want} fields, got {}", fields.len())));
        }
        let frame: i64 = fields[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("frame `{}` is not an integer", fields[0])))?;
        let x: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("x `{}` is not a number", fields[1])))?;
        let y: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("y `{}` is not a number", fields[2])))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(parse_err(lineno, "non-finite coordinate".into()));
        }
        let observer = if has_observer { fields[3] } else { default_observer };

        let in_bounds = frame >= 0
            && (frame as u64) < bounds.frame_count as u64
            && x >= 0.0
            && x < bounds.width as f64
            && y >= 0.0
            && y < bounds.height as f64;
        if !in_bounds {
            dropped_out_of_bounds += 1;
            continue;
        }

        let slot = match traces.iter().position(|t| t.observer_id == observer) {
            Some(i) => i,
            None => {
                traces.push(GazeTrace::new(observer));
                traces.len() - 1
            }
        };
        let frame = frame as usize;
        if !seen.insert((slot, frame)) {
            dropped_duplicates += 1;
            continue;
        }
        traces[slot].points.push(GazePoint { frame, x, y });
    }

    if dropped_out_of_bounds > 0 {
        log::warn!("{}: dropped {dropped_out_of_bounds} out-of-bounds gaze rows", source.display());
    }
    if dropped_duplicates > 0 {
        log::warn!("{}: dropped {dropped_duplicates} duplicate-frame gaze rows", source.display());
    }

    Ok(ParsedGaze {
        traces,
        dropped_out_of_bounds,
        dropped_duplicates,
    })
}

/// Parses a gaze CSV file. Rows without an observer column take the file stem
/// as observer id.
pub fn parse_gaze_trace(csv_path: &Path, bounds: impl Into<GazeBounds>) -> Result<ParsedGaze> {
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "observer".into());
    parse_gaze_str(&text, bounds.into(), &stem, csv_path)
}

pub fn format_gaze_csv(traces: &[GazeTrace]) -> String {
    let mut out = String::from("frame,x,y,observer\n");
    for t in traces {
        for p in &t.points {
            let _ = writeln!(out, "{},{},{},{}", p.frame, p.x, p.y, t.observer_id);
        }
    }
    out
}

pub fn write_gaze_csv(traces: &[GazeTrace], path: &Path) -> Result<()> {
    fs::write(path, format_gaze_csv(traces)).map_err(|e| Error::io(path, e))
}
