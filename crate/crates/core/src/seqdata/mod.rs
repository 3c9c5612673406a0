//! Sequence and gaze ingestion, color conversion, and output files.

mod gaze;
mod lab;
pub mod output;
mod sequence;

pub use gaze::{
    format_gaze_csv, parse_gaze_str, parse_gaze_trace, write_gaze_csv, GazeBounds, GazePoint, GazeTrace,
    ParsedGaze,
};
pub use lab::{rgb_pixel_to_lab, rgb_to_lab, LabImage};
pub use output::{write_outputs, ProbabilityLink, ScoreRow};
pub use sequence::{load_sequence, read_manifest, write_sequence, ImageSequence};
