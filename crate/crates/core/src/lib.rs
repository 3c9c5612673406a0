//! Object segmentation of image sequences from gaze.
//!
//! An observer follows the target with their eyes while the sequence plays.
//! Superpixels under the gaze become positive samples; every other
//! superpixel gets an object probability by diffusing a gaze-seeded color
//! model over a per-frame affinity graph. A boosted stump classifier is then
//! trained under the Expected Exponential Loss, which weighs each unknown
//! superpixel by that probability instead of forcing a hard label.
//!
//! ```no_run
//! use gazeseg::pipeline::{run, PipelineConfig};
//! use gazeseg::synthgen::{generate, SynthSpec};
//!
//! let synth = generate(&SynthSpec::circling(30, 128, 128, 12.0, 42)).unwrap();
//! let out = run(&PipelineConfig::default(), &synth.sequence, &[synth.trace], Some(&synth.masks)).unwrap();
//! println!("AUC {:.3}", out.results[0].metrics.as_ref().unwrap().auc);
//! ```

pub mod boost;
pub mod error;
pub mod features;
pub mod gazeprop;
pub mod gradient;
pub mod metrics;
pub mod pipeline;
pub mod seqdata;
pub mod superpixels;
pub mod synthgen;

pub use error::{Error, Result};
