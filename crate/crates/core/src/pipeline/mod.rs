//! End-to-end orchestration: superpixels, gaze mapping, probability
//! propagation, training-set assembly, boosting, scoring and evaluation.

mod config;
mod run;

pub use config::{FeatureSource, Mode, PipelineConfig, ThetaSource};
pub use run::{
    load_features, propagate, run, run_modes, score_mode, segment_sequence, training_samples, with_workers,
    write_run, Propagation, RunOutput, RunResult, Segmentation,
};
