use std::fs;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use super::config::{FeatureSource, Mode, PipelineConfig, ThetaSource};
use crate::boost::{assemble_training_set, predict, train, Ensemble, Sample};
use crate::error::{Error, Result};
use crate::features::{load_precomputed, pyramid_features, FeatureTable, DEFAULT_SCALES};
use crate::gazeprop::{aggregate_observers, estimate_epsilon, flow_orientations, load_flow_dir, EpsilonMap};
use crate::metrics::{evaluate_frames, Metrics};
use crate::seqdata::{rgb_to_lab, write_outputs, GazeTrace, ImageSequence, LabImage, ProbabilityLink, ScoreRow};
use crate::superpixels::{map_gaze, segment_frame, PositiveSet, SuperpixelFrame, SuperpixelRef};

/// Stage one: Lab conversion and superpixels for every frame.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub lab: Vec<LabImage>,
    pub frames: Vec<SuperpixelFrame>,
}

/// Stage two: object-probability estimates.
#[derive(Debug, Clone)]
pub struct Propagation {
    /// Union of all observers' gazed superpixels.
    pub positive: PositiveSet,
    pub epsilon: Vec<EpsilonMap>,
    /// Observers that contributed (at least one gazed superpixel).
    pub observers_used: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub mode: Mode,
    pub rows: Vec<ScoreRow>,
    pub ensemble: Option<Ensemble>,
    pub metrics: Option<Metrics>,
}

impl RunResult {
    pub fn link(&self) -> ProbabilityLink {
        match self.mode {
            Mode::Prob => ProbabilityLink::Identity,
            Mode::Eel | Mode::El => ProbabilityLink::Logistic,
        }
    }

    pub fn scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.score).collect()
    }
}

/// Runs `f` on a pool of `config.workers` threads, or on the global pool.
pub fn with_workers<T: Send>(config: &PipelineConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    match config.workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn segment_sequence(config: &PipelineConfig, sequence: &ImageSequence) -> Result<Segmentation> {
    let lab: Vec<LabImage> = sequence.frames().par_iter().map(rgb_to_lab).collect();
    let mut frames = lab
        .par_iter()
        .map(|img| segment_frame(img, config.sp_size, config.compactness))
        .collect::<Result<Vec<_>>>()?;
    if let ThetaSource::Flow(dir) = &config.theta_source {
        let flows = load_flow_dir(dir, frames.len(), sequence.width(), sequence.height())?;
        for (frame, flow) in frames.iter_mut().zip(&flows) {
            let thetas = flow_orientations(flow, frame)?;
            for (s, th) in frame.stats.iter_mut().zip(thetas) {
                s.theta = th;
            }
        }
    }
    info!(
        "segmented {} frames into {} superpixels",
        frames.len(),
        frames.iter().map(|f| f.len()).sum::<usize>()
    );
    Ok(Segmentation { lab, frames })
}

/// Epsilon maps from one or more traces. Each trace is one observer;
/// observers whose gaze hits no superpixel are skipped.
pub fn propagate(config: &PipelineConfig, frames: &[SuperpixelFrame], traces: &[GazeTrace]) -> Result<Propagation> {
    let params = config.propagation();
    let mut per_observer = Vec::new();
    let mut positive = PositiveSet::default();
    for trace in traces {
        let p = map_gaze(std::slice::from_ref(trace), frames);
        if p.is_empty() {
            warn!("observer {:?} has no in-bounds gaze, skipped", trace.observer_id);
            continue;
        }
        per_observer.push(estimate_epsilon(frames, &p, &params)?);
        positive = positive.union(&p);
    }
    let observers_used = per_observer.len();
    let epsilon = match observers_used {
        0 => return Err(Error::EmptyPositiveSet),
        1 => per_observer.pop().expect("one observer"),
        _ => aggregate_observers(&per_observer)?,
    };
    info!("{} gazed superpixels from {observers_used} observers", positive.len());
    Ok(Propagation {
        positive,
        epsilon,
        observers_used,
    })
}

pub fn load_features(config: &PipelineConfig, seg: &Segmentation) -> Result<FeatureTable> {
    match &config.features {
        FeatureSource::Pyramid => pyramid_features(&seg.lab, &seg.frames, &DEFAULT_SCALES),
        FeatureSource::Precomputed(path) => load_precomputed(path, &seg.frames),
    }
}

fn all_ids(frames: &[SuperpixelFrame]) -> Vec<SuperpixelRef> {
    frames
        .iter()
        .enumerate()
        .flat_map(|(t, f)| (0..f.len()).map(move |id| SuperpixelRef::new(t, id)))
        .collect()
}

fn rows_from_scores(ids: &[SuperpixelRef], scores: &[f64], epsilon: &[EpsilonMap]) -> Vec<ScoreRow> {
    ids.iter()
        .zip(scores)
        .map(|(r, &score)| ScoreRow {
            frame: r.frame,
            superpixel_id: r.id,
            score,
            epsilon: epsilon[r.frame].values[r.id],
            is_positive: epsilon[r.frame].positive[r.id],
        })
        .collect()
}

/// Scores every superpixel in one mode. The training split depends only on
/// the seed, so all modes share it.
pub fn score_mode(
    config: &PipelineConfig,
    mode: Mode,
    frames: &[SuperpixelFrame],
    propagation: &Propagation,
    features: Option<&FeatureTable>,
    ground_truth: Option<&[Vec<bool>]>,
) -> Result<RunResult> {
    let ids = all_ids(frames);
    let eps = &propagation.epsilon;
    let (scores, ensemble) = match mode {
        Mode::Prob => (ids.iter().map(|r| eps[r.frame].values[r.id]).collect::<Vec<_>>(), None),
        Mode::Eel | Mode::El => {
            let features = features.ok_or_else(|| Error::InvalidInput("boosting modes need features".into()))?;
            let samples = training_samples(config, mode, propagation, features)?;
            info!("{mode}: training on {} samples", samples.len());
            let ensemble = train(&samples, config.rounds, config.seed)?;
            (predict(&ensemble, features, &ids)?, Some(ensemble))
        }
    };
    let rows = rows_from_scores(&ids, &scores, eps);
    let metrics = match ground_truth {
        Some(gt) => {
            let by_frame = crate::seqdata::output::scores_by_frame(&rows, frames)?;
            Some(evaluate_frames(&by_frame, frames, gt)?)
        }
        None => None,
    };
    Ok(RunResult {
        mode,
        rows,
        ensemble,
        metrics,
    })
}

fn check_ground_truth(gt: Option<&[Vec<bool>]>, sequence: &ImageSequence) -> Result<()> {
    if let Some(gt) = gt {
        let px = sequence.width() as usize * sequence.height() as usize;
        if gt.len() != sequence.frame_count() || gt.iter().any(|m| m.len() != px) {
            return Err(Error::Dimension(format!(
                "{} ground-truth masks for {} frames of {}x{}",
                gt.len(),
                sequence.frame_count(),
                sequence.width(),
                sequence.height()
            )));
        }
    }
    Ok(())
}

/// Everything a run produced, shared across modes.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub segmentation: Segmentation,
    pub propagation: Propagation,
    pub results: Vec<RunResult>,
}

impl RunOutput {
    pub fn result(&self, mode: Mode) -> Option<&RunResult> {
        self.results.iter().find(|r| r.mode == mode)
    }
}

/// Runs the pipeline once and scores it in each of `modes`.
pub fn run_modes(
    config: &PipelineConfig,
    sequence: &ImageSequence,
    traces: &[GazeTrace],
    ground_truth: Option<&[Vec<bool>]>,
    modes: &[Mode],
) -> Result<RunOutput> {
    config.validate()?;
    check_ground_truth(ground_truth, sequence)?;
    with_workers(config, || {
        let segmentation = segment_sequence(config, sequence)?;
        let propagation = propagate(config, &segmentation.frames, traces)?;
        let features = if modes.iter().any(|&m| m != Mode::Prob) {
            Some(load_features(config, &segmentation)?)
        } else {
            None
        };
        let results = modes
            .iter()
            .map(|&m| score_mode(config, m, &segmentation.frames, &propagation, features.as_ref(), ground_truth))
            .collect::<Result<Vec<_>>>()?;
        Ok(RunOutput {
            segmentation,
            propagation,
            results,
        })
    })?
}

/// Runs the pipeline in `config.mode`.
pub fn run(
    config: &PipelineConfig,
    sequence: &ImageSequence,
    traces: &[GazeTrace],
    ground_truth: Option<&[Vec<bool>]>,
) -> Result<RunOutput> {
    run_modes(config, sequence, traces, ground_truth, &[config.mode])
}

/// Probability and label PNGs, `scores.csv`, `metrics.json` when evaluated
/// and `ensemble.json` when a classifier was trained.
pub fn write_run(result: &RunResult, frames: &[SuperpixelFrame], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_outputs(&result.rows, frames, result.link(), result.metrics.as_ref(), out_dir)?;
    if let Some(e) = &result.ensemble {
        e.save(&out_dir.join("ensemble.json"))?;
    }
    Ok(())
}

/// Positive samples plus the seeded unknown draw; EL hardens the unknowns.
pub fn training_samples(
    config: &PipelineConfig,
    mode: Mode,
    propagation: &Propagation,
    features: &FeatureTable,
) -> Result<Vec<Sample>> {
    let mut set = assemble_training_set(&propagation.epsilon, features, config.u_fraction, config.seed)?;
    if mode == Mode::El {
        for s in &mut set.samples {
            s.kind = s.kind.hardened();
        }
    }
    Ok(set.samples)
}

