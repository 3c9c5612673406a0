use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use gazeseg::metrics::evaluate;
use gazeseg::pipeline::{propagate, run, segment_sequence, with_workers, write_run, PipelineConfig};
use gazeseg::seqdata::output::{list_pngs, read_label_png, read_mask_png, read_scores_csv, write_metrics_json};
use gazeseg::seqdata::{load_sequence, parse_gaze_trace, write_outputs, GazeTrace, ImageSequence, ProbabilityLink, ScoreRow};
use gazeseg::synthgen::{generate, generate_observers, write_synth, SynthSpec};

#[derive(Parser)]
#[command(name = "gazeseg", version, about = "Segment image sequences from gaze traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: superpixels, propagation, boosting, scoring.
    Segment(SegmentArgs),
    /// Write a synthetic moving-blob sequence with masks and gaze traces.
    Synth(SynthArgs),
    /// Pixel-level metrics for an existing scores CSV.
    Eval(EvalArgs),
    /// Object-probability maps only.
    Propagate(PropagateArgs),
}

#[derive(Args)]
struct Overrides {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    sp_size: Option<u32>,
    #[arg(long)]
    compactness: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma_a: Option<f64>,
    #[arg(long)]
    sigma_d: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    diffusion_iters: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    u_fraction: Option<f64>,
    /// Use squared distances in the affinity exponents.
    #[arg(long)]
    squared_affinity: bool,
    /// `gradient` or `flow:DIR`.
    #[arg(long)]
    theta_source: Option<String>,
    /// `pyramid` or `precomputed:FILE`.
    #[arg(long)]
    features: Option<String>,
}

impl Overrides {
    fn config(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        let mut set = |k: &str, v: Option<String>| -> Result<()> {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
            Ok(())
        };
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("workers", self.workers.map(|v| v.to_string()))?;
        set("sp_size", self.sp_size.map(|v| v.to_string()))?;
        set("compactness", self.compactness.map(|v| v.to_string()))?;
        set("alpha", self.alpha.map(|v| v.to_string()))?;
        set("sigma_a", self.sigma_a.map(|v| v.to_string()))?;
        set("sigma_d", self.sigma_d.map(|v| v.to_string()))?;
        set("tau", self.tau.map(|v| v.to_string()))?;
        set("diffusion_iters", self.diffusion_iters.map(|v| v.to_string()))?;
        set("rounds", self.rounds.map(|v| v.to_string()))?;
        set("u_fraction", self.u_fraction.map(|v| v.to_string()))?;
        set("theta_source", self.theta_source.clone())?;
        set("features", self.features.clone())?;
        if self.squared_affinity {
            c.squared_affinity = true;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Gaze CSV; repeat for several observers.
    #[arg(long, required = true)]
    gaze: Vec<PathBuf>,
    /// Directory of binary ground-truth PNGs, one per frame.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// eel, el or prob.
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 30)]
    frames: usize,
    /// WIDTHxHEIGHT
    #[arg(long, default_value = "128x128")]
    size: String,
    #[arg(long, default_value_t = 12.0)]
    radius: f64,
    #[arg(long, default_value_t = 1)]
    observers: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    jitter: f64,
    #[arg(long, default_value_t = 4.0)]
    noise: f64,
    /// Probability of an off-target gaze point.
    #[arg(long, default_value_t = 0.0)]
    noncompliant: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Directory of 16-bit label PNGs written by `segment`.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PropagateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, required = true)]
    gaze: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

fn load_traces(paths: &[PathBuf], sequence: &ImageSequence) -> Result<Vec<GazeTrace>> {
    let mut traces = Vec::new();
    for p in paths {
        let parsed = parse_gaze_trace(p, sequence)?;
        if parsed.dropped_out_of_bounds + parsed.dropped_duplicates > 0 {
            log::warn!(
                "{}: dropped {} out-of-bounds and {} duplicate rows",
                p.display(),
                parsed.dropped_out_of_bounds,
                parsed.dropped_duplicates
            );
        }
        traces.extend(parsed.traces);
    }
    Ok(traces)
}

fn load_masks(dir: &Path) -> Result<Vec<Vec<bool>>> {
    let mut masks = Vec::new();
    for p in list_pngs(dir)? {
        masks.push(read_mask_png(&p)?.2);
    }
    if masks.is_empty() {
        bail!("no PNG masks in {}", dir.display());
    }
    Ok(masks)
}

fn segment(args: SegmentArgs) -> Result<()> {
    let mut config = args.overrides.config()?;
    if let Some(m) = &args.mode {
        config.mode = m.parse()?;
    }
    let sequence = load_sequence(&args.manifest)?;
    let traces = load_traces(&args.gaze, &sequence)?;
    let gt = args.gt.as_deref().map(load_masks).transpose()?;
    let out = run(&config, &sequence, &traces, gt.as_deref())?;
    let result = &out.results[0];
    write_run(result, &out.segmentation.frames, &args.out)?;
    fs::write(args.out.join("config.txt"), config.to_config_string())
        .with_context(|| format!("writing config to {}", args.out.display()))?;
    if let Some(m) = &result.metrics {
        println!("AUC {:.4}  F@5%FPR {:.4}", m.auc, m.f_score_at_5fpr);
    }
    info!("wrote {}", args.out.display());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let (w, h) = args
        .size
        .split_once(['x', 'X'])
        .and_then(|(w, h)| Some((w.parse::<u32>().ok()?, h.parse::<u32>().ok()?)))
        .with_context(|| format!("--size {:?} is not WIDTHxHEIGHT", args.size))?;
    let mut spec = SynthSpec::circling(args.frames, w, h, args.radius, args.seed);
    spec.jitter_sigma = args.jitter;
    spec.noise_sigma = args.noise;
    spec.noncompliant = args.noncompliant;
    let output = generate(&spec)?;
    let traces = generate_observers(&spec, args.observers)?;
    write_synth(&output, &traces, &args.out)?;
    println!("{}", args.out.join("manifest.txt").display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let rows = read_scores_csv(&args.scores)?;
    let label_maps = list_pngs(&args.labels)?
        .iter()
        .map(|p| read_label_png(p).map(|(_, _, l)| l))
        .collect::<gazeseg::Result<Vec<_>>>()?;
    let masks = load_masks(&args.gt)?;
    if label_maps.len() != masks.len() {
        bail!("{} label maps but {} ground-truth masks", label_maps.len(), masks.len());
    }
    let mut by_frame: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for ScoreRow {
        frame,
        superpixel_id,
        score,
        ..
    } in rows
    {
        by_frame.entry(frame).or_default().insert(superpixel_id, score);
    }
    let mut scores = Vec::with_capacity(label_maps.len());
    for (t, labels) in label_maps.iter().enumerate() {
        let n = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let frame_scores = by_frame.get(&t);
        let s = (0..n)
            .map(|id| {
                frame_scores
                    .and_then(|f| f.get(&id).copied())
                    .ok_or(gazeseg::Error::MissingScore { frame: t, id })
            })
            .collect::<gazeseg::Result<Vec<_>>>()?;
        scores.push(s);
    }
    let refs: Vec<&[u32]> = label_maps.iter().map(Vec::as_slice).collect();
    let metrics = evaluate(&scores, &refs, &masks)?;
    write_metrics_json(&metrics, &args.out)?;
    println!("AUC {:.4}  F@5%FPR {:.4}", metrics.auc, metrics.f_score_at_5fpr);
    Ok(())
}

fn propagate_cmd(args: PropagateArgs) -> Result<()> {
    let config = args.overrides.config()?;
    let sequence = load_sequence(&args.manifest)?;
    let traces = load_traces(&args.gaze, &sequence)?;
    let (frames, prop) = with_workers(&config, || -> gazeseg::Result<_> {
        let seg = segment_sequence(&config, &sequence)?;
        let prop = propagate(&config, &seg.frames, &traces)?;
        Ok((seg.frames, prop))
    })??;
    let rows: Vec<ScoreRow> = prop
        .epsilon
        .iter()
        .enumerate()
        .flat_map(|(t, m)| {
            m.values.iter().zip(&m.positive).enumerate().map(move |(id, (&v, &p))| ScoreRow {
                frame: t,
                superpixel_id: id,
                score: v,
                epsilon: v,
                is_positive: p,
            })
        })
        .collect();
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_outputs(&rows, &frames, ProbabilityLink::Identity, None, &args.out)?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Segment(a) => segment(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
        Command::Propagate(a) => propagate_cmd(a),
    }
}

