use std::fs;

use gazeseg::boost::{predict, train, SampleKind};
use gazeseg::features::write_precomputed;
use gazeseg::gazeprop::{write_flo, FlowField};
use gazeseg::pipeline::{
    load_features, propagate, run, run_modes, segment_sequence, training_samples, write_run, FeatureSource, Mode,
    PipelineConfig, ThetaSource,
};
use gazeseg::seqdata::output::{list_pngs, read_scores_csv};
use gazeseg::superpixels::{map_gaze, SuperpixelRef};
use gazeseg::synthgen::{generate, generate_observers, SynthOutput, SynthSpec};

fn small() -> (SynthSpec, SynthOutput) {
    let spec = SynthSpec::circling(8, 80, 72, 10.0, 5);
    let out = generate(&spec).unwrap();
    (spec, out)
}

fn config() -> PipelineConfig {
    PipelineConfig {
        seed: 5,
        rounds: 20,
        ..Default::default()
    }
}

#[test]
fn smoke_thirty_frames_writes_outputs() {
    let synth = generate(&SynthSpec::circling(30, 128, 128, 12.0, 42)).unwrap();
    let out = run(&PipelineConfig::default(), &synth.sequence, &[synth.trace], Some(&synth.masks)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run(&out.results[0], &out.segmentation.frames, dir.path()).unwrap();

    let pngs: Vec<_> = list_pngs(dir.path()).unwrap();
    assert_eq!(pngs.iter().filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("prob_")).count(), 30);
    assert_eq!(list_pngs(&dir.path().join("labels")).unwrap().len(), 30);
    let rows = read_scores_csv(&dir.path().join("scores.csv")).unwrap();
    let total: usize = out.segmentation.frames.iter().map(|f| f.len()).sum();
    assert_eq!(rows.len(), total);
    assert!(dir.path().join("metrics.json").exists());
    assert!(dir.path().join("ensemble.json").exists());
}

#[test]
fn two_traces_take_the_union() {
    let (spec, synth) = small();
    let traces = generate_observers(&spec, 2).unwrap();
    let c = config();
    let seg = segment_sequence(&c, &synth.sequence).unwrap();
    let both = propagate(&c, &seg.frames, &traces).unwrap();
    assert_eq!(both.observers_used, 2);
    for t in &traces {
        let single = map_gaze(std::slice::from_ref(t), &seg.frames);
        assert!(both.positive.len() >= single.len());
        assert!(single.iter().all(|r| both.positive.contains(r)));
    }
    for m in &both.epsilon {
        for (&v, &p) in m.values.iter().zip(&m.positive) {
            assert!(!p || v == 1.0);
        }
    }
}

#[test]
fn duplicated_traces_change_nothing() {
    let (_, synth) = small();
    let c = config();
    let seg = segment_sequence(&c, &synth.sequence).unwrap();
    let once = propagate(&c, &seg.frames, std::slice::from_ref(&synth.trace)).unwrap();
    let twice = propagate(&c, &seg.frames, &[synth.trace.clone(), synth.trace.clone()]).unwrap();
    assert_eq!(once.positive, twice.positive);
    assert_eq!(once.epsilon, twice.epsilon);
}

#[test]
fn prob_mode_scores_are_epsilon_and_trains_nothing() {
    let (_, synth) = small();
    let c = PipelineConfig {
        mode: Mode::Prob,
        ..config()
    };
    let out = run(&c, &synth.sequence, &[synth.trace], None).unwrap();
    let r = &out.results[0];
    assert!(r.ensemble.is_none());
    assert!(r.metrics.is_none());
    for row in &r.rows {
        assert_eq!(row.score, row.epsilon);
    }
}

#[test]
fn epsilon_higher_inside_the_object() {
    let (_, synth) = small();
    let c = config();
    let seg = segment_sequence(&c, &synth.sequence).unwrap();
    let prop = propagate(&c, &seg.frames, &[synth.trace]).unwrap();
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for ((frame, eps), mask) in seg.frames.iter().zip(&prop.epsilon).zip(&synth.masks) {
        for (&l, &m) in frame.labels().iter().zip(mask) {
            if m { &mut inside } else { &mut outside }.push(eps.values[l as usize]);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&inside) > mean(&outside), "{} vs {}", mean(&inside), mean(&outside));
}

#[test]
fn boosting_on_pipeline_samples() {
    let (_, synth) = small();
    let c = PipelineConfig {
        u_fraction: 1.0,
        ..config()
    };
    let seg = segment_sequence(&c, &synth.sequence).unwrap();
    let prop = propagate(&c, &seg.frames, &[synth.trace]).unwrap();
    let features = load_features(&c, &seg).unwrap();
    let mut samples = training_samples(&c, Mode::Eel, &prop, &features).unwrap();
    samples.truncate(200);
    assert!(samples.iter().any(|s| s.kind == SampleKind::Positive));
    let e = train(&samples, 10, 1).unwrap();
    for pair in e.round_losses.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "{:?}", e.round_losses);
    }
}

#[test]
fn positives_outscore_heldout_background() {
    let (_, synth) = small();
    let c = config();
    let seg = segment_sequence(&c, &synth.sequence).unwrap();
    let prop = propagate(&c, &seg.frames, &[synth.trace]).unwrap();
    let features = load_features(&c, &seg).unwrap();
    let set = gazeseg::boost::assemble_training_set(&prop.epsilon, &features, c.u_fraction, c.seed).unwrap();
    let e = train(&set.samples, c.rounds, c.seed).unwrap();
    let positives: Vec<SuperpixelRef> = prop.positive.iter().collect();
    // held-out superpixels lying entirely outside the object
    let background: Vec<SuperpixelRef> = set
        .heldout
        .iter()
        .copied()
        .filter(|r| {
            let f = &seg.frames[r.frame];
            f.labels()
                .iter()
                .zip(&synth.masks[r.frame])
                .all(|(&l, &m)| l as usize != r.id || !m)
        })
        .collect();
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let pos = mean(predict(&e, &features, &positives).unwrap());
    let bg = mean(predict(&e, &features, &background).unwrap());
    assert!(pos > bg, "{pos} vs {bg}");
}

#[test]
fn precomputed_features_reproduce_pyramid_run() {
    let (_, synth) = small();
    let c = config();
    let seg = segment_sequence(&c, &synth.sequence).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features.bin");
    write_precomputed(&load_features(&c, &seg).unwrap(), &path).unwrap();

    let pyramid = run(&c, &synth.sequence, std::slice::from_ref(&synth.trace), None).unwrap();
    let pre = PipelineConfig {
        features: FeatureSource::Precomputed(path),
        ..c
    };
    let loaded = run(&pre, &synth.sequence, &[synth.trace], None).unwrap();
    assert_eq!(pyramid.results[0].scores(), loaded.results[0].scores());
}

#[test]
fn flow_orientation_source() {
    let (_, synth) = small();
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (synth.sequence.width(), synth.sequence.height());
    for t in 0..synth.sequence.frame_count() {
        let flow = FlowField {
            width: w,
            height: h,
            data: vec![[1.0, 1.0]; (w * h) as usize],
        };
        write_flo(&flow, &dir.path().join(gazeseg::gazeprop::flow_file_name(t))).unwrap();
    }
    let c = PipelineConfig {
        theta_source: ThetaSource::Flow(dir.path().to_path_buf()),
        ..config()
    };
    let seg = segment_sequence(&c, &synth.sequence).unwrap();
    for f in &seg.frames {
        for s in &f.stats {
            assert!((s.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        }
    }
    fs::remove_file(dir.path().join(gazeseg::gazeprop::flow_file_name(0))).unwrap();
    assert!(segment_sequence(&c, &synth.sequence).is_err());
}

#[test]
fn modes_share_one_split() {
    let (_, synth) = small();
    let out = run_modes(&config(), &synth.sequence, &[synth.trace], Some(&synth.masks), &Mode::ALL).unwrap();
    assert_eq!(out.results.len(), 3);
    let eps: Vec<Vec<f64>> = out.results.iter().map(|r| r.rows.iter().map(|x| x.epsilon).collect()).collect();
    assert!(eps.windows(2).all(|w| w[0] == w[1]));
    for r in &out.results {
        let m = r.metrics.as_ref().unwrap();
        assert!((0.0..=1.0).contains(&m.auc));
        assert_eq!(m.roc.first(), Some(&(0.0, 0.0)));
        assert_eq!(m.roc.last(), Some(&(1.0, 1.0)));
        assert!(m.roc.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    }
}

#[test]
fn no_usable_gaze_is_an_error() {
    let (_, synth) = small();
    let empty = gazeseg::seqdata::GazeTrace::new("nobody");
    assert!(matches!(
        run(&config(), &synth.sequence, &[empty], None),
        Err(gazeseg::Error::EmptyPositiveSet)
    ));
}

#[test]
fn invalid_config_is_rejected() {
    let (_, synth) = small();
    let c = PipelineConfig {
        alpha: 1.0,
        ..config()
    };
    assert!(matches!(run(&c, &synth.sequence, &[synth.trace], None), Err(gazeseg::Error::Config(_))));
}
