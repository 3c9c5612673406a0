use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gazeseg::seqdata::output::read_scores_csv;

fn gazeseg(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gazeseg"));
    cmd.args(args);
    for (flag, p) in paths {
        cmd.arg(flag).arg(p);
    }
    cmd.output().expect("binary runs")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn synth(dir: &Path, observers: &str) {
    ok(&gazeseg(
        &["synth", "--frames", "6", "--size", "72x64", "--radius", "9", "--seed", "3", "--observers", observers],
        &[("--out", dir)],
    ));
}

#[test]
fn synth_segment_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "1");
    assert_eq!(fs::read_dir(data.join("gt")).unwrap().count(), 6);
    let gaze = fs::read_to_string(data.join("gaze_obs0.csv")).unwrap();
    assert_eq!(gaze.lines().count(), 7);

    let out = tmp.path().join("out");
    ok(&gazeseg(
        &["segment", "--seed", "3", "--rounds", "15"],
        &[
            ("--manifest", &data.join("manifest.txt")),
            ("--gaze", &data.join("gaze_obs0.csv")),
            ("--gt", &data.join("gt")),
            ("--out", &out),
        ],
    ));
    let seg_metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!(fs::read_to_string(out.join("config.txt")).unwrap().contains("rounds = 15"));

    let metrics = tmp.path().join("eval.json");
    ok(&gazeseg(
        &["eval"],
        &[
            ("--scores", &out.join("scores.csv")),
            ("--labels", &out.join("labels")),
            ("--gt", &data.join("gt")),
            ("--out", &metrics),
        ],
    ));
    let eval_metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(seg_metrics["auc"], eval_metrics["auc"]);
    assert_eq!(seg_metrics["f_score_at_5fpr"], eval_metrics["f_score_at_5fpr"]);
}

#[test]
fn propagate_writes_epsilon_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "2");
    let out = tmp.path().join("eps");
    ok(&gazeseg(
        &["propagate"],
        &[
            ("--manifest", &data.join("manifest.txt")),
            ("--gaze", &data.join("gaze_obs0.csv")),
            ("--gaze", &data.join("gaze_obs1.csv")),
            ("--out", &out),
        ],
    ));
    let rows = read_scores_csv(&out.join("scores.csv")).unwrap();
    assert!(rows.iter().any(|r| r.is_positive));
    for r in rows {
        assert_eq!(r.score, r.epsilon);
        assert!(if r.is_positive { r.epsilon == 1.0 } else { r.epsilon > 0.0 && r.epsilon < 1.0 });
    }
    assert!(out.join("prob_00005.png").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "1");
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# test\nrounds = 5\nmode = el\nseed = 1\n").unwrap();
    let out = tmp.path().join("out");
    ok(&gazeseg(
        &["segment", "--seed", "2"],
        &[
            ("--config", &cfg),
            ("--manifest", &data.join("manifest.txt")),
            ("--gaze", &data.join("gaze_obs0.csv")),
            ("--out", &out),
        ],
    ));
    let used = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(used.contains("rounds = 5"));
    assert!(used.contains("mode = el"));
    assert!(used.contains("seed = 2"));
    let ensemble: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("ensemble.json")).unwrap()).unwrap();
    assert_eq!(ensemble["stumps"].as_array().unwrap().len(), 5);
}

#[test]
fn errors_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = gazeseg(
        &["segment"],
        &[
            ("--manifest", &tmp.path().join("nope.txt")),
            ("--gaze", &tmp.path().join("g.csv")),
            ("--out", tmp.path()),
        ],
    );
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.txt"));

    let bad_size = gazeseg(&["synth", "--size", "big"], &[("--out", tmp.path())]);
    assert!(!bad_size.status.success());

    let data = tmp.path().join("data");
    synth(&data, "1");
    let bad_mode = gazeseg(
        &["segment", "--mode", "svm"],
        &[
            ("--manifest", &data.join("manifest.txt")),
            ("--gaze", &data.join("gaze_obs0.csv")),
            ("--out", &tmp.path().join("o")),
        ],
    );
    assert!(!bad_mode.status.success());
    assert!(String::from_utf8_lossy(&bad_mode.stderr).contains("svm"));
}
