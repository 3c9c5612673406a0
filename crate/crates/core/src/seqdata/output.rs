//! Pipeline output files.
//!
//! * `prob_NNNNN.png`: 16-bit grayscale probability map per frame.
//! * `labels/labels_NNNNN.png`: 16-bit superpixel label map per frame.
//! * `scores.csv`: `frame,superpixel_id,score,epsilon,is_positive`.
//! * `metrics.json`: evaluation summary, only when ground truth is given.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::superpixels::SuperpixelFrame;

pub type Gray16Image = ImageBuffer<Luma<u16>, Vec<u16>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRow {
    pub frame: usize,
    pub superpixel_id: usize,
    pub score: f64,
    pub epsilon: f64,
    pub is_positive: bool,
}

/// How a score becomes the probability written to the PNG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityLink {
    /// `sigma(2 f)`, the boosting score-to-probability link.
    Logistic,
    /// Score is already a probability.
    Identity,
}

impl ProbabilityLink {
    pub fn apply(self, score: f64) -> f64 {
        match self {
            ProbabilityLink::Logistic => 1.0 / (1.0 + (-2.0 * score).exp()),
            ProbabilityLink::Identity => score.clamp(0.0, 1.0),
        }
    }
}

pub fn probability_to_u16(p: f64) -> u16 {
    (p.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// Per-frame score lookup; errors on the first superpixel without a row.
pub fn scores_by_frame(rows: &[ScoreRow], frames: &[SuperpixelFrame]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Option<f64>>> = frames.iter().map(|f| vec![None; f.len()]).collect();
    for r in rows {
        let slot = out
            .get_mut(r.frame)
            .and_then(|f| f.get_mut(r.superpixel_id))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "score row for unknown superpixel {} in frame {}",
                    r.superpixel_id, r.frame
                ))
            })?;
        *slot = Some(r.score);
    }
    out.into_iter()
        .enumerate()
        .map(|(frame, v)| {
            v.into_iter()
                .enumerate()
                .map(|(id, s)| s.ok_or(Error::MissingScore { frame, id }))
                .collect()
        })
        .collect()
}

pub fn probability_png(frame: &SuperpixelFrame, scores: &[f64], link: ProbabilityLink) -> Gray16Image {
    let values: Vec<u16> = scores.iter().map(|&s| probability_to_u16(link.apply(s))).collect();
    Gray16Image::from_fn(frame.width(), frame.height(), |x, y| {
        Luma([values[frame.label_at(x, y) as usize]])
    })
}

pub fn label_png(frame: &SuperpixelFrame) -> Result<Gray16Image> {
    if frame.len() > u16::MAX as usize + 1 {
        return Err(Error::InvalidInput(format!(
            "{} superpixels do not fit a 16-bit label map",
            frame.len()
        )));
    }
    Ok(Gray16Image::from_fn(frame.width(), frame.height(), |x, y| {
        Luma([frame.label_at(x, y) as u16])
    }))
}

pub fn read_label_png(path: &Path) -> Result<(u32, u32, Vec<u32>)> {
    let img = image::open(path)
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .into_luma16();
    let (w, h) = img.dimensions();
    Ok((w, h, img.into_raw().into_iter().map(u32::from).collect()))
}

/// Binary mask: any nonzero pixel is object.
pub fn read_mask_png(path: &Path) -> Result<(u32, u32, Vec<bool>)> {
    let img = image::open(path)
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .into_luma16();
    let (w, h) = img.dimensions();
    Ok((w, h, img.into_raw().into_iter().map(|v| v != 0).collect()))
}

pub fn mask_png(width: u32, height: u32, mask: &[bool]) -> GrayImage {
    GrayImage::from_fn(width, height, |x, y| {
        Luma([if mask[(y * width + x) as usize] { 255 } else { 0 }])
    })
}

/// PNG files of a directory in lexical order.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn format_scores_csv(rows: &[ScoreRow]) -> String {
    let mut out = String::from("frame,superpixel_id,score,epsilon,is_positive\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.frame,
            r.superpixel_id,
            r.score,
            r.epsilon,
            u8::from(r.is_positive)
        );
    }
    out
}

pub fn parse_scores_csv(text: &str, source: &Path) -> Result<Vec<ScoreRow>> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "frame,superpixel_id,score,epsilon,is_positive" => {}
        _ => return Err(err(1, "missing scores header".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(err(i + 1, format!("expected 5 fields, got {}", f.len())));
        }
        let bad = |what: &str, v: &str| err(i + 1, format!("bad {what} `{v}`"));
        rows.push(ScoreRow {
            frame: f[0].parse().map_err(|_| bad("frame", f[0]))?,
            superpixel_id: f[1].parse().map_err(|_| bad("superpixel_id", f[1]))?,
            score: f[2].parse().map_err(|_| bad("score", f[2]))?,
            epsilon: f[3].parse().map_err(|_| bad("epsilon", f[3]))?,
            is_positive: match f[4] {
                "1" => true,
                "0" => false,
                v => return Err(bad("is_positive", v)),
            },
        });
    }
    Ok(rows)
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoreRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scores_csv(&text, path)
}

pub fn write_metrics_json(metrics: &Metrics, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(metrics).expect("metrics serialize");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn save_png<P>(img: &ImageBuffer<P, Vec<P::Subpixel>>, path: &Path) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
{
    img.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

/// Writes probability maps, label maps, the score table and (optionally)
/// metrics into `out_dir`. Every superpixel needs a score row.
pub fn write_outputs(
    rows: &[ScoreRow],
    frames: &[SuperpixelFrame],
    link: ProbabilityLink,
    metrics: Option<&Metrics>,
    out_dir: &Path,
) -> Result<()> {
    let scores = scores_by_frame(rows, frames)?;
    let labels_dir = out_dir.join("labels");
    fs::create_dir_all(&labels_dir).map_err(|e| Error::io(&labels_dir, e))?;
    for (t, (frame, s)) in frames.iter().zip(&scores).enumerate() {
        save_png(&probability_png(frame, s, link), &out_dir.join(format!("prob_{t:05}.png")))?;
        save_png(&label_png(frame)?, &labels_dir.join(format!("labels_{t:05}.png")))?;
    }
    let csv_path = out_dir.join("scores.csv");
    fs::write(&csv_path, format_scores_csv(rows)).map_err(|e| Error::io(&csv_path, e))?;
    if let Some(m) = metrics {
        write_metrics_json(m, &out_dir.join("metrics.json"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::LabImage;
    use crate::superpixels::segment_frame;
    use proptest::prelude::*;

    fn frame() -> SuperpixelFrame {
        segment_frame(&LabImage::from_fn(32, 32, |_, _| [50.0, 0.0, 0.0]), 16, 10.0).unwrap()
    }

    fn rows_for(frames: &[SuperpixelFrame], score: f64) -> Vec<ScoreRow> {
        frames
            .iter()
            .enumerate()
            .flat_map(|(t, f)| {
                (0..f.len()).map(move |id| ScoreRow {
                    frame: t,
                    superpixel_id: id,
                    score,
                    epsilon: 0.5,
                    is_positive: false,
                })
            })
            .collect()
    }

    #[test]
    fn zero_score_maps_to_mid_gray() {
        let frames = vec![frame()];
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&rows_for(&frames, 0.0), &frames, ProbabilityLink::Logistic, None, dir.path()).unwrap();
        let png = image::open(dir.path().join("prob_00000.png")).unwrap().into_luma16();
        assert!(png.pixels().all(|p| p.0[0] == 32768));
        let (_, _, labels) = read_label_png(&dir.path().join("labels/labels_00000.png")).unwrap();
        assert_eq!(labels, frames[0].labels());
        assert!(!dir.path().join("metrics.json").exists());
    }

    #[test]
    fn missing_score_names_superpixel() {
        let frames = vec![frame(), frame()];
        let mut rows = rows_for(&frames, 0.0);
        rows.retain(|r| !(r.frame == 1 && r.superpixel_id == 2));
        let dir = tempfile::tempdir().unwrap();
        match write_outputs(&rows, &frames, ProbabilityLink::Logistic, None, dir.path()) {
            Err(Error::MissingScore { frame: 1, id: 2 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unwritable_directory() {
        let frames = vec![frame()];
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let res = write_outputs(&rows_for(&frames, 0.0), &frames, ProbabilityLink::Logistic, None, &blocker);
        assert!(matches!(res, Err(Error::Io { .. })));
    }

    #[test]
    fn link_functions() {
        assert_eq!(probability_to_u16(ProbabilityLink::Logistic.apply(0.0)), 32768);
        assert_eq!(probability_to_u16(ProbabilityLink::Logistic.apply(50.0)), 65535);
        assert_eq!(probability_to_u16(ProbabilityLink::Identity.apply(0.25)), 16384);
    }

    proptest! {
        #[test]
        fn scores_csv_round_trip_is_bit_exact(
            raw in proptest::collection::vec((0usize..40, 0usize..400, any::<f64>(), 0.0f64..=1.0, any::<bool>()), 0..60)
        ) {
            let rows: Vec<ScoreRow> = raw
                .into_iter()
                .filter(|r| r.2.is_finite())
                .map(|(frame, superpixel_id, score, epsilon, is_positive)| ScoreRow { frame, superpixel_id, score, epsilon, is_positive })
                .collect();
            let text = format_scores_csv(&rows);
            let back = parse_scores_csv(&text, Path::new("s.csv")).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in back.iter().zip(&rows) {
                prop_assert_eq!(a.score.to_bits(), b.score.to_bits());
                prop_assert_eq!(a.epsilon.to_bits(), b.epsilon.to_bits());
                prop_assert_eq!((a.frame, a.superpixel_id, a.is_positive), (b.frame, b.superpixel_id, b.is_positive));
            }
        }
    }
}
