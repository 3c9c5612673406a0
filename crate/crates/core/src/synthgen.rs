//! Synthetic moving-blob sequences with ground-truth masks and simulated
//! gaze traces.
//!
//! All randomness comes from ChaCha8 streams of one seed: stream 0 draws the
//! image noise, stream `k + 1` draws the jitter of observer `k`. Adding
//! observers therefore never changes the earlier traces.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seqdata::output::mask_png;
use crate::seqdata::{write_gaze_csv, write_sequence, GazePoint, GazeTrace, ImageSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    /// Constant-speed segment.
    Linear { start: [f64; 2], end: [f64; 2] },
    /// `turns` revolutions around `center`.
    Circle { center: [f64; 2], radius: f64, turns: f64 },
}

impl Trajectory {
    /// Position at `s` in [0, 1].
    pub fn at(&self, s: f64) -> [f64; 2] {
        match *self {
            Trajectory::Linear { start, end } => [start[0] + s * (end[0] - start[0]), start[1] + s * (end[1] - start[1])],
            Trajectory::Circle { center, radius, turns } => {
                let a = 2.0 * PI * turns * s;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub frames: usize,
    pub width: u32,
    pub height: u32,
    pub radius: f64,
    pub trajectory: Trajectory,
    /// Per-channel Gaussian noise, in gray levels.
    pub noise_sigma: f64,
    pub jitter_sigma: f64,
    /// Probability of a gaze point landing uniformly anywhere in the frame.
    pub noncompliant: f64,
    pub background: [u8; 3],
    pub blob: [u8; 3],
    pub seed: u64,
}

impl SynthSpec {
    /// Blob circling the frame centre once over the sequence.
    pub fn circling(frames: usize, width: u32, height: u32, radius: f64, seed: u64) -> Self {
        let (w, h) = (width as f64, height as f64);
        let orbit = (0.25 * w.min(h)).min(0.5 * w.min(h) - radius - 2.0).max(0.0);
        Self {
            frames,
            width,
            height,
            radius,
            trajectory: Trajectory::Circle {
                center: [(w - 1.0) / 2.0, (h - 1.0) / 2.0],
                radius: orbit,
                turns: 1.0,
            },
            noise_sigma: 4.0,
            jitter_sigma: 2.0,
            noncompliant: 0.0,
            background: [96, 112, 104],
            blob: [196, 72, 60],
            seed,
        }
    }

    pub fn center(&self, frame: usize) -> [f64; 2] {
        let s = if self.frames > 1 {
            frame as f64 / (self.frames - 1) as f64
        } else {
            0.0
        };
        self.trajectory.at(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("synthetic sequence needs frames and pixels".into()));
        }
        if self.radius.is_nan() || self.radius < 2.0 {
            return Err(Error::InvalidInput(format!("blob radius {} below 2 px", self.radius)));
        }
        if !(self.noise_sigma >= 0.0 && self.jitter_sigma >= 0.0 && (0.0..=1.0).contains(&self.noncompliant)) {
            return Err(Error::InvalidInput("noise, jitter and noncompliance must be nonnegative".into()));
        }
        for t in 0..self.frames {
            let [cx, cy] = self.center(t);
            if cx - self.radius < 0.0
                || cy - self.radius < 0.0
                || cx + self.radius > (self.width - 1) as f64
                || cy + self.radius > (self.height - 1) as f64
            {
                return Err(Error::InvalidInput(format!(
                    "blob leaves the frame at frame {t} (center {cx:.1},{cy:.1})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub sequence: ImageSequence,
    pub masks: Vec<Vec<bool>>,
    pub trace: GazeTrace,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn disk_mask(spec: &SynthSpec, frame: usize) -> Vec<bool> {
    let [cx, cy] = spec.center(frame);
    let r2 = spec.radius * spec.radius;
    let (w, h) = (spec.width as usize, spec.height as usize);
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            (x - cx).powi(2) + (y - cy).powi(2) <= r2
        })
        .collect()
}

fn observer_trace(spec: &SynthSpec, k: usize) -> GazeTrace {
    let mut rng = stream(spec.seed, k as u64 + 1);
    let jitter = Normal::new(0.0, spec.jitter_sigma.max(0.0)).expect("finite jitter");
    // a gaze point within this distance of the center lies in a mask pixel
    let inner = (spec.radius - 1.5).max(0.0);
    let mut trace = GazeTrace::new(format!("obs{k}"));
    for t in 0..spec.frames {
        let [cx, cy] = spec.center(t);
        let (dx, dy) = (jitter.sample(&mut rng), jitter.sample(&mut rng));
        let off_target = spec.noncompliant > 0.0 && rng.random::<f64>() < spec.noncompliant;
        let (x, y) = if off_target {
            (
                rng.random::<f64>() * spec.width as f64,
                rng.random::<f64>() * spec.height as f64,
            )
        } else {
            let d = (dx * dx + dy * dy).sqrt();
            let scale = if d > inner { inner / d } else { 1.0 };
            (cx + dx * scale, cy + dy * scale)
        };
        trace.points.push(GazePoint { frame: t, x, y });
    }
    trace
}

/// Frames, masks, and the first observer's trace.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = stream(spec.seed, 0);
    let noise = Normal::new(0.0, spec.noise_sigma).expect("finite noise");
    let mut frames = Vec::with_capacity(spec.frames);
    let mut masks = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let mask = disk_mask(spec, t);
        let mut img = RgbImage::new(spec.width, spec.height);
        for (i, px) in img.pixels_mut().enumerate() {
            let base = if mask[i] { spec.blob } else { spec.background };
            let mut c = [0u8; 3];
            for ch in 0..3 {
                c[ch] = (base[ch] as f64 + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
            }
            *px = Rgb(c);
        }
        frames.push(img);
        masks.push(mask);
    }
    Ok(SynthOutput {
        sequence: ImageSequence::new(frames)?,
        masks,
        trace: observer_trace(spec, 0),
    })
}

pub fn generate_observers(spec: &SynthSpec, k: usize) -> Result<Vec<GazeTrace>> {
    spec.validate()?;
    if k == 0 {
        return Err(Error::InvalidInput("need at least one observer".into()));
    }
    Ok((0..k).map(|i| observer_trace(spec, i)).collect())
}

/// Writes `frame_NNNNN.png` + `manifest.txt`, `gt/mask_NNNNN.png` and one
/// `gaze_obsK.csv` per trace into `dir`.
pub fn write_synth(output: &SynthOutput, traces: &[GazeTrace], dir: &Path) -> Result<()> {
    write_sequence(&output.sequence, dir)?;
    let gt = dir.join("gt");
    fs::create_dir_all(&gt).map_err(|e| Error::io(&gt, e))?;
    let (w, h) = (output.sequence.width(), output.sequence.height());
    for (t, m) in output.masks.iter().enumerate() {
        let p = gt.join(format!("mask_{t:05}.png"));
        mask_png(w, h, m).save(&p).map_err(|e| Error::Decode {
            path: p.clone(),
            message: e.to_string(),
        })?;
    }
    for tr in traces {
        write_gaze_csv(std::slice::from_ref(tr), &dir.join(format!("gaze_{}.csv", tr.observer_id)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SynthSpec {
        SynthSpec::circling(6, 64, 48, 8.0, 42)
    }

    fn inside_mask(out: &SynthOutput, tr: &GazeTrace) -> bool {
        let w = out.sequence.width() as usize;
        tr.points.iter().all(|p| {
            let (x, y) = p.pixel();
            out.masks[p.frame][y as usize * w + x as usize]
        })
    }

    #[test]
    fn zero_jitter_hits_centers() {
        let mut s = spec();
        s.jitter_sigma = 0.0;
        let out = generate(&s).unwrap();
        for p in &out.trace.points {
            assert_eq!([p.x, p.y], s.center(p.frame));
        }
        assert!(inside_mask(&out, &out.trace));
    }

    #[test]
    fn single_frame() {
        let mut s = spec();
        s.frames = 1;
        let out = generate(&s).unwrap();
        assert_eq!(out.sequence.frame_count(), 1);
        assert_eq!(out.trace.points.len(), 1);
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&spec()).unwrap(), generate(&spec()).unwrap());
    }

    #[test]
    fn observers_share_stream_prefix() {
        let s = spec();
        let seven = generate_observers(&s, 7).unwrap();
        let three = generate_observers(&s, 3).unwrap();
        assert_eq!(seven.len(), 7);
        assert_eq!(&seven[..3], &three[..]);
        assert_eq!(seven[0], generate(&s).unwrap().trace);
        for i in 0..7 {
            for j in i + 1..7 {
                assert_ne!(seven[i].points, seven[j].points);
            }
        }
        let out = generate(&s).unwrap();
        assert!(seven.iter().all(|t| inside_mask(&out, t)));
    }

    #[test]
    fn heavy_jitter_still_compliant() {
        let mut s = spec();
        s.jitter_sigma = 30.0;
        let out = generate(&s).unwrap();
        for t in generate_observers(&s, 4).unwrap() {
            assert!(inside_mask(&out, &t));
        }
    }

    #[test]
    fn mask_area_close_to_disk() {
        let s = spec();
        let out = generate(&s).unwrap();
        let disk = PI * s.radius * s.radius;
        for m in &out.masks {
            let area = m.iter().filter(|&&v| v).count() as f64;
            assert!((area - disk).abs() <= 4.0 * s.radius, "{area} vs {disk}");
        }
    }

    #[test]
    fn blob_leaving_frame_is_rejected() {
        let mut s = spec();
        s.trajectory = Trajectory::Linear {
            start: [10.0, 10.0],
            end: [70.0, 10.0],
        };
        assert!(generate(&s).is_err());
    }

    #[test]
    fn noncompliant_points_can_leave_target() {
        let mut s = spec();
        s.noncompliant = 1.0;
        s.frames = 20;
        let out = generate(&s).unwrap();
        assert!(!inside_mask(&out, &out.trace));
    }
}
