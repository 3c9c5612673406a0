//! Per-superpixel descriptors for the classifier.
//!
//! The built-in descriptor samples square patches of several sizes centred on
//! each superpixel centroid (borders replicated). Per scale it records the
//! Lab mean and standard deviation (6 values) and an 8-bin, magnitude-weighted,
//! L1-normalised histogram of Sobel gradient directions on the L channel
//! (8 values). Bin `k` is centred on direction `k * pi / 4`, so a vertical
//! edge puts its mass in bins 0 and 4. A patch with no gradient gets a uniform
//! histogram.
//!
//! Externally computed vectors can be supplied instead through the binary
//! format read by [`load_precomputed`].

mod precomputed;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gradient::{sobel, Gradients};
use crate::seqdata::LabImage;
use crate::superpixels::{SuperpixelFrame, SuperpixelRef};

pub use precomputed::{decode_precomputed, encode_precomputed, load_precomputed, write_precomputed, FEATURE_MAGIC};

pub const DEFAULT_SCALES: [u32; 3] = [16, 32, 64];
pub const HISTOGRAM_BINS: usize = 8;
pub const VALUES_PER_SCALE: usize = 6 + HISTOGRAM_BINS;

/// One feature row per superpixel of the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    index: BTreeMap<SuperpixelRef, usize>,
    data: Vec<f64>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            index: BTreeMap::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn insert(&mut self, key: SuperpixelRef, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Dimension(format!("row of length {} in a dim-{} table", row.len(), self.dim)));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature value {v} for superpixel {key:?}")));
        }
        match self.index.get(&key) {
            Some(&slot) => self.data[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(row),
            None => {
                self.index.insert(key, self.index.len());
                self.data.extend_from_slice(row);
            }
        }
        Ok(())
    }

    pub fn get(&self, key: SuperpixelRef) -> Option<&[f64]> {
        self.index
            .get(&key)
            .map(|&slot| &self.data[slot * self.dim..(slot + 1) * self.dim])
    }

    pub fn row(&self, key: SuperpixelRef) -> Result<&[f64]> {
        self.get(key).ok_or(Error::MissingFeatureRow {
            frame: key.frame,
            id: key.id,
        })
    }

    /// Rows in (frame, id) order.
    pub fn iter(&self) -> impl Iterator<Item = (SuperpixelRef, &[f64])> + '_ {
        self.index
            .iter()
            .map(|(&k, &slot)| (k, &self.data[slot * self.dim..(slot + 1) * self.dim]))
    }

    /// Errors on the first superpixel of `frames` that has no row.
    pub fn check_complete(&self, frames: &[SuperpixelFrame]) -> Result<()> {
        for (t, f) in frames.iter().enumerate() {
            for id in 0..f.len() {
                self.row(SuperpixelRef::new(t, id))?;
            }
        }
        Ok(())
    }
}

fn direction_bin(gx: f64, gy: f64) -> usize {
    let angle = gy.atan2(gx).rem_euclid(2.0 * PI);
    let width = 2.0 * PI / HISTOGRAM_BINS as f64;
    (((angle + width / 2.0) / width).floor() as usize) % HISTOGRAM_BINS
}

/// Descriptor at `centroid` using precomputed gradients of `image`'s L channel.
pub fn extract_pyramid_with(
    image: &LabImage,
    gradients: &Gradients,
    centroid: [f64; 2],
    scales: &[u32],
) -> Vec<f64> {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let cx = centroid[0].round() as i64;
    let cy = centroid[1].round() as i64;
    let mut out = Vec::with_capacity(scales.len() * VALUES_PER_SCALE);
    for &s in scales {
        let s = s.max(1) as i64;
        let x0 = cx - s / 2;
        let y0 = cy - s / 2;
        let n = (s * s) as f64;
        let mut sum = [0.0f64; 3];
        let mut sum_sq = [0.0f64; 3];
        let mut hist = [0.0f64; HISTOGRAM_BINS];
        for y in y0..y0 + s {
            let yy = y.clamp(0, h - 1) as u32;
            for x in x0..x0 + s {
                let xx = x.clamp(0, w - 1) as u32;
                let p = image.get(xx, yy);
                for c in 0..3 {
                    sum[c] += p[c];
                    sum_sq[c] += p[c] * p[c];
                }
                let (gx, gy) = gradients.at(xx, yy);
                let mag = (gx * gx + gy * gy).sqrt();
                if mag > 0.0 {
                    hist[direction_bin(gx, gy)] += mag;
                }
            }
        }
        out.extend(sum.iter().map(|s| s / n));
        for c in 0..3 {
            let mean = sum[c] / n;
            out.push((sum_sq[c] / n - mean * mean).max(0.0).sqrt());
        }
        let total: f64 = hist.iter().sum();
        if total > 0.0 {
            out.extend(hist.iter().map(|v| v / total));
        } else {
            out.extend(std::iter::repeat_n(1.0 / HISTOGRAM_BINS as f64, HISTOGRAM_BINS));
        }
    }
    out
}

pub fn extract_pyramid(image: &LabImage, centroid: [f64; 2], scales: &[u32]) -> Vec<f64> {
    let g = sobel(&image.luminance(), image.width(), image.height());
    extract_pyramid_with(image, &g, centroid, scales)
}

/// Descriptor table for every superpixel of the sequence.
pub fn pyramid_features(images: &[LabImage], frames: &[SuperpixelFrame], scales: &[u32]) -> Result<FeatureTable> {
    if images.len() != frames.len() {
        return Err(Error::Dimension("image and superpixel frame counts differ".into()));
    }
    let per_frame: Vec<Vec<Vec<f64>>> = images
        .par_iter()
        .zip(frames.par_iter())
        .map(|(img, frame)| {
            let g = sobel(&img.luminance(), img.width(), img.height());
            frame
                .stats
                .iter()
                .map(|s| extract_pyramid_with(img, &g, s.centroid, scales))
                .collect()
        })
        .collect();
    let mut table = FeatureTable::new(scales.len() * VALUES_PER_SCALE);
    for (t, rows) in per_frame.into_iter().enumerate() {
        for (id, row) in rows.into_iter().enumerate() {
            table.insert(SuperpixelRef::new(t, id), &row)?;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist(v: &[f64], scale: usize) -> &[f64] {
        let o = scale * VALUES_PER_SCALE + 6;
        &v[o..o + HISTOGRAM_BINS]
    }

    #[test]
    fn constant_image() {
        let img = LabImage::from_fn(40, 40, |_, _| [30.0, -4.0, 12.0]);
        let v = extract_pyramid(&img, [20.0, 20.0], &DEFAULT_SCALES);
        assert_eq!(v.len(), 42);
        for s in 0..3 {
            let o = s * VALUES_PER_SCALE;
            assert_eq!(&v[o..o + 3], &[30.0, -4.0, 12.0]);
            assert!(v[o + 3..o + 6].iter().all(|&x| x == 0.0));
            assert!(hist(&v, s).iter().all(|&x| x == 0.125));
        }
    }

    #[test]
    fn corner_centroid_clamps() {
        let img = LabImage::from_fn(20, 10, |x, y| [(x * 3 + y) as f64, 1.0, 2.0]);
        let v = extract_pyramid(&img, [0.0, 0.0], &DEFAULT_SCALES);
        assert_eq!(v.len(), 42);
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn vertical_edge_fills_horizontal_bins() {
        let img = LabImage::from_fn(64, 64, |x, _| if x < 32 { [20.0, 0.0, 0.0] } else { [70.0, 0.0, 0.0] });
        let v = extract_pyramid(&img, [32.0, 32.0], &[16]);
        let h = hist(&v, 0);
        assert!((h[0] + h[4] - 1.0).abs() < 1e-12, "{h:?}");
        assert!(h[0] > 0.99);
    }

    #[test]
    fn bin_layout() {
        assert_eq!(direction_bin(1.0, 0.0), 0);
        assert_eq!(direction_bin(-1.0, 0.0), 4);
        assert_eq!(direction_bin(0.0, 1.0), 2);
        assert_eq!(direction_bin(1.0, -0.01), 0);
        assert_eq!(direction_bin(1.0, -1.0), 7);
    }

    #[test]
    fn table_completeness() {
        let img = LabImage::from_fn(32, 32, |x, y| [(x ^ y) as f64, 0.0, 0.0]);
        let frame = crate::superpixels::segment_frame(&img, 16, 10.0).unwrap();
        let t = pyramid_features(std::slice::from_ref(&img), std::slice::from_ref(&frame), &DEFAULT_SCALES).unwrap();
        assert_eq!(t.len(), frame.len());
        t.check_complete(std::slice::from_ref(&frame)).unwrap();
        assert!(matches!(
            t.check_complete(&[frame.clone(), frame]),
            Err(Error::MissingFeatureRow { frame: 1, id: 0 })
        ));
    }

    proptest! {
        #[test]
        fn translation_consistent(seed in proptest::collection::vec(0.0f64..100.0, 400), dx in 0u32..10, dy in 0u32..10) {
            let base = |x: u32, y: u32| -> [f64; 3] {
                let v = seed[((x * 7 + y * 13) % 400) as usize];
                [v, v * 0.3 - 10.0, (x as f64 * 0.7).sin() * 5.0]
            };
            let a = LabImage::from_fn(120, 120, &base);
            let b = LabImage::from_fn(120, 120, |x, y| base(x.wrapping_sub(dx).min(500), y.wrapping_sub(dy).min(500)));
            let va = extract_pyramid(&a, [50.0, 50.0], &[8, 16]);
            let vb = extract_pyramid(&b, [50.0 + dx as f64, 50.0 + dy as f64], &[8, 16]);
            for (x, y) in va.iter().zip(&vb) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            for s in 0..2 {
                prop_assert!((hist(&va, s).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
