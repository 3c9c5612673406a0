use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::SuperpixelStats;
use crate::gradient::sobel;
use crate::seqdata::LabImage;

/// Ridge added to every color covariance so flat superpixels stay invertible.
pub const COVARIANCE_RIDGE: f64 = 1e-3;

/// Orientation of a summed double-angle structure vector
/// `(sum gx^2 - gy^2, sum 2 gx gy)`, folded to [0, pi). Zero vector gives 0.
pub fn orientation_from_structure(cos2: f64, sin2: f64) -> f64 {
    if cos2 == 0.0 && sin2 == 0.0 {
        return 0.0;
    }
    let mut theta = 0.5 * sin2.atan2(cos2);
    if theta < 0.0 {
        theta += PI;
    }
    if theta >= PI {
        theta -= PI;
    }
    theta
}

/// Statistics for labels `0..=max(labels)`. Every label must own at least
/// one pixel.
pub fn compute_stats(image: &LabImage, labels: &[u32]) -> Vec<SuperpixelStats> {
    let (w, h) = (image.width(), image.height());
    assert_eq!(labels.len(), w as usize * h as usize);
    let n = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);

    let mut count = vec![0usize; n];
    let mut sum_xy = vec![[0.0f64; 2]; n];
    let mut sum_lab = vec![Vector3::<f64>::zeros(); n];
    let pixels = image.pixels();
    for (i, &l) in labels.iter().enumerate() {
        let l = l as usize;
        count[l] += 1;
        sum_xy[l][0] += (i % w as usize) as f64;
        sum_xy[l][1] += (i / w as usize) as f64;
        sum_lab[l] += Vector3::from(pixels[i]);
    }
    assert!(count.iter().all(|&c| c > 0), "label numbering must be contiguous");

    let means: Vec<Vector3<f64>> = sum_lab
        .iter()
        .zip(&count)
        .map(|(s, &c)| s / c as f64)
        .collect();

    let grad = sobel(&image.luminance(), w, h);
    let mut scatter = vec![Matrix3::<f64>::zeros(); n];
    let mut structure = vec![[0.0f64; 2]; n];
    for (i, &l) in labels.iter().enumerate() {
        let l = l as usize;
        let d = Vector3::from(pixels[i]) - means[l];
        scatter[l] += d * d.transpose();
        let (gx, gy) = (grad.gx[i], grad.gy[i]);
        structure[l][0] += gx * gx - gy * gy;
        structure[l][1] += 2.0 * gx * gy;
    }

    (0..n)
        .map(|l| {
            let c = count[l];
            let cov = if c > 1 {
                scatter[l] / (c - 1) as f64
            } else {
                Matrix3::zeros()
            };
            SuperpixelStats {
                centroid: [sum_xy[l][0] / c as f64, sum_xy[l][1] / c as f64],
                mean_lab: means[l],
                cov_lab: cov + Matrix3::identity() * COVARIANCE_RIDGE,
                theta: orientation_from_structure(structure[l][0], structure[l][1]),
                pixel_count: c,
            }
        })
        .collect()
}
