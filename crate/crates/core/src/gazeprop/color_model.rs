use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::superpixels::{PositiveSet, SuperpixelFrame, SuperpixelStats};

#[derive(Debug, Clone, PartialEq)]
pub struct ColorComponent {
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    precision: Matrix3<f64>,
}

impl ColorComponent {
    pub fn new(mean: Vector3<f64>, covariance: Matrix3<f64>) -> Result<Self> {
        let precision = covariance
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("color covariance is singular".into()))?;
        Ok(Self {
            mean,
            covariance,
            precision,
        })
    }

    pub fn mahalanobis_sq(&self, x: &Vector3<f64>) -> f64 {
        let d = x - self.mean;
        (d.transpose() * self.precision * d)[(0, 0)]
    }

    /// Gaussian kernel without its normalising constant, in (0, 1].
    pub fn kernel(&self, x: &Vector3<f64>) -> f64 {
        (-0.5 * self.mahalanobis_sq(x).max(0.0)).exp()
    }
}

/// One Lab Gaussian per gazed superpixel, in (frame, id) order.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeColorModel {
    pub components: Vec<ColorComponent>,
}

impl GazeColorModel {
    pub fn new(components: Vec<ColorComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyPositiveSet);
        }
        Ok(Self { components })
    }

    /// Max over components of the unnormalised kernel.
    pub fn probability(&self, x: &Vector3<f64>) -> f64 {
        self.components
            .iter()
            .map(|c| c.kernel(x))
            .fold(0.0, f64::max)
    }
}

pub fn build_color_model(positive: &PositiveSet, frames: &[SuperpixelFrame]) -> Result<GazeColorModel> {
    let components = positive
        .iter()
        .map(|r| {
            let s = frames
                .get(r.frame)
                .and_then(|f| f.stats.get(r.id))
                .ok_or_else(|| Error::Dimension(format!("positive superpixel {r:?} not in decomposition")))?;
            ColorComponent::new(s.mean_lab, s.cov_lab)
        })
        .collect::<Result<Vec<_>>>()?;
    GazeColorModel::new(components)
}

/// P_0 for one frame: color-model probability at each superpixel's mean Lab,
/// with `gazed` ids fixed to 1.
pub fn initial_probabilities(stats: &[SuperpixelStats], model: &GazeColorModel, gazed: &[usize]) -> Vec<f64> {
    let mut p: Vec<f64> = stats.iter().map(|s| model.probability(&s.mean_lab)).collect();
    for &g in gazed {
        p[g] = 1.0;
    }
    p
}
