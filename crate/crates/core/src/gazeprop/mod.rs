//! Object-probability estimation for the unknown superpixels.
//!
//! A global color model is built from every gazed superpixel (one Lab
//! Gaussian each). Each frame then gets initial probabilities from that model
//! and a sparse affinity graph over its superpixels (orientation similarity
//! times centroid proximity, cut at `tau` pixels). The probabilities are
//! diffused for a fixed number of iterations with gazed superpixels pinned
//! at 1. Several observers are combined by averaging their maps and taking
//! the union of their gazed sets.

mod color_model;
mod flow;
mod graph;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::superpixels::{PositiveSet, SuperpixelFrame};

pub use color_model::{build_color_model, initial_probabilities, ColorComponent, GazeColorModel};
pub use flow::{
    decode_flo, encode_flo, flow_file_name, flow_orientations, load_flow_dir, read_flo, write_flo, FlowField,
};
pub use graph::{
    affinity_weight, angle_difference, build_affinity, diffuse, diffuse_with, AffinityGraph, AffinityParams,
    DELTA,
};

/// Per-superpixel object probability of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonMap {
    pub values: Vec<f64>,
    pub positive: Vec<bool>,
}

impl EpsilonMap {
    /// Checks that gazed entries are exactly 1 and the others lie in
    /// `[DELTA, 1 - DELTA]`.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.positive.len() {
            return Err(Error::Dimension("epsilon values and flags differ in length".into()));
        }
        for (i, (&v, &p)) in self.values.iter().zip(&self.positive).enumerate() {
            let ok = if p { v == 1.0 } else { (DELTA..=1.0 - DELTA).contains(&v) };
            if !ok {
                return Err(Error::InvalidInput(format!("epsilon {v} at superpixel {i} (gazed: {p})")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    pub alpha: f64,
    pub affinity: AffinityParams,
    pub iterations: usize,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            affinity: AffinityParams {
                sigma_a: 0.5,
                sigma_d: 50.0,
                tau: 50.0,
                squared: false,
            },
            iterations: 10,
        }
    }
}

/// Epsilon maps for every frame from one positive set. The color model is
/// global, so frames without a gazed superpixel still get estimates.
pub fn estimate_epsilon(
    frames: &[SuperpixelFrame],
    positive: &PositiveSet,
    params: &PropagationParams,
) -> Result<Vec<EpsilonMap>> {
    let model = build_color_model(positive, frames)?;
    frames
        .par_iter()
        .enumerate()
        .map(|(t, frame)| {
            let gazed: Vec<usize> = positive.in_frame(t).collect();
            let p0 = initial_probabilities(&frame.stats, &model, &gazed);
            let graph = build_affinity(&frame.stats, &params.affinity)?;
            let values = diffuse(&graph, &p0, &gazed, params.alpha, params.iterations)?;
            let mut flags = vec![false; frame.len()];
            for g in gazed {
                flags[g] = true;
            }
            let map = EpsilonMap {
                values,
                positive: flags,
            };
            map.validate()?;
            Ok(map)
        })
        .collect()
}

/// Elementwise mean over observers; superpixels gazed by any observer are
/// then set to 1.
pub fn aggregate_observers(per_observer: &[Vec<EpsilonMap>]) -> Result<Vec<EpsilonMap>> {
    let first = per_observer
        .first()
        .ok_or_else(|| Error::InvalidInput("no observers to aggregate".into()))?;
    let k = per_observer.len() as f64;
    let mut out = Vec::with_capacity(first.len());
    for t in 0..first.len() {
        let n = first[t].len();
        let mut sum = vec![0.0; n];
        let mut positive = vec![false; n];
        for maps in per_observer {
            let m = maps
                .get(t)
                .filter(|m| m.len() == n && maps.len() == first.len())
                .ok_or_else(|| Error::Dimension(format!("observers disagree on frame {t}")))?;
            for i in 0..n {
                sum[i] += m.values[i];
                positive[i] |= m.positive[i];
            }
        }
        let values = sum
            .into_iter()
            .zip(&positive)
            .map(|(s, &p)| if p { 1.0 } else { s / k })
            .collect();
        let map = EpsilonMap { values, positive };
        map.validate()?;
        out.push(map);
    }
    Ok(out)
}
