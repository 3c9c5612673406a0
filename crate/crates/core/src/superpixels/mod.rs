//! Per-frame superpixel decomposition, per-superpixel statistics, and the
//! mapping of gaze points onto the positive set.

mod slic;
mod stats;

use std::collections::BTreeSet;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::seqdata::GazeTrace;

pub use slic::{segment_frame, segment_labels, SLIC_ITERATIONS};
pub use stats::{compute_stats, orientation_from_structure, COVARIANCE_RIDGE};

/// Identifies one superpixel in the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SuperpixelRef {
    pub frame: usize,
    pub id: usize,
}

impl SuperpixelRef {
    pub fn new(frame: usize, id: usize) -> Self {
        Self { frame, id }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelStats {
    /// (x, y) in pixels.
    pub centroid: [f64; 2],
    pub mean_lab: Vector3<f64>,
    /// Sample covariance plus `COVARIANCE_RIDGE * I`.
    pub cov_lab: Matrix3<f64>,
    /// Mean orientation in [0, pi).
    pub theta: f64,
    pub pixel_count: usize,
}

/// Label map of one frame together with the statistics of each label.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelFrame {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    pub stats: Vec<SuperpixelStats>,
}

impl SuperpixelFrame {
    pub fn new(width: u32, height: u32, labels: Vec<u32>, stats: Vec<SuperpixelStats>) -> Self {
        assert_eq!(labels.len(), width as usize * height as usize);
        Self {
            width,
            height,
            labels,
            stats,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label_at(&self, x: u32, y: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }
}

/// Superpixels that contain at least one gaze point (the set P).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PositiveSet {
    pub members: BTreeSet<SuperpixelRef>,
}

impl PositiveSet {
    pub fn contains(&self, r: SuperpixelRef) -> bool {
        self.members.contains(&r)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = SuperpixelRef> + '_ {
        self.members.iter().copied()
    }

    pub fn union(&self, other: &PositiveSet) -> PositiveSet {
        PositiveSet {
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    /// Ids in `frame`, ascending.
    pub fn in_frame(&self, frame: usize) -> impl Iterator<Item = usize> + '_ {
        self.members
            .range(SuperpixelRef::new(frame, 0)..SuperpixelRef::new(frame + 1, 0))
            .map(|r| r.id)
    }
}

/// Union over observers of the superpixels containing each gaze point.
/// Points outside the decomposition are ignored.
pub fn map_gaze(traces: &[GazeTrace], frames: &[SuperpixelFrame]) -> PositiveSet {
    let mut members = BTreeSet::new();
    for trace in traces {
        for p in &trace.points {
            let Some(frame) = frames.get(p.frame) else { continue };
            let (x, y) = p.pixel();
            if p.x < 0.0 || p.y < 0.0 || x >= frame.width() || y >= frame.height() {
                continue;
            }
            members.insert(SuperpixelRef::new(p.frame, frame.label_at(x, y) as usize));
        }
    }
    PositiveSet { members }
}
