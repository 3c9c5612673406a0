use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::loss::{eel_gradient, eel_loss, SampleKind};
use super::stump::{Stump, StumpSearch};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::superpixels::SuperpixelRef;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub kind: SampleKind,
}

/// Additive stump model. Every stump enters with weight 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub dim: usize,
    pub rounds: usize,
    pub seed: u64,
    pub base_score: f64,
    pub stumps: Vec<Stump>,
    /// Training loss after each round.
    pub round_losses: Vec<f64>,
}

impl Ensemble {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            rounds: 0,
            seed: 0,
            base_score: 0.0,
            stumps: Vec::new(),
            round_losses: Vec::new(),
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.stumps.iter().fold(self.base_score, |acc, s| acc + s.predict(x))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let e: Ensemble = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("ensemble JSON: {e}")))?;
        if let Some(s) = e.stumps.iter().find(|s| s.feature_index >= e.dim) {
            return Err(Error::InvalidInput(format!(
                "stump uses feature {} of a dim-{} model",
                s.feature_index, e.dim
            )));
        }
        Ok(e)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Gradient boosting on the expected exponential loss: each round fits a
/// least-squares stump to the negative gradient and adds it with weight 1.
pub fn train(samples: &[Sample], rounds: usize, seed: u64) -> Result<Ensemble> {
    if rounds == 0 {
        return Err(Error::Config("boosting needs at least one round".into()));
    }
    if !samples.iter().any(|s| s.kind == SampleKind::Positive) {
        return Err(Error::EmptyPositiveSet);
    }
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.features.as_slice()).collect();
    let kinds: Vec<SampleKind> = samples.iter().map(|s| s.kind).collect();
    let search = StumpSearch::new(&rows)?;

    let mut scores = vec![0.0; samples.len()];
    let mut ensemble = Ensemble {
        dim: search.dim(),
        rounds,
        seed,
        base_score: 0.0,
        stumps: Vec::with_capacity(rounds),
        round_losses: Vec::with_capacity(rounds),
    };
    for _ in 0..rounds {
        let residuals = eel_gradient(&scores, &kinds)?;
        let stump = search.fit(&residuals)?;
        for (f, row) in scores.iter_mut().zip(&rows) {
            *f += stump.predict(row);
        }
        ensemble.stumps.push(stump);
        ensemble.round_losses.push(eel_loss(&scores, &kinds)?);
    }
    Ok(ensemble)
}

/// Raw additive scores for `ids`.
pub fn predict(ensemble: &Ensemble, features: &FeatureTable, ids: &[SuperpixelRef]) -> Result<Vec<f64>> {
    if features.dim() != ensemble.dim {
        return Err(Error::Dimension(format!(
            "model expects dim {}, features have dim {}",
            ensemble.dim,
            features.dim()
        )));
    }
    ids.iter()
        .map(|&id| features.row(id).map(|x| ensemble.score(x)))
        .collect()
}
