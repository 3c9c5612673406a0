use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Sample, SampleKind};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::gazeprop::EpsilonMap;
use crate::superpixels::SuperpixelRef;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub samples: Vec<Sample>,
    /// Superpixel behind each sample.
    pub sample_ids: Vec<SuperpixelRef>,
    /// Unknown superpixels left out of training, in (frame, id) order.
    pub heldout: Vec<SuperpixelRef>,
}

/// Every gazed superpixel as a positive sample plus a seeded uniform draw
/// (without replacement, count rounded up) of `u_fraction` of the rest as
/// unknown samples.
pub fn assemble_training_set(
    epsilon: &[EpsilonMap],
    features: &FeatureTable,
    u_fraction: f64,
    seed: u64,
) -> Result<TrainingSet> {
    if !(u_fraction > 0.0 && u_fraction <= 1.0) {
        return Err(Error::Config(format!("u_fraction {u_fraction} outside (0, 1]")));
    }
    let mut positives = Vec::new();
    let mut unknown = Vec::new();
    for (t, map) in epsilon.iter().enumerate() {
        for (id, &p) in map.positive.iter().enumerate() {
            let r = SuperpixelRef::new(t, id);
            if p {
                positives.push(r);
            } else {
                unknown.push(r);
            }
        }
    }
    if positives.is_empty() {
        return Err(Error::EmptyPositiveSet);
    }

    let take = ((u_fraction * unknown.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let take = take.min(unknown.len());
    let mut shuffled = unknown.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen: Vec<SuperpixelRef> = shuffled[..take].to_vec();
    chosen.sort();
    let mut heldout: Vec<SuperpixelRef> = shuffled[take..].to_vec();
    heldout.sort();

    let mut samples = Vec::with_capacity(positives.len() + chosen.len());
    let mut sample_ids = Vec::with_capacity(samples.capacity());
    for &r in &positives {
        samples.push(Sample {
            features: features.row(r)?.to_vec(),
            kind: SampleKind::Positive,
        });
        sample_ids.push(r);
    }
    for &r in &chosen {
        samples.push(Sample {
            features: features.row(r)?.to_vec(),
            kind: SampleKind::Unknown {
                epsilon: epsilon[r.frame].values[r.id],
            },
        });
        sample_ids.push(r);
    }
    Ok(TrainingSet {
        samples,
        sample_ids,
        heldout,
    })
}
