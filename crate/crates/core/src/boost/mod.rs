//! Gradient boosting of decision stumps under the Expected Exponential Loss.
//!
//! Gazed superpixels are positive samples with loss `e^-f`. Every other
//! training superpixel has an unknown label drawn from Bernoulli(eps), so its
//! loss is the expectation `eps * e^-f + (1 - eps) * e^f`. Boosting regresses
//! stumps on the negative gradient of the summed loss, with unit step and no
//! shrinkage.

mod ensemble;
mod loss;
mod stump;
mod training_set;

pub use ensemble::{predict, train, Ensemble, Sample};
pub use loss::{eel_gradient, eel_loss, SampleKind};
pub use stump::{fit_stump, Stump, StumpSearch, EXACT_SEARCH_MAX_SAMPLES, QUANTILE_THRESHOLDS};
pub use training_set::{assemble_training_set, TrainingSet};
