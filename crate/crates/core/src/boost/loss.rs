use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gazeprop::DELTA;

/// Label status of a training sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SampleKind {
    /// Gazed superpixel, label known to be +1.
    Positive,
    /// Label is Bernoulli with P(+1) = `epsilon`.
    Unknown { epsilon: f64 },
}

impl SampleKind {
    /// Probability that the label is +1.
    pub fn epsilon(self) -> f64 {
        match self {
            SampleKind::Positive => 1.0,
            SampleKind::Unknown { epsilon } => epsilon,
        }
    }

    /// Unknown samples thresholded at 0.5 onto `{DELTA, 1 - DELTA}`.
    pub fn hardened(self) -> SampleKind {
        match self {
            SampleKind::Positive => SampleKind::Positive,
            SampleKind::Unknown { epsilon } => SampleKind::Unknown {
                epsilon: if epsilon >= 0.5 { 1.0 - DELTA } else { DELTA },
            },
        }
    }

    /// Expected exponential loss of score `f` under this label distribution:
    /// `eps * e^-f + (1 - eps) * e^f`.
    #[inline]
    pub fn loss(self, f: f64) -> f64 {
        match self {
            SampleKind::Positive => (-f).exp(),
            SampleKind::Unknown { epsilon } => epsilon * (-f).exp() + (1.0 - epsilon) * f.exp(),
        }
    }

    /// Negative derivative of [`SampleKind::loss`] with respect to `f`.
    #[inline]
    pub fn residual(self, f: f64) -> f64 {
        match self {
            SampleKind::Positive => (-f).exp(),
            SampleKind::Unknown { epsilon } => epsilon * (-f).exp() - (1.0 - epsilon) * f.exp(),
        }
    }

    /// Score minimising the expected loss of a lone sample,
    /// `0.5 * ln(eps / (1 - eps))`.
    pub fn optimal_score(self) -> f64 {
        let e = self.epsilon();
        0.5 * (e / (1.0 - e)).ln()
    }
}

fn check_lengths(scores: &[f64], kinds: &[SampleKind]) -> Result<()> {
    if scores.len() != kinds.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} samples",
            scores.len(),
            kinds.len()
        )));
    }
    Ok(())
}

/// Sum over samples of the expected exponential loss.
pub fn eel_loss(scores: &[f64], kinds: &[SampleKind]) -> Result<f64> {
    check_lengths(scores, kinds)?;
    if let Some(f) = scores.iter().find(|f| !f.is_finite()) {
        return Err(Error::NonFinite(format!("score {f}")));
    }
    Ok(scores.iter().zip(kinds).map(|(&f, k)| k.loss(f)).sum())
}

/// Per-sample negative gradient of [`eel_loss`].
pub fn eel_gradient(scores: &[f64], kinds: &[SampleKind]) -> Result<Vec<f64>> {
    check_lengths(scores, kinds)?;
    Ok(scores.iter().zip(kinds).map(|(&f, k)| k.residual(f)).collect())
}
