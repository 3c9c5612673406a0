use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many samples, thresholds come from quantiles instead of every
/// midpoint between distinct values.
pub const EXACT_SEARCH_MAX_SAMPLES: usize = 64;
pub const QUANTILE_THRESHOLDS: usize = 33;

/// Depth-one regression tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature_index: usize,
    pub threshold: f64,
    /// Response where `x[feature_index] < threshold`.
    pub left_value: f64,
    pub right_value: f64,
}

impl Stump {
    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        if x[self.feature_index] < self.threshold {
            self.left_value
        } else {
            self.right_value
        }
    }
}

#[derive(Debug, Clone)]
struct Column {
    /// Sample indices sorted by value (stable).
    order: Vec<usize>,
    /// Candidate splits: (number of samples left of the split, threshold).
    splits: Vec<(usize, f64)>,
    min_value: f64,
}

/// Reusable split search over a fixed sample set: sorting and candidate
/// thresholds are computed once, each fit only rescans residual sums.
#[derive(Debug, Clone)]
pub struct StumpSearch {
    n: usize,
    columns: Vec<Column>,
}

impl StumpSearch {
    pub fn new(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("stump search needs at least one sample".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("feature dimension is 0".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("feature rows differ in length".into()));
        }
        let columns = (0..dim)
            .into_par_iter()
            .map(|d| {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| rows[a][d].total_cmp(&rows[b][d]));
                let sorted: Vec<f64> = order.iter().map(|&i| rows[i][d]).collect();
                Column {
                    splits: candidate_splits(&sorted),
                    min_value: sorted[0],
                    order,
                }
            })
            .collect();
        Ok(Self { n, columns })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Least-squares stump for `residuals`. Ties go to the lowest feature,
    /// then the lowest threshold.
    pub fn fit(&self, residuals: &[f64]) -> Result<Stump> {
        if residuals.len() != self.n {
            return Err(Error::Dimension(format!(
                "{} residuals for {} samples",
                residuals.len(),
                self.n
            )));
        }
        let total: f64 = residuals.iter().sum();
        let total_sq: f64 = residuals.iter().map(|r| r * r).sum();
        let tol = 64.0 * f64::EPSILON * total_sq;

        let per_dim: Vec<Option<(f64, Stump)>> = self
            .columns
            .par_iter()
            .enumerate()
            .map(|(d, col)| {
                let mut best: Option<(f64, Stump)> = None;
                let mut left_sum = 0.0;
                let mut taken = 0;
                for &(k, thr) in &col.splits {
                    while taken < k {
                        left_sum += residuals[col.order[taken]];
                        taken += 1;
                    }
                    let nl = k as f64;
                    let nr = (self.n - k) as f64;
                    let right_sum = total - left_sum;
                    let sse = total_sq - left_sum * left_sum / nl - right_sum * right_sum / nr;
                    if best.as_ref().is_none_or(|(b, _)| sse < b - tol) {
                        best = Some((
                            sse,
                            Stump {
                                feature_index: d,
                                threshold: thr,
                                left_value: left_sum / nl,
                                right_value: right_sum / nr,
                            },
                        ));
                    }
                }
                best
            })
            .collect();

        let mut best: Option<(f64, Stump)> = None;
        for cand in per_dim.into_iter().flatten() {
            if best.as_ref().is_none_or(|(b, _)| cand.0 < b - tol) {
                best = Some(cand);
            }
        }
        Ok(match best {
            Some((_, s)) => s,
            None => {
                // every feature constant: no split exists
                let mean = total / self.n as f64;
                Stump {
                    feature_index: 0,
                    threshold: self.columns[0].min_value,
                    left_value: mean,
                    right_value: mean,
                }
            }
        })
    }
}

/// Splits of a sorted column. Exact mode uses the midpoint between each pair
/// of consecutive distinct values; otherwise up to `QUANTILE_THRESHOLDS`
/// quantile values serve as thresholds. Splits leaving a side empty are
/// dropped.
fn candidate_splits(sorted: &[f64]) -> Vec<(usize, f64)> {
    let n = sorted.len();
    let mut splits = Vec::new();
    if n <= EXACT_SEARCH_MAX_SAMPLES {
        for k in 1..n {
            if sorted[k] > sorted[k - 1] {
                splits.push((k, 0.5 * (sorted[k - 1] + sorted[k])));
            }
        }
    } else {
        let mut last = f64::NEG_INFINITY;
        for q in 0..QUANTILE_THRESHOLDS {
            let pos = (q * (n - 1) + (QUANTILE_THRESHOLDS - 1) / 2) / (QUANTILE_THRESHOLDS - 1);
            let thr = sorted[pos];
            if thr <= last || thr <= sorted[0] {
                continue;
            }
            last = thr;
            let k = sorted.partition_point(|&v| v < thr);
            splits.push((k, thr));
        }
    }
    splits
}

pub fn fit_stump(rows: &[&[f64]], residuals: &[f64]) -> Result<Stump> {
    StumpSearch::new(rows)?.fit(residuals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_split() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0], vec![1.0], vec![9.0], vec![9.0]];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = fit_stump(&refs, &[-1.0, -1.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.feature_index, 0);
        assert!(s.threshold > 1.0 && s.threshold <= 9.0);
        assert_eq!((s.left_value, s.right_value), (-1.0, 2.0));
    }

    #[test]
    fn constant_residuals_pick_first_candidate() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (10 - i) as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = fit_stump(&refs, &[0.1; 10]).unwrap();
        assert_eq!(s.feature_index, 0);
        assert_eq!(s.threshold, 0.5);
        assert!((s.left_value - 0.1).abs() < 1e-15 && (s.right_value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_features() {
        let rows: Vec<Vec<f64>> = vec![vec![3.0, 3.0]; 5];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = fit_stump(&refs, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.left_value, s.right_value);
        assert_eq!(s.left_value, 3.0);
        assert_eq!(s.predict(&[3.0, 3.0]), 3.0);
    }

    #[test]
    fn quantile_mode_caps_candidates() {
        let sorted: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let splits = candidate_splits(&sorted);
        assert!(splits.len() <= QUANTILE_THRESHOLDS);
        assert_eq!(splits.len(), QUANTILE_THRESHOLDS - 1);
        assert!(splits.iter().all(|&(k, t)| k > 0 && k < 1000 && sorted[k - 1] < t && sorted[k] >= t));
        let few: Vec<f64> = (0..100).map(|i| (i % 3) as f64).collect();
        let mut few_sorted = few.clone();
        few_sorted.sort_by(f64::total_cmp);
        assert_eq!(candidate_splits(&few_sorted).len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_stump(&[], &[]).is_err());
        let rows: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0]];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        assert!(fit_stump(&refs, &[1.0]).is_err());
    }
}
