use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use rand::seq::SliceRandom;

/// Stratified two-fold split of the training rows, plus an optional
/// two-fold split of the test rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Model-fitting rows.
    pub fold1: Vec<usize>,
    /// Calibration rows.
    pub fold2: Vec<usize>,
    pub test_fold1: Vec<usize>,
    pub test_fold2: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Each class is shuffled and cut in half, the larger half going to
    /// `fold1`. The test rows are cut the same way.
    pub fn stratified(labels: &[usize], n_classes: usize, n_test: usize, seed: u64) -> Self {
        let mut fold1 = Vec::new();
        let mut fold2 = Vec::new();
        for k in 0..n_classes {
            let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
            idx.shuffle(&mut rng::stream(seed, "split/train", k as u64));
            let cut = idx.len() - idx.len() / 2;
            fold1.extend_from_slice(&idx[..cut]);
            fold2.extend_from_slice(&idx[cut..]);
        }
        fold1.sort_unstable();
        fold2.sort_unstable();
        let mut t: Vec<usize> = (0..n_test).collect();
        t.shuffle(&mut rng::stream(seed, "split/test", 0));
        let cut = n_test - n_test / 2;
        let mut test_fold1 = t[..cut].to_vec();
        let mut test_fold2 = t[cut..].to_vec();
        test_fold1.sort_unstable();
        test_fold2.sort_unstable();
        Self {
            fold1,
            fold2,
            test_fold1,
            test_fold2,
            seed,
        }
    }

    /// Train-fold rows of class `k`.
    pub fn class_rows(fold: &[usize], labels: &[usize], k: usize) -> Vec<usize> {
        fold.iter().copied().filter(|&i| labels[i] == k).collect()
    }

    /// Checks the folds partition `0..n_train` and `0..n_test`.
    pub fn validate(&self, n_train: usize, n_test: usize) -> Result<()> {
        let check = |a: &[usize], b: &[usize], n: usize, what: &str| -> Result<()> {
            let mut all: Vec<usize> = a.iter().chain(b).copied().collect();
            all.sort_unstable();
            if all != (0..n).collect::<Vec<_>>() {
                return Err(Error::InvalidInput(format!("{what} folds do not partition the rows")));
            }
            Ok(())
        };
        check(&self.fold1, &self.fold2, n_train, "training")?;
        check(&self.test_fold1, &self.test_fold2, n_test, "test")
    }

    pub fn require_class(&self, labels: &[usize], k: usize, class_name: &str, min: usize) -> Result<()> {
        for (fold, name) in [(&self.fold1, "fold 1"), (&self.fold2, "fold 2")] {
            if Self::class_rows(fold, labels, k).len() < min {
                return Err(Error::EmptyFold {
                    class: class_name.to_string(),
                    fold: name,
                });
            }
        }
        Ok(())
    }
}

/// `(1 + #{i : test >= cal_i}) / (n + 1)`.
pub fn split_conformal_pvalue(scores_cal: &[f64], score_test: f64) -> Result<f64> {
    if scores_cal.is_empty() {
        return Err(Error::InvalidInput("no calibration scores".into()));
    }
    let hits = scores_cal.iter().filter(|&&c| score_test >= c).count();
    Ok((1 + hits) as f64 / (scores_cal.len() + 1) as f64)
}

/// Sorted calibration scores for repeated p-value queries.
#[derive(Debug, Clone)]
pub struct ConformalCalibrator {
    sorted: Vec<f64>,
}

impl ConformalCalibrator {
    pub fn new(mut scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidInput("no calibration scores".into()));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidInput("NaN calibration score".into()));
        }
        scores.sort_by(f64::total_cmp);
        Ok(Self { sorted: scores })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn pvalue(&self, score_test: f64) -> f64 {
        let hits = self.sorted.partition_point(|&c| c <= score_test);
        (1 + hits) as f64 / (self.sorted.len() + 1) as f64
    }
}

/// Smallest `v` whose cumulative weight of `{mass <= v}` reaches `level`,
/// where `inf_weight` sits on `+∞`. Returns `f64::INFINITY` when only the
/// infinite atom gets there.
pub fn weighted_quantile(values: &[f64], weights: &[f64], inf_weight: f64, level: f64) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch("values vs weights".into()));
    }
    if weights.iter().chain(std::iter::once(&inf_weight)).any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidInput("weights must be non-negative".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cum = 0.0;
    let mut pos = 0;
    while pos < order.len() {
        let v = values[order[pos]];
        while pos < order.len() && values[order[pos]] == v {
            cum += weights[order[pos]];
            pos += 1;
        }
        if cum >= level - 1e-12 {
            return Ok(v);
        }
    }
    Ok(f64::INFINITY)
}

/// Calibration conformity scores, optionally with covariate-shift odds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformityRecord {
    pub scores: Vec<f64>,
    /// Odds `r(x_i)` of each calibration row.
    pub odds: Option<Vec<f64>>,
}

impl ConformityRecord {
    pub fn unweighted(scores: Vec<f64>) -> Self {
        Self { scores, odds: None }
    }

    /// Level-`(1-α)` quantile of the scores plus `+∞`, each with mass `1/(n+1)`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        let w = 1.0 / (self.scores.len() + 1) as f64;
        weighted_quantile(&self.scores, &vec![w; self.scores.len()], w, 1.0 - alpha)
    }

    /// Weights `r(x_i) / (r(x0) + Σ r(x_j))` on the scores and
    /// `r(x0) / (…)` on `+∞`.
    pub fn shift_weights(&self, odds_x0: f64) -> Result<(Vec<f64>, f64)> {
        let odds = self
            .odds
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("record has no odds".into()))?;
        let denom = odds_x0 + odds.iter().sum::<f64>();
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::InvalidInput("degenerate odds".into()));
        }
        Ok((odds.iter().map(|r| r / denom).collect(), odds_x0 / denom))
    }

    pub fn shifted_quantile(&self, alpha: f64, odds_x0: f64) -> Result<f64> {
        let (w, w_inf) = self.shift_weights(odds_x0)?;
        weighted_quantile(&self.scores, &w, w_inf, 1.0 - alpha)
    }
}
