//! Adaptive-coverage conformal forests.
//!
//! Classes are ranked by forest probability (ties by class index). The
//! non-randomized set `S(π, τ)` keeps the top `L` classes where `L` is the
//! first rank whose cumulative probability exceeds `τ`. The randomized set
//! uses `≥` for `L` and drops the `L`-th class when `u < V`, with
//! `V = (Σ_{c≤L} π_(c) − τ) / π_(L)`.
//!
//! The conformity score `E` is the smallest `τ` whose set contains the
//! label. With `c_{r-1}` the probability mass ranked strictly above `y`:
//!
//! * non-randomized: `E = c_{r-1}`;
//! * randomized: `E = c_{r-1} + (1 − u)·π_y` (for `u = 1` this is the
//!   infimum, not attained, and equals the non-randomized score).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::split::{ConformityRecord, SplitPlan};
use crate::dataset::{Dataset, Features};
use crate::error::{Error, Result};
use crate::forest::{ForestParams, RandomForest};
use crate::rng;
use crate::sets::PredictionSets;

/// Probability clamp applied to `P[test | x]` before forming odds.
pub const ODDS_CLAMP: f64 = 1e-3;

fn check_probabilities(pi: &[f64]) -> Result<()> {
    if pi.is_empty() || pi.iter().any(|p| !(*p >= 0.0)) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(
            "probability vector must be non-negative and sum to 1".into(),
        ));
    }
    Ok(())
}

/// Class indices by decreasing probability, ties by index.
fn ranking(pi: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pi.len()).collect();
    order.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
    order
}

/// Conformity score of label `y`; `u` selects the randomized variant.
pub fn acrf_score(pi: &[f64], y: usize, u: Option<f64>) -> Result<f64> {
    check_probabilities(pi)?;
    if y >= pi.len() {
        return Err(Error::InvalidInput(format!("label {y} outside {} classes", pi.len())));
    }
    let order = ranking(pi);
    let above: f64 = order.iter().take_while(|&&c| c != y).map(|&c| pi[c]).sum();
    match u {
        None => Ok(above),
        Some(u) if (0.0..=1.0).contains(&u) => Ok(above + (1.0 - u) * pi[y]),
        Some(u) => Err(Error::InvalidInput(format!("u = {u} outside [0, 1]"))),
    }
}

/// `S(π, τ)` (or `S(u; π, τ)` when `u` is given), sorted by class index.
pub fn acrf_set(pi: &[f64], tau: f64, u: Option<f64>) -> Vec<usize> {
    let order = ranking(pi);
    let c_count = order.len();
    let mut cum = 0.0;
    let mut cums = Vec::with_capacity(c_count);
    for &c in &order {
        cum += pi[c];
        cums.push(cum);
    }
    let size = match u {
        None => cums.iter().position(|&s| s > tau).map_or(c_count, |l| l + 1),
        Some(u) => {
            let l = cums.iter().position(|&s| s >= tau).map_or(c_count, |l| l + 1);
            let p_l = pi[order[l - 1]];
            let v = if p_l > 0.0 { (cums[l - 1] - tau) / p_l } else { 0.0 };
            if u < v {
                l - 1
            } else {
                l
            }
        }
    };
    let mut set: Vec<usize> = order[..size].to_vec();
    set.sort_unstable();
    set
}

/// Forest, calibration scores and per-row randomization shared by the
/// marginal and shift-weighted variants.
struct Calibrated {
    test_proba: Vec<Vec<f64>>,
    test_u: Vec<Option<f64>>,
    record: ConformityRecord,
}

fn calibrate(
    train: &Dataset,
    test: &Features,
    randomized: bool,
    forest: &ForestParams,
    plan: &SplitPlan,
) -> Result<Calibrated> {
    let labels = train.required_labels()?;
    let k_count = train.n_classes();
    plan.validate(train.n_samples(), test.n_samples())?;
    if plan.fold1.is_empty() || plan.fold2.is_empty() {
        return Err(Error::InvalidInput("both training folds must be non-empty".into()));
    }
    let x = train.features();
    let y1: Vec<usize> = plan.fold1.iter().map(|&i| labels[i]).collect();
    let model = RandomForest::fit(
        &x.select(&plan.fold1),
        &y1,
        k_count,
        forest,
        rng::derive_seed(plan.seed, "acrf/forest", 0),
    )?;

    let mut u_cal = rng::stream(plan.seed, "acrf/u-cal", 0);
    let cal_proba = model.predict_proba_all(&x.select(&plan.fold2));
    let scores = plan
        .fold2
        .iter()
        .zip(&cal_proba)
        .map(|(&i, p)| {
            let u = randomized.then(|| u_cal.random::<f64>());
            acrf_score(&normalized(p), labels[i], u)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut u_test = rng::stream(plan.seed, "acrf/u-test", 0);
    let test_u = (0..test.n_samples())
        .map(|_| randomized.then(|| u_test.random::<f64>()))
        .collect();
    Ok(Calibrated {
        test_proba: model.predict_proba_all(test),
        test_u,
        record: ConformityRecord::unweighted(scores),
    })
}

/// Renormalize away accumulated rounding in forest averages.
fn normalized(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter().map(|v| v / s).collect()
}

/// Marginally calibrated adaptive sets.
pub fn acrf(
    train: &Dataset,
    test: &Features,
    alpha: f64,
    randomized: bool,
    forest: &ForestParams,
    plan: &SplitPlan,
) -> Result<PredictionSets> {
    let cal = calibrate(train, test, randomized, forest, plan)?;
    let tau = cal.record.quantile(alpha)?;
    let sets = cal
        .test_proba
        .iter()
        .zip(&cal.test_u)
        .map(|(p, &u)| acrf_set(&normalized(p), tau, u))
        .collect();
    PredictionSets::new(train.class_names().to_vec(), sets)?.with_scores(cal.test_proba)
}

/// Source of the test-vs-train odds `r(x)` for the shift-weighted variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OddsSource {
    /// A forest separating a test fold from training fold 1.
    Classifier,
    /// The same odds everywhere; weights become uniform.
    Constant(f64),
}

/// Covariate-shift weighted adaptive sets. Odds for test fold 2 come from a
/// classifier fitted on test fold 1 against training fold 1, and vice versa.
pub fn acrf_shift(
    train: &Dataset,
    test: &Features,
    alpha: f64,
    randomized: bool,
    forest: &ForestParams,
    plan: &SplitPlan,
) -> Result<PredictionSets> {
    acrf_shift_with_odds(train, test, alpha, randomized, forest, plan, OddsSource::Classifier)
}

pub fn acrf_shift_with_odds(
    train: &Dataset,
    test: &Features,
    alpha: f64,
    randomized: bool,
    forest: &ForestParams,
    plan: &SplitPlan,
    odds: OddsSource,
) -> Result<PredictionSets> {
    let cal = calibrate(train, test, randomized, forest, plan)?;
    let x = train.features();
    let cal_rows = x.select(&plan.fold2);
    let m = test.n_samples();
    let mut tau = vec![f64::NAN; m];
    match odds {
        OddsSource::Constant(r) => {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidInput(format!("constant odds {r} must be positive")));
            }
            let record = ConformityRecord {
                scores: cal.record.scores.clone(),
                odds: Some(vec![r; plan.fold2.len()]),
            };
            for t in &mut tau {
                *t = record.shifted_quantile(alpha, r)?;
            }
        }
        OddsSource::Classifier => {
            if plan.test_fold1.is_empty() || plan.test_fold2.is_empty() {
                return Err(Error::InvalidInput("both test folds must be non-empty".into()));
            }
            let train_fit = x.select(&plan.fold1);
            for (a, (fit_fold, eval_fold)) in [
                (&plan.test_fold1, &plan.test_fold2),
                (&plan.test_fold2, &plan.test_fold1),
            ]
            .into_iter()
            .enumerate()
            {
                let test_fit = test.select(fit_fold);
                let xo = Features::concat(&[&train_fit, &test_fit])?;
                let yo: Vec<usize> = std::iter::repeat_n(0, train_fit.n_samples())
                    .chain(std::iter::repeat_n(1, test_fit.n_samples()))
                    .collect();
                let model = RandomForest::fit(&xo, &yo, 2, forest, rng::derive_seed(plan.seed, "acrf/odds", a as u64))?;
                let odds_of = |row: &[f64]| {
                    let p = model.predict_proba(row)[1].clamp(ODDS_CLAMP, 1.0 - ODDS_CLAMP);
                    p / (1.0 - p)
                };
                let record = ConformityRecord {
                    scores: cal.record.scores.clone(),
                    odds: Some(cal_rows.rows().map(odds_of).collect()),
                };
                for &i in eval_fold {
                    tau[i] = record.shifted_quantile(alpha, odds_of(test.row(i)))?;
                }
            }
        }
    }
    let sets = cal
        .test_proba
        .iter()
        .zip(&cal.test_u)
        .zip(&tau)
        .map(|((p, &u), &t)| acrf_set(&normalized(p), t, u))
        .collect();
    PredictionSets::new(train.class_names().to_vec(), sets)?.with_scores(cal.test_proba)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: [f64; 3] = [0.6, 0.3, 0.1];

    #[test]
    fn score_examples() {
        assert_eq!(acrf_score(&PI, 0, None).unwrap(), 0.0);
        assert_eq!(acrf_score(&PI, 1, None).unwrap(), 0.6);
        assert!((acrf_score(&PI, 2, None).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(
            acrf_score(&PI, 1, Some(1.0)).unwrap(),
            acrf_score(&PI, 1, None).unwrap()
        );
        assert!((acrf_score(&PI, 1, Some(0.0)).unwrap() - 0.9).abs() < 1e-12);
        assert!(acrf_score(&[0.5, 0.6], 0, None).is_err());
        assert!(acrf_score(&PI, 3, None).is_err());
    }

    #[test]
    fn sets_nest_in_tau() {
        assert_eq!(acrf_set(&PI, 0.0, None), vec![0]);
        assert_eq!(acrf_set(&PI, 0.6, None), vec![0, 1]);
        assert_eq!(acrf_set(&PI, 0.59, None), vec![0]);
        assert_eq!(acrf_set(&PI, f64::INFINITY, None), vec![0, 1, 2]);
        assert_eq!(acrf_set(&PI, f64::INFINITY, Some(0.3)), vec![0, 1, 2]);
    }

    #[test]
    fn randomized_set_can_be_empty() {
        // τ = 0.3 < π_(1): L = 1, V = 0.5, u < V drops the top class.
        assert!(acrf_set(&PI, 0.3, Some(0.2)).is_empty());
        assert_eq!(acrf_set(&PI, 0.3, Some(0.7)), vec![0]);
    }
}
