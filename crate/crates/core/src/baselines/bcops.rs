//! Balanced & conformalized optimal prediction sets.
//!
//! For each pair of (train fold, test fold), a forest per class `k`
//! separates the fold's class-`k` rows from the fold's test rows; its
//! class-`k` probability is calibrated on the other train fold's class-`k`
//! rows and applied to the other test fold.

use crate::baselines::split::{ConformalCalibrator, SplitPlan};
use crate::dataset::{Dataset, Features};
use crate::error::{Error, Result};
use crate::forest::{ForestParams, RandomForest};
use crate::rng;
use crate::sets::PredictionSets;

pub fn bcops(
    train: &Dataset,
    test: &Features,
    alpha: f64,
    forest: &ForestParams,
    plan: &SplitPlan,
) -> Result<PredictionSets> {
    let labels = train.required_labels()?;
    let k_count = train.n_classes();
    plan.validate(train.n_samples(), test.n_samples())?;
    if plan.test_fold1.is_empty() || plan.test_fold2.is_empty() {
        return Err(Error::InvalidInput("both test folds must be non-empty".into()));
    }
    for k in 0..k_count {
        plan.require_class(&labels, k, &train.class_names()[k], 1)?;
    }
    let x = train.features();
    let m = test.n_samples();
    let mut pvalues = vec![vec![0.0; k_count]; m];
    let folds = [(&plan.fold1, &plan.test_fold1), (&plan.fold2, &plan.test_fold2)];
    for (a, &(fit_train, fit_test)) in folds.iter().enumerate() {
        let (cal_train, eval_test) = folds[1 - a];
        let test_fit = test.select(fit_test);
        let test_eval = test.select(eval_test);
        for k in 0..k_count {
            let own = SplitPlan::class_rows(fit_train, &labels, k);
            let xk = Features::concat(&[&x.select(&own), &test_fit])?;
            let yk: Vec<usize> = std::iter::repeat_n(0, own.len())
                .chain(std::iter::repeat_n(1, test_fit.n_samples()))
                .collect();
            let seed = rng::derive_seed(plan.seed, "bcops/forest", (a * k_count + k) as u64);
            let model = RandomForest::fit(&xk, &yk, 2, forest, seed)?;
            let cal = SplitPlan::class_rows(cal_train, &labels, k)
                .iter()
                .map(|&i| model.predict_proba(x.row(i))[0])
                .collect();
            let calibrator = ConformalCalibrator::new(cal)?;
            for (row, &i) in test_eval.rows().zip(eval_test.iter()) {
                pvalues[i][k] = calibrator.pvalue(model.predict_proba(row)[0]);
            }
        }
    }
    let sets = pvalues
        .iter()
        .map(|pv| (0..k_count).filter(|&k| pv[k] >= alpha).collect())
        .collect();
    PredictionSets::new(train.class_names().to_vec(), sets)?.with_scores(pvalues)
}
