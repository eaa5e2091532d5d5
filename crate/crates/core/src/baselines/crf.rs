//! Conformalized random forest: include `k` when the forest probability
//! `p̂_k(x)` is not unusually small among calibration rows of class `k`.

use crate::baselines::split::{ConformalCalibrator, SplitPlan};
use crate::dataset::{Dataset, Features};
use crate::error::{Error, Result};
use crate::forest::{ForestParams, RandomForest};
use crate::rng;
use crate::sets::PredictionSets;

pub fn crf(
    train: &Dataset,
    test: &Features,
    alpha: f64,
    forest: &ForestParams,
    plan: &SplitPlan,
) -> Result<PredictionSets> {
    let labels = train.required_labels()?;
    let k_count = train.n_classes();
    plan.validate(train.n_samples(), test.n_samples())?;
    for k in 0..k_count {
        plan.require_class(&labels, k, &train.class_names()[k], 1)?;
    }
    if test.n_features() != train.n_features() {
        return Err(Error::DimensionMismatch {
            expected: train.n_features(),
            found: test.n_features(),
        });
    }
    let x1 = train.features().select(&plan.fold1);
    let y1: Vec<usize> = plan.fold1.iter().map(|&i| labels[i]).collect();
    let model = RandomForest::fit(&x1, &y1, k_count, forest, rng::derive_seed(plan.seed, "crf/forest", 0))?;

    let cal_proba = model.predict_proba_all(&train.features().select(&plan.fold2));
    let calibrators = (0..k_count)
        .map(|k| {
            let scores = plan
                .fold2
                .iter()
                .zip(&cal_proba)
                .filter(|(&i, _)| labels[i] == k)
                .map(|(_, p)| p[k])
                .collect();
            ConformalCalibrator::new(scores)
        })
        .collect::<Result<Vec<_>>>()?;

    let test_proba = model.predict_proba_all(test);
    let pvalues: Vec<Vec<f64>> = test_proba
        .iter()
        .map(|p| calibrators.iter().enumerate().map(|(k, c)| c.pvalue(p[k])).collect())
        .collect();
    let sets = pvalues
        .iter()
        .map(|pv| (0..k_count).filter(|&k| pv[k] >= alpha).collect())
        .collect();
    PredictionSets::new(train.class_names().to_vec(), sets)?.with_scores(pvalues)
}
