//! Known-density oracle sets.
//!
//! With class densities `f_k`, a test mixture `f_te` and the training mixture
//! `f_tr`, the score is `s_k(x) = f_k(x) / μ(x)` with `μ = f_te + w·f_tr`.
//! Class `k` enters `C(x)` when `P_{X~f_k}[s_k(x) ≥ s_k(X)] ≥ α`; the
//! probability is estimated from Monte Carlo draws of each class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{example1_specs, ClassDesign, Features, GaussianClassSpec, ScenarioComponent};
use crate::error::{Error, Result};
use crate::rng;
use crate::sets::PredictionSets;

pub const MIN_MC_SAMPLES: usize = 1000;
pub const DEFAULT_MC_SAMPLES: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub class_names: Vec<String>,
    /// `f_k` of each training class.
    pub classes: Vec<GaussianClassSpec>,
    /// Components of `f_te`, weights as given (not renormalized).
    pub test_mixture: Vec<ScenarioComponent>,
    /// Weight of each training class in `f_tr`.
    pub train_weights: Vec<f64>,
    pub w: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl OracleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() || self.classes.len() != self.class_names.len() {
            return Err(Error::Config("oracle needs one density per class name".into()));
        }
        if self.train_weights.len() != self.classes.len() {
            return Err(Error::LengthMismatch("train weights vs classes".into()));
        }
        let p = self.classes[0].dim();
        for spec in self.classes.iter().chain(self.test_mixture.iter().map(|c| &c.spec)) {
            spec.validate()?;
            if spec.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: spec.dim(),
                });
            }
        }
        let weights = self
            .train_weights
            .iter()
            .chain(self.test_mixture.iter().map(|c| &c.weight));
        if weights.clone().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config("mixture weights must be finite and non-negative".into()));
        }
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(Error::Config(format!("w = {} must be non-negative", self.w)));
        }
        if self.test_mixture.iter().map(|c| c.weight).sum::<f64>() <= 0.0 {
            return Err(Error::Config("test mixture has no mass".into()));
        }
        if self.mc_samples < MIN_MC_SAMPLES {
            return Err(Error::Config(format!(
                "at least {MIN_MC_SAMPLES} Monte Carlo samples required"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.classes[0].dim()
    }

    /// Cohorts drawn from `design` with the given per-class counts; mixture
    /// weights are the cohort proportions.
    pub fn from_design(
        design: &ClassDesign,
        train_counts: &[(usize, usize)],
        test_counts: &[(usize, usize)],
        w: f64,
        seed: u64,
    ) -> Result<Self> {
        let lookup = |k: usize| {
            design
                .specs
                .get(k)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("unknown class index {k}")))
        };
        let train: Vec<&(usize, usize)> = train_counts.iter().filter(|(_, c)| *c > 0).collect();
        let n_train: usize = train.iter().map(|(_, c)| c).sum();
        let n_test: usize = test_counts.iter().map(|(_, c)| c).sum();
        if n_train == 0 || n_test == 0 {
            return Err(Error::InvalidInput("empty cohort".into()));
        }
        Ok(Self {
            class_names: train.iter().map(|(k, _)| design.names[*k].clone()).collect(),
            classes: train.iter().map(|(k, _)| lookup(*k)).collect::<Result<_>>()?,
            test_mixture: test_counts
                .iter()
                .filter(|(_, c)| *c > 0)
                .map(|&(k, c)| {
                    Ok(ScenarioComponent {
                        name: design.names[k].clone(),
                        spec: lookup(k)?,
                        weight: c as f64 / n_test as f64,
                    })
                })
                .collect::<Result<_>>()?,
            train_weights: train.iter().map(|(_, c)| *c as f64 / n_train as f64).collect(),
            w,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed,
        })
    }

    /// The introductory example: balanced classes `1`, `2` in training and
    /// `1`, `2`, `R` in test.
    pub fn example1(p: usize, w: f64, seed: u64) -> Result<Self> {
        let specs = example1_specs(p)?;
        let design = ClassDesign {
            names: vec!["1".into(), "2".into(), "R".into()],
            specs: specs.to_vec(),
        };
        Self::from_design(&design, &[(0, 1), (1, 1)], &[(0, 1), (1, 1), (2, 1)], w, seed)
    }

    fn log_mu(&self, x: &[f64]) -> f64 {
        let terms = self
            .test_mixture
            .iter()
            .map(|c| c.weight.ln() + c.spec.log_density(x))
            .chain(
                self.classes
                    .iter()
                    .zip(&self.train_weights)
                    .map(|(spec, &pi)| (self.w * pi).ln() + spec.log_density(x)),
            );
        log_sum_exp(terms)
    }

    /// `ln s_k(x)`.
    pub fn log_score(&self, x: &[f64], k: usize) -> Result<f64> {
        if k >= self.classes.len() {
            return Err(Error::InvalidInput(format!(
                "class {k} outside {} classes",
                self.classes.len()
            )));
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let log_mu = self.log_mu(x);
        if log_mu == f64::NEG_INFINITY {
            return Err(Error::InvalidInput("μ(x) = 0".into()));
        }
        Ok(self.classes[k].log_density(x) - log_mu)
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `s_k(x; μ)`.
pub fn oracle_score(spec: &OracleSpec, x: &[f64], k: usize) -> Result<f64> {
    Ok(spec.log_score(x, k)?.exp())
}

/// Sorted Monte Carlo reference scores, one list per class.
#[derive(Debug, Clone)]
pub struct OracleModel {
    spec: OracleSpec,
    reference: Vec<Vec<f64>>,
}

impl OracleModel {
    pub fn new(spec: OracleSpec) -> Result<Self> {
        spec.validate()?;
        let reference = (0..spec.classes.len())
            .into_par_iter()
            .map(|k| {
                let mut r = rng::stream(spec.seed, "oracle/mc", k as u64);
                let mut v = (0..spec.mc_samples)
                    .map(|_| spec.log_score(&spec.classes[k].sample(&mut r), k))
                    .collect::<Result<Vec<f64>>>()?;
                v.sort_by(f64::total_cmp);
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, reference })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    /// Fraction of class-`k` draws whose score does not exceed `s_k(x)`.
    pub fn rank(&self, x: &[f64], k: usize) -> Result<f64> {
        let s = self.spec.log_score(x, k)?;
        let r = &self.reference[k];
        Ok(r.partition_point(|&v| v <= s) as f64 / r.len() as f64)
    }

    /// Ranks of every class for every row; these are attached as scores.
    pub fn ranks(&self, test: &Features) -> Result<Vec<Vec<f64>>> {
        (0..test.n_samples())
            .into_par_iter()
            .map(|i| (0..self.reference.len()).map(|k| self.rank(test.row(i), k)).collect())
            .collect()
    }

    pub fn predict(&self, test: &Features, alpha: f64) -> Result<PredictionSets> {
        let ranks = self.ranks(test)?;
        sets_from_ranks(&self.spec.class_names, ranks, alpha)
    }
}

/// `C(x) = {k : rank_k(x) ≥ α}`.
pub fn sets_from_ranks(class_names: &[String], ranks: Vec<Vec<f64>>, alpha: f64) -> Result<PredictionSets> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 1)")));
    }
    let sets = ranks
        .iter()
        .map(|row| (0..row.len()).filter(|&k| row[k] >= alpha).collect())
        .collect();
    PredictionSets::new(class_names.to_vec(), sets)?.with_scores(ranks)
}

pub fn oracle_sets(spec: &OracleSpec, test: &Features, alpha: f64) -> Result<PredictionSets> {
    OracleModel::new(spec.clone())?.predict(test, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_class(w: f64) -> OracleSpec {
        let spec = GaussianClassSpec::standard(2);
        OracleSpec {
            class_names: vec!["a".into()],
            classes: vec![spec.clone()],
            test_mixture: vec![ScenarioComponent {
                name: "a".into(),
                spec,
                weight: 1.0,
            }],
            train_weights: vec![1.0],
            w,
            mc_samples: MIN_MC_SAMPLES,
            seed: 1,
        }
    }

    #[test]
    fn single_class_score_is_constant() {
        let s = single_class(0.0);
        for x in [[0.0, 0.0], [3.0, -1.0]] {
            assert!((oracle_score(&s, &x, 0).unwrap() - 1.0).abs() < 1e-12);
        }
        // μ = (1 + w) f_k
        let s = single_class(1.0);
        assert!((oracle_score(&s, &[0.4, 0.4], 0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn separated_components_at_class_mean() {
        // f_te = ½ f_1 + ½ f_2, f_tr = ½ f_1 + ½ f_2, w = 1: μ ≈ f_1 at its mean.
        let s = OracleSpec::example1(2, 1.0, 0).unwrap();
        let x = [0.0, 0.0];
        let f1 = s.classes[0].log_density(&x).exp();
        let f2 = s.classes[1].log_density(&x).exp();
        let fr = s.classes[0].log_density(&[0.0, -3.0]).exp();
        let third = 1.0 / 3.0;
        let mu = third * (f1 + f2 + fr) + 0.5 * (f1 + f2);
        assert!((oracle_score(&s, &x, 0).unwrap() - f1 / mu).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = single_class(1.0);
        s.mc_samples = 10;
        assert!(s.validate().is_err());
        let mut s = single_class(-1.0);
        s.mc_samples = MIN_MC_SAMPLES;
        assert!(s.validate().is_err());
        assert!(oracle_score(&single_class(1.0), &[0.0], 0).is_err());
    }
}
