//! Method registry and dispatch.

use csforest::baselines::{acrf, acrf_shift, bcops, crf, dc, BandwidthRule, SplitPlan};
use csforest::csforest::{CsForest, CsForestParams};
use csforest::forest::ForestParams;
use csforest::oracle::{OracleModel, DEFAULT_MC_SAMPLES};
use csforest::rng::derive_seed;
use csforest::sets::PredictionSets;
use csforest::tree::TreeParams;
use serde::{Deserialize, Serialize};

use crate::config::Cohort;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Csforest,
    Bcops,
    Crf,
    Dc,
    Acrf,
    AcrfRandom,
    AcrfShift,
    Oracle,
}

impl MethodName {
    pub const ALL: [MethodName; 8] = [
        MethodName::Csforest,
        MethodName::Bcops,
        MethodName::Crf,
        MethodName::Dc,
        MethodName::Acrf,
        MethodName::AcrfRandom,
        MethodName::AcrfShift,
        MethodName::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Csforest => "csforest",
            MethodName::Bcops => "bcops",
            MethodName::Crf => "crf",
            MethodName::Dc => "dc",
            MethodName::Acrf => "acrf",
            MethodName::AcrfRandom => "acrf_random",
            MethodName::AcrfShift => "acrf_shift",
            MethodName::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown method '{s}'")))
    }
}

/// `gamma` as a number or the string `"log"` for `1 / ln m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    Named(GammaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    Log,
}

impl Gamma {
    pub fn resolve(self, m: usize) -> f64 {
        match self {
            Gamma::Value(g) => g,
            Gamma::Named(GammaRule::Log) => CsForestParams::log_gamma(m),
        }
    }
}

/// Per-method settings; unset fields take the method's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: MethodName,
    /// Output name; defaults to the method name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Gamma>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_tilde: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trees: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_leaf: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_per_split: Option<usize>,
    /// Randomized sets for `acrf_shift`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub randomized: Option<bool>,
    /// Fixed kernel bandwidth for `dc`; Silverman's rule otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
}

pub const DEFAULT_B_TILDE: usize = 3000;
pub const DEFAULT_N_TREES: usize = 500;

impl MethodConfig {
    pub fn new(name: MethodName) -> Self {
        Self {
            name,
            label: None,
            alpha: None,
            gamma: None,
            b_tilde: None,
            n_trees: None,
            max_depth: None,
            min_leaf: None,
            features_per_split: None,
            randomized: None,
            bandwidth: None,
            w: None,
            mc_samples: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.name.as_str().to_string())
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(CliError::Config(format!(
                    "{}: alpha = {a} outside (0, 1)",
                    self.label()
                )));
            }
        }
        if let Some(l) = &self.label {
            if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(CliError::Config(format!(
                    "label '{l}' must be alphanumeric, '_' or '-'"
                )));
            }
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf.unwrap_or(1),
            features_per_split: self.features_per_split,
            ..TreeParams::default()
        }
    }

    fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees.unwrap_or(DEFAULT_N_TREES),
            tree: self.tree_params(),
        }
    }

    /// Run on one cohort with the method's seed. Test labels are stripped
    /// before the method sees the data.
    pub fn run(&self, cohort: &Cohort, default_alpha: f64, seed: u64) -> CliResult<PredictionSets> {
        let alpha = self.alpha.unwrap_or(default_alpha);
        let train = &cohort.train;
        let test = cohort.test.features();
        let plan = || -> CliResult<SplitPlan> {
            let labels = train.required_labels()?;
            Ok(SplitPlan::stratified(
                &labels,
                train.n_classes(),
                test.n_samples(),
                derive_seed(seed, "split", 0),
            ))
        };
        let sets = match self.name {
            MethodName::Csforest => {
                let params = CsForestParams {
                    alpha,
                    gamma: self.gamma.unwrap_or(Gamma::Value(1.0)).resolve(test.n_samples()),
                    b_tilde: self.b_tilde.unwrap_or(DEFAULT_B_TILDE),
                    tree_params: self.tree_params(),
                    seed,
                };
                CsForest::new(params).fit_predict(train, test)?.sets
            }
            MethodName::Crf => crf(train, test, alpha, &self.forest_params(), &plan()?)?,
            MethodName::Bcops => bcops(train, test, alpha, &self.forest_params(), &plan()?)?,
            MethodName::Dc => {
                let rule = self.bandwidth.map_or(BandwidthRule::Silverman, BandwidthRule::Fixed);
                dc(train, test, alpha, rule, &plan()?)?
            }
            MethodName::Acrf => acrf(train, test, alpha, false, &self.forest_params(), &plan()?)?,
            MethodName::AcrfRandom => acrf(train, test, alpha, true, &self.forest_params(), &plan()?)?,
            MethodName::AcrfShift => acrf_shift(
                train,
                test,
                alpha,
                self.randomized.unwrap_or(false),
                &self.forest_params(),
                &plan()?,
            )?,
            MethodName::Oracle => {
                let mut spec = cohort.oracle.clone().ok_or_else(|| {
                    CliError::Config("oracle needs a synthetic data source with known densities".into())
                })?;
                spec.w = self.w.unwrap_or(spec.w);
                spec.mc_samples = self.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
                spec.seed = seed;
                if spec.class_names != train.class_names() {
                    return Err(CliError::Config(
                        "oracle classes do not match the training classes".into(),
                    ));
                }
                OracleModel::new(spec)?.predict(test, alpha)?
            }
        };
        Ok(sets)
    }
}
