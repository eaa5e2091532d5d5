//! Experiment configuration read from TOML.
//!
//! Precedence for scalar settings is command-line flag, then the config
//! file, then built-in defaults. The output directory falls back to the
//! `CSFOREST_OUTPUT_DIR` environment variable before the built-in default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use csforest::dataset::{
    example1_upscaled_with, generate_example1_dim, load_csv, sample_shift_scenario, split_per_class,
    subsample_per_class, ClassDesign, Dataset, ShiftScenario, EXAMPLE1_DIM, UPSCALED_BLOCK_SHIFT, UPSCALED_PAIR_SHIFT,
};
use csforest::oracle::OracleSpec;
use csforest::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::methods::MethodConfig;

pub const OUTPUT_DIR_ENV: &str = "CSFOREST_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "csforest-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Default miscoverage level for methods that do not set their own.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub data: DataSource,
    #[serde(default)]
    pub methods: Vec<MethodConfig>,
    #[serde(default)]
    pub audit: AuditConfig,
}

fn one() -> usize {
    1
}

fn default_alpha() -> f64 {
    0.05
}

fn default_dim() -> usize {
    EXAMPLE1_DIM
}

fn default_upscaled_dim() -> usize {
    50
}

fn default_block_shift() -> f64 {
    UPSCALED_BLOCK_SHIFT
}

fn default_pair_shift() -> f64 {
    UPSCALED_PAIR_SHIFT
}

/// Where train and test cohorts come from. Counts are keyed by class name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Classes `1`, `2` in training; `1`, `2`, `R` in test.
    Example1 {
        n_train: usize,
        n_test: usize,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    /// Ten Gaussian classes `0`..`9`.
    Upscaled {
        #[serde(default = "default_upscaled_dim")]
        dim: usize,
        train_counts: BTreeMap<String, usize>,
        test_counts: BTreeMap<String, usize>,
        #[serde(default = "default_block_shift")]
        block_shift: f64,
        #[serde(default = "default_pair_shift")]
        pair_shift: f64,
    },
    /// Mixture draws; the scenario seeds are replaced per repetition.
    Scenario { train: ShiftScenario, test: ShiftScenario },
    /// Labelled CSV files. With `pool`, train and test are disjoint draws
    /// from one file and both count maps are required.
    Csv {
        #[serde(default)]
        train: Option<PathBuf>,
        #[serde(default)]
        test: Option<PathBuf>,
        #[serde(default)]
        pool: Option<PathBuf>,
        label_column: String,
        #[serde(default)]
        train_counts: Option<BTreeMap<String, usize>>,
        #[serde(default)]
        test_counts: Option<BTreeMap<String, usize>>,
    },
}

/// Strange-set audit sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Class sizes `n`.
    pub sizes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub seeds: usize,
    pub b_tilde: usize,
    pub gamma: f64,
    /// Test rows besides the held one.
    pub test_rest: usize,
    pub n_other: usize,
    pub dim: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            sizes: (2..=12).collect(),
            alphas: vec![0.05, 0.2, 0.5],
            seeds: 1000,
            b_tilde: 20,
            gamma: 1.0,
            test_rest: 5,
            n_other: 5,
            dim: 2,
        }
    }
}

/// One repetition's data, with known densities when the source has them.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub train: Dataset,
    /// Labelled for evaluation; labels are never shown to a method.
    pub test: Dataset,
    pub oracle: Option<OracleSpec>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Relative CSV paths are taken relative to the config file.
    fn resolve_paths(&mut self, base: &Path) {
        if let DataSource::Csv { train, test, pool, .. } = &mut self.data {
            for p in [train, test, pool].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if self.repetitions == 0 {
            return Err(CliError::Config("repetitions must be at least 1".into()));
        }
        let mut labels = BTreeMap::new();
        for m in &self.methods {
            m.validate()?;
            if labels.insert(m.label(), ()).is_some() {
                return Err(CliError::Config(format!("duplicate method label '{}'", m.label())));
            }
        }
        if let DataSource::Csv {
            train,
            test,
            pool,
            train_counts,
            test_counts,
            ..
        } = &self.data
        {
            let ok = match pool {
                Some(_) => train.is_none() && test.is_none() && train_counts.is_some() && test_counts.is_some(),
                None => train.is_some() && test.is_some(),
            };
            if !ok {
                return Err(CliError::Config(
                    "csv data needs either train and test files, or a pool with train_counts and test_counts".into(),
                ));
            }
        }
        if self.audit.sizes.contains(&0) || self.audit.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(CliError::Config(
                "audit sizes must be positive and alphas in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Flag, then file, then environment, then the built-in default.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn data_seed(&self, rep: usize) -> u64 {
        derive_seed(self.seed, "data", rep as u64)
    }

    pub fn cohort(&self, rep: usize) -> CliResult<Cohort> {
        self.data.cohort(self.data_seed(rep))
    }

    /// Built-in configurations.
    pub fn preset(name: &str) -> CliResult<Self> {
        let counts = |pairs: &[(&str, usize)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let data = match name {
            "example1" => DataSource::Example1 {
                n_train: 200,
                n_test: 200,
                dim: EXAMPLE1_DIM,
            },
            "upscaled" => DataSource::Upscaled {
                dim: 50,
                train_counts: counts(&[("0", 100), ("1", 100), ("2", 100), ("3", 100), ("4", 100), ("5", 100)]),
                test_counts: (0..10).map(|d| (d.to_string(), 100)).collect(),
                block_shift: UPSCALED_BLOCK_SHIFT,
                pair_shift: UPSCALED_PAIR_SHIFT,
            },
            "shift" => DataSource::Upscaled {
                dim: 50,
                train_counts: counts(&[("0", 500), ("1", 500), ("2", 500), ("3", 100), ("4", 100), ("5", 100)]),
                test_counts: counts(&[("0", 100), ("1", 100), ("2", 100), ("3", 500), ("4", 500), ("5", 500)]),
                block_shift: UPSCALED_BLOCK_SHIFT,
                pair_shift: UPSCALED_PAIR_SHIFT,
            },
            other => {
                return Err(CliError::Usage(format!(
                    "unknown preset '{other}' (expected example1, upscaled or shift)"
                )))
            }
        };
        Ok(Self {
            seed: 0,
            repetitions: 1,
            alpha: default_alpha(),
            output_dir: None,
            data,
            methods: crate::methods::MethodName::ALL
                .iter()
                .map(|&n| MethodConfig::new(n))
                .collect(),
            audit: AuditConfig::default(),
        })
    }
}

fn index_counts(design: &ClassDesign, counts: &BTreeMap<String, usize>) -> CliResult<BTreeMap<usize, usize>> {
    counts
        .iter()
        .map(|(name, &c)| {
            design
                .index(name)
                .map(|k| (k, c))
                .ok_or_else(|| CliError::Config(format!("unknown class '{name}'")))
        })
        .collect()
}

fn dataset_counts(data: &Dataset, counts: &BTreeMap<String, usize>) -> CliResult<BTreeMap<usize, usize>> {
    counts
        .iter()
        .map(|(name, &c)| {
            data.class_index(name)
                .map(|k| (k, c))
                .ok_or_else(|| CliError::Config(format!("class '{name}' not present in data")))
        })
        .collect()
}

fn pairs(map: &BTreeMap<usize, usize>) -> Vec<(usize, usize)> {
    map.iter().map(|(&k, &c)| (k, c)).collect()
}

impl DataSource {
    pub fn cohort(&self, seed: u64) -> CliResult<Cohort> {
        match self {
            DataSource::Example1 { n_train, n_test, dim } => {
                let (train, test) = generate_example1_dim(*dim, *n_train, *n_test, seed)?;
                let oracle = OracleSpec::example1(*dim, 1.0, derive_seed(seed, "oracle", 0))?;
                Ok(Cohort {
                    train,
                    test,
                    oracle: Some(oracle),
                })
            }
            DataSource::Upscaled {
                dim,
                train_counts,
                test_counts,
                block_shift,
                pair_shift,
            } => {
                let design = example1_upscaled_with(*dim, *block_shift, *pair_shift)?;
                let tr = index_counts(&design, train_counts)?;
                let te = index_counts(&design, test_counts)?;
                let train = design.sample(&tr, seed, "upscaled/train")?;
                let test = design.sample(&te, seed, "upscaled/test")?;
                let oracle =
                    OracleSpec::from_design(&design, &pairs(&tr), &pairs(&te), 1.0, derive_seed(seed, "oracle", 0))?;
                Ok(Cohort {
                    train,
                    test,
                    oracle: Some(oracle),
                })
            }
            DataSource::Scenario { train, test } => {
                if train.outlier.as_ref().is_some_and(|o| o.weight > 0.0) {
                    return Err(CliError::Config("training scenario cannot contain outliers".into()));
                }
                let train_s = ShiftScenario {
                    seed: derive_seed(seed, "scenario/train", 0),
                    ..train.clone()
                };
                let test_s = ShiftScenario {
                    seed: derive_seed(seed, "scenario/test", 0),
                    ..test.clone()
                };
                let oracle = OracleSpec {
                    class_names: train.classes.iter().map(|c| c.name.clone()).collect(),
                    classes: train.classes.iter().map(|c| c.spec.clone()).collect(),
                    test_mixture: test.classes.iter().chain(test.outlier.as_ref()).cloned().collect(),
                    train_weights: train.classes.iter().map(|c| c.weight).collect(),
                    w: 1.0,
                    mc_samples: csforest::oracle::DEFAULT_MC_SAMPLES,
                    seed: derive_seed(seed, "oracle", 0),
                };
                Ok(Cohort {
                    train: drop_empty_classes(sample_shift_scenario(&train_s)?)?,
                    test: sample_shift_scenario(&test_s)?,
                    oracle: Some(oracle),
                })
            }
            DataSource::Csv {
                train,
                test,
                pool,
                label_column,
                train_counts,
                test_counts,
            } => {
                let (train, test) = match (pool, train, test) {
                    (Some(pool), _, _) => {
                        let data = load_csv(pool, Some(label_column))?;
                        let tr = dataset_counts(&data, train_counts.as_ref().expect("validated"))?;
                        let te = dataset_counts(&data, test_counts.as_ref().expect("validated"))?;
                        split_per_class(&data, &tr, &te, seed)?
                    }
                    (None, Some(train_path), Some(test_path)) => {
                        let mut train = load_csv(train_path, Some(label_column))?;
                        let mut test = load_csv(test_path, Some(label_column))?;
                        if let Some(c) = train_counts {
                            train = subsample_per_class(
                                &train,
                                &dataset_counts(&train, c)?,
                                derive_seed(seed, "csv/train", 0),
                            )?;
                        }
                        if let Some(c) = test_counts {
                            test = subsample_per_class(
                                &test,
                                &dataset_counts(&test, c)?,
                                derive_seed(seed, "csv/test", 0),
                            )?;
                        }
                        (train, test)
                    }
                    _ => return Err(CliError::Config("incomplete csv data source".into())),
                };
                Ok(Cohort {
                    train,
                    test,
                    oracle: None,
                })
            }
        }
    }
}

/// Training classes with no sampled rows cannot be modelled.
fn drop_empty_classes(data: Dataset) -> CliResult<Dataset> {
    let counts: BTreeMap<usize, usize> = data
        .class_counts()
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .collect();
    Ok(subsample_per_class(&data, &counts, 0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            seed = 3
            [data]
            kind = "example1"
            n_train = 10
            n_test = 5
            [[methods]]
            name = "csforest"
            b_tilde = 50
            "#,
        )
        .unwrap();
        assert_eq!(cfg.repetitions, 1);
        assert_eq!(cfg.alpha, 0.05);
        let c = cfg.cohort(0).unwrap();
        assert_eq!(
            (c.train.n_samples(), c.test.n_samples(), c.train.n_features()),
            (20, 15, 10)
        );
    }

    #[test]
    fn rejects_unknown_method_and_bad_alpha() {
        let base = "[data]\nkind = \"example1\"\nn_train = 2\nn_test = 2\n";
        assert!(ExperimentConfig::from_toml_str(&format!("{base}[[methods]]\nname = \"svm\"\n")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("alpha = 1.5\n{base}")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("repetitions = 0\n{base}")).is_err());
    }

    #[test]
    fn shift_preset_counts() {
        let cfg = ExperimentConfig::preset("shift").unwrap();
        let c = cfg.cohort(0).unwrap();
        assert_eq!(c.train.class_counts(), vec![500, 500, 500, 100, 100, 100]);
        assert_eq!(c.test.class_counts(), vec![100, 100, 100, 500, 500, 500]);
    }
}
