//! Coverage and error summaries of prediction sets.
//!
//! For an inlier of class `y` the set falls in exactly one of: `{y}`
//! (singleton), a larger set containing `y` (multi), `∅` (empty), or a
//! non-empty set without `y` (miss). Outliers can only be rejected (empty)
//! or given false labels.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::sets::PredictionSets;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Truth {
    /// Index into the training class names.
    Inlier(usize),
    /// A class absent from training.
    Outlier(String),
}

/// Map test labels to training classes by name. Every test row must be
/// labelled.
pub fn align_truth(test: &Dataset, train_names: &[String]) -> Result<Vec<Truth>> {
    let labels = test.required_labels()?;
    Ok(labels
        .iter()
        .map(|&l| {
            let name = &test.class_names()[l];
            match train_names.iter().position(|n| n == name) {
                Some(k) => Truth::Inlier(k),
                None => Truth::Outlier(name.clone()),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub name: String,
    pub outlier: bool,
    pub count: usize,
    pub singleton: usize,
    pub multi: usize,
    pub empty: usize,
    pub miss: usize,
    /// Samples whose set holds a label other than the truth.
    pub false_label: usize,
}

impl ClassReport {
    fn new(name: String, outlier: bool) -> Self {
        Self {
            name,
            outlier,
            count: 0,
            singleton: 0,
            multi: 0,
            empty: 0,
            miss: 0,
            false_label: 0,
        }
    }

    fn rate(&self, c: usize) -> Option<f64> {
        (self.count > 0).then(|| c as f64 / self.count as f64)
    }

    /// Not applicable to outliers or classes without samples.
    pub fn coverage(&self) -> Option<f64> {
        if self.outlier {
            None
        } else {
            self.rate(self.singleton + self.multi)
        }
    }

    pub fn type_i(&self) -> Option<f64> {
        if self.outlier || self.count == 0 {
            None
        } else {
            Some((self.empty + self.miss) as f64 / self.count as f64)
        }
    }

    pub fn singleton_rate(&self) -> Option<f64> {
        self.rate(self.singleton)
    }

    pub fn multi_rate(&self) -> Option<f64> {
        self.rate(self.multi)
    }

    /// Rejection rate for outliers.
    pub fn empty_rate(&self) -> Option<f64> {
        self.rate(self.empty)
    }

    pub fn miss_rate(&self) -> Option<f64> {
        self.rate(self.miss)
    }

    pub fn false_label_rate(&self) -> Option<f64> {
        self.rate(self.false_label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Training classes in order, then outlier classes by name.
    pub classes: Vec<ClassReport>,
    pub n_samples: usize,
    pub n_inliers: usize,
    pub type_i_count: usize,
    pub type_ii_count: usize,
    pub mean_set_size: f64,
}

impl EvalReport {
    /// Inlier samples whose set excludes the truth.
    pub fn type_i(&self) -> f64 {
        ratio(self.type_i_count, self.n_inliers)
    }

    /// All samples whose set holds some other label.
    pub fn type_ii(&self) -> f64 {
        ratio(self.type_ii_count, self.n_samples)
    }

    /// Rejection rate over all outlier samples.
    pub fn outlier_rejection(&self) -> Option<f64> {
        let (n, e) = self
            .classes
            .iter()
            .filter(|c| c.outlier)
            .fold((0, 0), |(n, e), c| (n + c.count, e + c.empty));
        (n > 0).then(|| e as f64 / n as f64)
    }

    pub fn class(&self, name: &str) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Stable `key → value` listing; not-applicable entries are left out.
    pub fn flat(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("type_i".to_string(), self.type_i()),
            ("type_ii".to_string(), self.type_ii()),
            ("mean_set_size".to_string(), self.mean_set_size),
        ];
        if let Some(r) = self.outlier_rejection() {
            out.push(("outlier_rejection".into(), r));
        }
        for c in &self.classes {
            let entries = [
                ("coverage", c.coverage()),
                ("type_i", c.type_i()),
                ("singleton", c.singleton_rate()),
                ("multi", c.multi_rate()),
                ("empty", c.empty_rate()),
                ("miss", c.miss_rate()),
                ("false_label", c.false_label_rate()),
            ];
            for (key, v) in entries {
                if let Some(v) = v {
                    out.push((format!("class.{}.{key}", c.name), v));
                }
            }
        }
        out
    }

    /// Long format `class,category,rate` with the partition of each class.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("class,category,rate\n");
        for c in &self.classes {
            let cats: &[(&str, usize)] = if c.outlier {
                &[("empty", c.empty), ("false_label", c.false_label)]
            } else {
                &[
                    ("singleton", c.singleton),
                    ("multi", c.multi),
                    ("empty", c.empty),
                    ("miss", c.miss),
                ]
            };
            for &(cat, n) in cats {
                let _ = writeln!(out, "{},{cat},{}", c.name, c.rate(n).unwrap_or(0.0));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn export(&self, path: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
        let body = match format {
            ExportFormat::Json => self.to_json()?,
            ExportFormat::LongCsv => self.to_long_csv(),
            ExportFormat::KeyValue => render_key_values(self.flat().iter().map(|(k, v)| (k.as_str(), *v))),
        };
        fs::write(path, body)?;
        Ok(())
    }

    pub fn import_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    LongCsv,
    KeyValue,
}

fn render_key_values<'a>(entries: impl Iterator<Item = (&'a str, f64)>) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in entries {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Tally sets against the truth.
pub fn type_errors(sets: &PredictionSets, truth: &[Truth]) -> Result<EvalReport> {
    if sets.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} sets for {} labels",
            sets.len(),
            truth.len()
        )));
    }
    let names = sets.class_names();
    let outliers: BTreeSet<&str> = truth
        .iter()
        .filter_map(|t| match t {
            Truth::Outlier(n) => Some(n.as_str()),
            Truth::Inlier(_) => None,
        })
        .collect();
    let mut classes: Vec<ClassReport> = names.iter().map(|n| ClassReport::new(n.clone(), false)).collect();
    classes.extend(outliers.iter().map(|n| ClassReport::new(n.to_string(), true)));
    let mut report = EvalReport {
        classes,
        n_samples: truth.len(),
        n_inliers: 0,
        type_i_count: 0,
        type_ii_count: 0,
        mean_set_size: sets.mean_size(),
    };
    for (i, t) in truth.iter().enumerate() {
        let set = sets.get(i);
        let (slot, hit, has_other) = match t {
            Truth::Inlier(y) => {
                if *y >= names.len() {
                    return Err(Error::InvalidInput(format!(
                        "true class {y} outside {} classes",
                        names.len()
                    )));
                }
                (*y, set.contains(y), set.iter().any(|c| c != y))
            }
            Truth::Outlier(n) => (
                names.len() + outliers.iter().position(|o| o == n).expect("collected above"),
                false,
                !set.is_empty(),
            ),
        };
        let c = &mut report.classes[slot];
        c.count += 1;
        if has_other {
            c.false_label += 1;
            report.type_ii_count += 1;
        }
        match (set.is_empty(), hit, set.len()) {
            (true, _, _) => c.empty += 1,
            (false, true, 1) => c.singleton += 1,
            (false, true, _) => c.multi += 1,
            (false, false, _) => c.miss += 1,
        }
        if !c.outlier {
            report.n_inliers += 1;
            if !hit {
                report.type_i_count += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateEntry {
    pub key: String,
    pub mean: f64,
    pub sd: f64,
}

/// Mean and sample standard deviation of each flat field over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub entries: Vec<AggregateEntry>,
}

impl AggregateReport {
    pub fn get(&self, key: &str) -> Option<&AggregateEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,mean,sd\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.key, e.mean, e.sd);
        }
        out
    }
}

pub fn aggregate_runs(reports: &[EvalReport]) -> Result<AggregateReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidInput("no reports to aggregate".into()))?
        .flat();
    let flats: Vec<Vec<(String, f64)>> = reports.iter().map(EvalReport::flat).collect();
    for f in &flats {
        if f.len() != first.len() || f.iter().zip(&first).any(|(a, b)| a.0 != b.0) {
            return Err(Error::InvalidInput("reports have different class structure".into()));
        }
    }
    let n = reports.len() as f64;
    let entries = first
        .iter()
        .enumerate()
        .map(|(j, (key, _))| {
            let vals: Vec<f64> = flats.iter().map(|f| f[j].1).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let sd = if reports.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            AggregateEntry {
                key: key.clone(),
                mean,
                sd,
            }
        })
        .collect();
    Ok(AggregateReport {
        runs: reports.len(),
        entries,
    })
}
