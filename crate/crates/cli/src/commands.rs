//! Subcommands: generate, run, audit, compare.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use csforest::csforest::{comparison_matrix, AuditInput, AuditRecord};
use csforest::dataset::{example1_specs, write_csv, Features};
use csforest::eval::{aggregate_runs, align_truth, type_errors, EvalReport};
use csforest::rng::{derive_seed, stream, StreamRng};
use csforest::tree::TreeParams;
use log::info;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AuditConfig, ExperimentConfig};
use crate::error::{CliError, CliResult};

fn rep_dir(out: &Path, rep: usize) -> CliResult<PathBuf> {
    let dir = out.join(format!("rep{rep}"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Writes `rep<r>/train.csv` and `rep<r>/test.csv` for every repetition.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for rep in 0..cfg.repetitions {
        let cohort = cfg.cohort(rep)?;
        let dir = rep_dir(out, rep)?;
        for (name, data) in [("train.csv", &cohort.train), ("test.csv", &cohort.test)] {
            let path = dir.join(name);
            write_csv(data, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodRecord {
    pub label: String,
    pub method: &'static str,
    pub seed: u64,
    pub seed_derivation: String,
    pub sets_file: String,
    pub report_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepRecord {
    pub rep: usize,
    pub data_seed: u64,
    pub seed_derivation: String,
    pub n_train: usize,
    pub n_test: usize,
    pub methods: Vec<MethodRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub repetitions: Vec<RepRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: PathBuf,
    /// `(rep, label, report)` in run order.
    pub reports: Vec<(usize, String, EvalReport)>,
}

impl RunOutput {
    /// Reports of one method label across repetitions.
    pub fn reports_for(&self, label: &str) -> Vec<EvalReport> {
        self.reports
            .iter()
            .filter(|(_, l, _)| l == label)
            .map(|(_, _, r)| r.clone())
            .collect()
    }
}

pub fn method_seed(master: u64, label: &str, rep: usize) -> u64 {
    derive_seed(master, &format!("method/{label}"), rep as u64)
}

/// For every repetition and method: `rep<r>/<label>_sets.csv` and
/// `rep<r>/<label>_report.json`, plus `manifest.json` at the top.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> CliResult<RunOutput> {
    if cfg.methods.is_empty() {
        return Err(CliError::Config("no methods configured".into()));
    }
    fs::create_dir_all(out)?;
    let mut reps = Vec::new();
    let mut reports = Vec::new();
    for rep in 0..cfg.repetitions {
        let cohort = cfg.cohort(rep)?;
        let truth = align_truth(&cohort.test, cohort.train.class_names())?;
        let dir = rep_dir(out, rep)?;
        let mut methods = Vec::new();
        for m in &cfg.methods {
            let label = m.label();
            let seed = method_seed(cfg.seed, &label, rep);
            info!("rep {rep}: running {label}");
            let sets = m.run(&cohort, cfg.alpha, seed)?;
            let report = type_errors(&sets, &truth)?;
            let sets_file = format!("rep{rep}/{label}_sets.csv");
            let report_file = format!("rep{rep}/{label}_report.json");
            sets.write_csv(dir.join(format!("{label}_sets.csv")))?;
            fs::write(dir.join(format!("{label}_report.json")), report.to_json()?)?;
            methods.push(MethodRecord {
                label: label.clone(),
                method: m.name.as_str(),
                seed,
                seed_derivation: format!("derive_seed({}, \"method/{label}\", {rep})", cfg.seed),
                sets_file,
                report_file,
            });
            reports.push((rep, label, report));
        }
        reps.push(RepRecord {
            rep,
            data_seed: cfg.data_seed(rep),
            seed_derivation: format!("derive_seed({}, \"data\", {rep})", cfg.seed),
            n_train: cohort.train.n_samples(),
            n_test: cohort.test.n_samples(),
            methods,
        });
    }
    let manifest = out.join("manifest.json");
    fs::write(
        &manifest,
        serde_json::to_string_pretty(&Manifest {
            config: cfg.clone(),
            repetitions: reps,
        })?,
    )?;
    Ok(RunOutput { manifest, reports })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditLogEntry {
    pub seed: usize,
    pub record: AuditRecord,
}

#[derive(Debug, Clone)]
pub struct AuditSummary {
    pub entries: Vec<AuditLogEntry>,
    pub violations: usize,
}

impl AuditSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,alpha,seed,diagonal_ok,strange_set_size,bound,bound_holds,held_in_strange_set\n");
        for e in &self.entries {
            let r = &e.record;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.n, r.alpha, e.seed, r.diagonal_ok, r.strange_set_size, r.bound, r.bound_holds, r.held_in_strange_set
            );
        }
        out
    }
}

/// One audit instance: `n` class-`1` rows of the introductory example, a
/// held test row and the rest of a small test cohort drawn from all three
/// components, and class-`2` rows as the other classes.
fn audit_instance(
    audit: &AuditConfig,
    master: u64,
    n: usize,
    s: usize,
) -> CliResult<csforest::csforest::ComparisonMatrix> {
    let specs = example1_specs(audit.dim)?;
    let seed = derive_seed(master, &format!("audit/{n}"), s as u64);
    let mut r = stream(seed, "audit/data", 0);
    let rows = |components: &[usize], r: &mut StreamRng| -> CliResult<Features> {
        if components.is_empty() {
            return Ok(Features::empty(audit.dim));
        }
        let rows: Vec<Vec<f64>> = components.iter().map(|&c| specs[c].sample(r)).collect();
        Ok(Features::from_rows(&rows)?)
    };
    let train_k = rows(&vec![0; n], &mut r)?;
    let other = rows(&vec![1; audit.n_other], &mut r)?;
    let test_components: Vec<usize> = (0..=audit.test_rest).map(|_| r.random_range(0..3)).collect();
    let held = rows(&test_components[..1], &mut r)?;
    let rest = rows(&test_components[1..], &mut r)?;
    Ok(comparison_matrix(&AuditInput {
        train_k: &train_k,
        held: held.row(0),
        test_rest: &rest,
        train_other: &other,
        b_tilde: audit.b_tilde,
        gamma: audit.gamma,
        tree_params: TreeParams::default(),
        seed,
    })?)
}

/// Sweep all `(n, seed)` instances; each comparison matrix is audited at
/// every configured α. Writes `audit_log.csv` when `out` is given.
pub fn cmd_audit(audit: &AuditConfig, master: u64, out: Option<&Path>) -> CliResult<AuditSummary> {
    let jobs: Vec<(usize, usize)> = audit
        .sizes
        .iter()
        .flat_map(|&n| (0..audit.seeds).map(move |s| (n, s)))
        .collect();
    let entries: Vec<AuditLogEntry> = jobs
        .par_iter()
        .map(|&(n, s)| {
            let a = audit_instance(audit, master, n, s)?;
            Ok(audit
                .alphas
                .iter()
                .map(|&alpha| AuditLogEntry {
                    seed: s,
                    record: a.audit(alpha),
                })
                .collect::<Vec<_>>())
        })
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let violations = entries
        .iter()
        .filter(|e| !(e.record.diagonal_ok && e.record.bound_holds))
        .count();
    let summary = AuditSummary { entries, violations };
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        fs::write(out.join("audit_log.csv"), summary.to_csv())?;
    }
    Ok(summary)
}

/// `Method | Type I | Type II` with mean ± sd per method. The method label
/// is the file name with its `_report.json` suffix removed.
pub fn cmd_compare(paths: &[PathBuf]) -> CliResult<String> {
    if paths.is_empty() {
        return Err(CliError::Usage("no report files given".into()));
    }
    let mut by_method: BTreeMap<String, Vec<EvalReport>> = BTreeMap::new();
    for p in paths {
        let text = fs::read_to_string(p).map_err(|source| CliError::Read {
            path: p.clone(),
            source,
        })?;
        let report = EvalReport::from_json(&text)?;
        let stem = p.file_name().and_then(|s| s.to_str()).unwrap_or("report");
        let label = stem
            .strip_suffix("_report.json")
            .or_else(|| stem.strip_suffix(".json"))
            .unwrap_or(stem);
        by_method.entry(label.to_string()).or_default().push(report);
    }
    let mut out = String::from("Method\tType I\tType II\n");
    for (label, reports) in &by_method {
        let agg = aggregate_runs(reports)?;
        let cell = |key: &str| {
            agg.get(key)
                .map_or_else(|| "n/a".to_string(), |e| format!("{:.4} ± {:.4}", e.mean, e.sd))
        };
        let _ = writeln!(out, "{label}\t{}\t{}", cell("type_i"), cell("type_ii"));
    }
    Ok(out)
}
