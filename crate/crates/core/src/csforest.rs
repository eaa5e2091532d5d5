//! Conformalized semi-supervised random forest.
//!
//! For every training class `k` a tree ensemble separates three labels:
//! bootstrapped class-`k` rows, bootstrapped (unlabeled) test rows and a
//! bootstrap of the remaining training classes whose size is set by `gamma`.
//! A test sample `i` is compared with each class-`k` training sample `i'`
//! using only the trees whose bootstraps exclude both, and the calibrated
//! score is
//!
//! ```text
//! s_ik = (1 + #{i' : f^{ii'}(x_i) >= f^{ii'}(x_i')}) / (n_k + 1)
//! ```
//!
//! The prediction set is `{k : s_ik >= alpha}`; an empty set flags an outlier.
//!
//! Per-tree in-bag masks are stored as bitsets, and each tree's class-`k`
//! leaf fraction is cached once per sample. The pair kernel walks the
//! intersection of the test sample's and the training sample's out-of-bag
//! tree sets word by word, so all pair means are summed in ascending tree
//! order regardless of thread count.

use log::info;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::dataset::{Dataset, Features};
use crate::error::{Error, Result};
use crate::rng;
pub use crate::sets::PredictionSets;
use crate::tree::{bootstrap_indices, bootstrap_sized, fit_tree, TreeModel, TreeParams};

/// Tree label for bootstrapped rows of the class being modelled.
pub const LABEL_CLASS: usize = 0;
/// Tree label for bootstrapped rows of the other training classes.
pub const LABEL_OTHER: usize = 1;
/// Tree label for bootstrapped test rows.
pub const LABEL_TEST: usize = 2;
const ALPHABET: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsForestParams {
    pub alpha: f64,
    /// Other-class bootstrap size is `min(⌈m·gamma⌉, n - n_k)`.
    pub gamma: f64,
    /// Nominal number of trees per class.
    pub b_tilde: usize,
    pub tree_params: TreeParams,
    pub seed: u64,
}

impl Default for CsForestParams {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            gamma: 1.0,
            b_tilde: 3000,
            tree_params: TreeParams::default(),
            seed: 0,
        }
    }
}

impl CsForestParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gamma {} must be a finite value >= 0",
                self.gamma
            )));
        }
        if self.b_tilde == 0 {
            return Err(Error::InvalidInput("b_tilde must be at least 1".into()));
        }
        Ok(())
    }

    /// `gamma = 1 / ln(m)`, the logarithmic other-class weight.
    pub fn log_gamma(m: usize) -> f64 {
        1.0 / (m.max(2) as f64).ln()
    }
}

/// `(1 - 1/(n_k+1))^{n_k}`: the chance a bootstrap of `n_k + 1` points
/// misses a given point.
pub fn tree_keep_probability(n_k: usize) -> f64 {
    let n = n_k as f64;
    (n * (-1.0 / (n + 1.0)).ln_1p()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCount {
    pub count: usize,
    /// Draws discarded because they came out as zero.
    pub resamples: usize,
}

/// `B ~ Binomial(b_tilde, (1 - 1/(n_k+1))^{n_k})`, redrawn while zero.
pub fn sample_tree_count<R: Rng + ?Sized>(b_tilde: usize, n_k: usize, rng: &mut R) -> Result<TreeCount> {
    if b_tilde == 0 || n_k == 0 {
        return Err(Error::InvalidInput("b_tilde and n_k must be at least 1".into()));
    }
    let dist =
        Binomial::new(b_tilde as u64, tree_keep_probability(n_k)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut resamples = 0;
    loop {
        let b = dist.sample(rng) as usize;
        if b > 0 {
            if resamples > 0 {
                info!("tree count redrawn {resamples} time(s) after zero draws");
            }
            return Ok(TreeCount { count: b, resamples });
        }
        resamples += 1;
    }
}

/// Trees for one training class with their bootstrap masks and cached
/// class-`k` leaf fractions.
#[derive(Debug, Clone)]
pub struct ClassEnsemble {
    class: usize,
    n_train: usize,
    n_test: usize,
    other_size: usize,
    tree_count: TreeCount,
    trees: Vec<TreeModel>,
    /// Per tree: which class-`k` training rows were drawn.
    train_in_bag: Vec<BitSet>,
    /// Per tree: which test rows were drawn.
    test_in_bag: Vec<BitSet>,
    /// Per training row: trees that did not draw it.
    train_oob: Vec<BitSet>,
    /// Per test row: trees that did not draw it.
    test_oob: Vec<BitSet>,
    /// `[i * B + b]`: tree `b`'s class fraction at training row `i`.
    train_fraction: Vec<f64>,
    /// `[i * B + b]`: tree `b`'s class fraction at test row `i`.
    test_fraction: Vec<f64>,
}

/// Stream tag index for tree `b` of class `k`.
fn tree_stream_index(class: usize, b: usize) -> u64 {
    ((class as u64) << 32) | b as u64
}

/// Fit the ensemble for `class` on its training rows `train_k`, the other
/// training rows and the test cohort.
pub fn build_class_ensemble(
    train_k: &Features,
    train_other: &Features,
    test: &Features,
    class: usize,
    params: &CsForestParams,
) -> Result<ClassEnsemble> {
    params.validate()?;
    let n_k = train_k.n_samples();
    let m = test.n_samples();
    if n_k == 0 || m == 0 {
        return Err(Error::InvalidInput(
            "class ensemble needs at least one training and one test row".into(),
        ));
    }
    let p = train_k.n_features();
    if test.n_features() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: test.n_features(),
        });
    }
    let n_other = train_other.n_samples();
    let other_size = if params.gamma == 0.0 || n_other == 0 {
        0
    } else {
        ((m as f64 * params.gamma).ceil() as usize).min(n_other)
    };
    let stacked = if n_other > 0 {
        Features::concat(&[train_k, test, train_other])?
    } else {
        Features::concat(&[train_k, test])?
    };

    let tree_count = sample_tree_count(
        params.b_tilde,
        n_k,
        &mut rng::stream(params.seed, "csforest/tree-count", class as u64),
    )?;
    let b_count = tree_count.count;

    let fitted: Vec<(TreeModel, BitSet, BitSet)> = (0..b_count)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(params.seed, "csforest/tree", tree_stream_index(class, b));
            let boot_k = bootstrap_indices(n_k, &mut r);
            let boot_te = bootstrap_indices(m, &mut r);
            let other_draws = if other_size > 0 {
                bootstrap_sized(n_other, other_size, &mut r).draws
            } else {
                Vec::new()
            };
            let total = n_k + m + other_draws.len();
            let mut samples = Vec::with_capacity(total);
            let mut labels = Vec::with_capacity(total);
            samples.extend(boot_k.draws.iter().copied());
            labels.extend(std::iter::repeat_n(LABEL_CLASS, n_k));
            samples.extend(boot_te.draws.iter().map(|&j| n_k + j));
            labels.extend(std::iter::repeat_n(LABEL_TEST, m));
            samples.extend(other_draws.iter().map(|&j| n_k + m + j));
            labels.extend(std::iter::repeat_n(LABEL_OTHER, other_draws.len()));
            let tree = fit_tree(&stacked, &samples, &labels, ALPHABET, &params.tree_params, &mut r)?;
            Ok((tree, boot_k.in_bag, boot_te.in_bag))
        })
        .collect::<Result<_>>()?;

    let mut trees = Vec::with_capacity(b_count);
    let mut train_in_bag = Vec::with_capacity(b_count);
    let mut test_in_bag = Vec::with_capacity(b_count);
    for (t, tr, te) in fitted {
        trees.push(t);
        train_in_bag.push(tr);
        test_in_bag.push(te);
    }
    let cache = |x: &Features| -> Vec<f64> {
        (0..x.n_samples())
            .into_par_iter()
            .flat_map_iter(|i| {
                let row = x.row(i);
                trees.iter().map(move |t| t.leaf_fractions(row)[LABEL_CLASS])
            })
            .collect()
    };
    let train_fraction = cache(train_k);
    let test_fraction = cache(test);
    let transpose = |masks: &[BitSet], n: usize| -> Vec<BitSet> {
        (0..n)
            .map(|i| {
                let mut s = BitSet::new(b_count);
                for (b, mask) in masks.iter().enumerate() {
                    if !mask.contains(i) {
                        s.insert(b);
                    }
                }
                s
            })
            .collect()
    };
    let train_oob = transpose(&train_in_bag, n_k);
    let test_oob = transpose(&test_in_bag, m);
    Ok(ClassEnsemble {
        class,
        n_train: n_k,
        n_test: m,
        other_size,
        tree_count,
        trees,
        train_in_bag,
        test_in_bag,
        train_oob,
        test_oob,
        train_fraction,
        test_fraction,
    })
}

impl ClassEnsemble {
    pub fn class(&self) -> usize {
        self.class
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_test(&self) -> usize {
        self.n_test
    }

    /// Size of the other-class bootstrap each tree was fitted with.
    pub fn other_size(&self) -> usize {
        self.other_size
    }

    pub fn tree_count(&self) -> TreeCount {
        self.tree_count
    }

    pub fn trees(&self) -> &[TreeModel] {
        &self.trees
    }

    pub fn train_in_bag(&self, b: usize) -> &BitSet {
        &self.train_in_bag[b]
    }

    pub fn test_in_bag(&self, b: usize) -> &BitSet {
        &self.test_in_bag[b]
    }

    /// Trees whose bootstraps contain neither test row `i` nor training row `i_train`.
    pub fn pair_trees(&self, i: usize, i_train: usize) -> Vec<usize> {
        let both: Vec<u64> = self.test_oob[i]
            .words()
            .iter()
            .zip(self.train_oob[i_train].words())
            .map(|(a, b)| a & b)
            .collect();
        crate::bitset::iter_words(&both).collect()
    }

    /// Mean class fraction at `x` over the leave-pair-out trees of
    /// `(i, i_train)`; `None` when no tree excludes both.
    pub fn pair_ensemble_fraction(&self, i: usize, i_train: usize, x: &[f64]) -> Result<Option<f64>> {
        if i >= self.n_test || i_train >= self.n_train {
            return Err(Error::InvalidInput(format!("pair ({i}, {i_train}) out of range")));
        }
        let trees = self.pair_trees(i, i_train);
        if trees.is_empty() {
            return Ok(None);
        }
        let mut sum = 0.0;
        for b in &trees {
            sum += self.trees[*b].predict_fraction(x, LABEL_CLASS)?;
        }
        Ok(Some(sum / trees.len() as f64))
    }

    /// Number of training rows `i'` whose comparison with test row `i`
    /// succeeds. Degenerate pairs count as successes.
    fn successes(&self, i: usize) -> u32 {
        let b_count = self.trees.len();
        let te_words = self.test_oob[i].words();
        let te_f = &self.test_fraction[i * b_count..(i + 1) * b_count];
        let mut successes = 0u32;
        for j in 0..self.n_train {
            let tr_words = self.train_oob[j].words();
            let tr_f = &self.train_fraction[j * b_count..(j + 1) * b_count];
            let (mut s_te, mut s_tr, mut c) = (0.0f64, 0.0f64, 0u32);
            for (w, (&a, &b)) in te_words.iter().zip(tr_words).enumerate() {
                let mut bits = a & b;
                while bits != 0 {
                    let t = w * 64 + bits.trailing_zeros() as usize;
                    s_te += te_f[t];
                    s_tr += tr_f[t];
                    c += 1;
                    bits &= bits - 1;
                }
            }
            if c == 0 || s_te / f64::from(c) >= s_tr / f64::from(c) {
                successes += 1;
            }
        }
        successes
    }

    /// Copy with training rows reordered: new row `r` is old row `perm[r]`.
    pub fn with_train_permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_train {
            return Err(Error::LengthMismatch("permutation length".into()));
        }
        let b_count = self.trees.len();
        let mut out = self.clone();
        out.train_oob = perm.iter().map(|&j| self.train_oob[j].clone()).collect();
        out.train_fraction = perm
            .iter()
            .flat_map(|&j| self.train_fraction[j * b_count..(j + 1) * b_count].iter().copied())
            .collect();
        for (b, mask) in out.train_in_bag.iter_mut().enumerate() {
            let mut s = BitSet::new(self.n_train);
            for (r, &j) in perm.iter().enumerate() {
                if self.train_in_bag[b].contains(j) {
                    s.insert(r);
                }
            }
            *mask = s;
        }
        Ok(out)
    }
}

/// Calibrated scores `s_ik` for every test row and training class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    n_test: usize,
    calibration_sizes: Vec<usize>,
    /// `[i * K + k]`: number of successful comparisons.
    successes: Vec<u32>,
}

impl ScoreMatrix {
    pub fn from_successes(n_test: usize, calibration_sizes: Vec<usize>, successes: Vec<u32>) -> Result<Self> {
        let k = calibration_sizes.len();
        if successes.len() != n_test * k {
            return Err(Error::LengthMismatch("success table size".into()));
        }
        for (idx, &s) in successes.iter().enumerate() {
            if s as usize > calibration_sizes[idx % k] {
                return Err(Error::InvalidInput("more successes than calibration rows".into()));
            }
        }
        Ok(Self {
            n_test,
            calibration_sizes,
            successes,
        })
    }

    pub fn n_test(&self) -> usize {
        self.n_test
    }

    pub fn n_classes(&self) -> usize {
        self.calibration_sizes.len()
    }

    pub fn calibration_sizes(&self) -> &[usize] {
        &self.calibration_sizes
    }

    pub fn successes(&self, i: usize, k: usize) -> u32 {
        self.successes[i * self.n_classes() + k]
    }

    /// `(1 + successes) / (n_k + 1)`.
    pub fn score(&self, i: usize, k: usize) -> f64 {
        (1.0 + f64::from(self.successes(i, k))) / (self.calibration_sizes[k] as f64 + 1.0)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n_classes()).map(|k| self.score(i, k)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_test).map(|i| self.row(i)).collect()
    }
}

/// Score matrix from one ensemble per class, ordered by class index.
pub fn calibrated_scores(ensembles: &[ClassEnsemble]) -> Result<ScoreMatrix> {
    let first = ensembles
        .first()
        .ok_or_else(|| Error::InvalidInput("no class ensembles".into()))?;
    let m = first.n_test;
    for (k, e) in ensembles.iter().enumerate() {
        if e.class != k || e.n_test != m {
            return Err(Error::InvalidInput(
                "ensembles must cover classes 0..K on one test cohort".into(),
            ));
        }
    }
    let k_count = ensembles.len();
    let successes: Vec<u32> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| ensembles.iter().map(move |e| e.successes(i)))
        .collect();
    debug_assert_eq!(successes.len(), m * k_count);
    ScoreMatrix::from_successes(m, ensembles.iter().map(|e| e.n_train).collect(), successes)
}

/// `{k : s_ik >= alpha}` for every test row.
pub fn prediction_sets(scores: &ScoreMatrix, alpha: f64, class_names: &[String]) -> Result<PredictionSets> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")));
    }
    if class_names.len() != scores.n_classes() {
        return Err(Error::LengthMismatch("class names vs score columns".into()));
    }
    let sets = (0..scores.n_test())
        .map(|i| {
            (0..scores.n_classes())
                .filter(|&k| scores.score(i, k) >= alpha)
                .collect()
        })
        .collect();
    PredictionSets::new(class_names.to_vec(), sets)?.with_scores(scores.rows())
}

#[derive(Debug, Clone)]
pub struct CsForestOutput {
    pub scores: ScoreMatrix,
    pub sets: PredictionSets,
    pub tree_counts: Vec<TreeCount>,
}

#[derive(Debug, Clone)]
pub struct FittedCsForest {
    pub ensembles: Vec<ClassEnsemble>,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct CsForest {
    params: CsForestParams,
}

impl CsForest {
    pub fn new(params: CsForestParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &CsForestParams {
        &self.params
    }

    /// One ensemble per training class. `train` must be fully labelled.
    pub fn fit(&self, train: &Dataset, test: &Features) -> Result<FittedCsForest> {
        self.params.validate()?;
        let labels = train.required_labels()?;
        if test.n_features() != train.n_features() {
            return Err(Error::DimensionMismatch {
                expected: train.n_features(),
                found: test.n_features(),
            });
        }
        let mut ensembles = Vec::with_capacity(train.n_classes());
        for k in 0..train.n_classes() {
            let (own, other): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i] == k);
            if own.is_empty() {
                return Err(Error::EmptyFold {
                    class: train.class_names()[k].clone(),
                    fold: "training data",
                });
            }
            let x = train.features();
            ensembles.push(build_class_ensemble(
                &x.select(&own),
                &x.select(&other),
                test,
                k,
                &self.params,
            )?);
        }
        Ok(FittedCsForest {
            ensembles,
            class_names: train.class_names().to_vec(),
        })
    }

    pub fn fit_predict(&self, train: &Dataset, test: &Features) -> Result<CsForestOutput> {
        let fitted = self.fit(train, test)?;
        let scores = calibrated_scores(&fitted.ensembles)?;
        let sets = prediction_sets(&scores, self.params.alpha, &fitted.class_names)?;
        Ok(CsForestOutput {
            scores,
            sets,
            tree_counts: fitted.ensembles.iter().map(|e| e.tree_count).collect(),
        })
    }
}

/// Inputs for the symmetric re-scoring of one class with one held test
/// sample treated as the `(n+1)`-th class member.
#[derive(Debug, Clone)]
pub struct AuditInput<'a> {
    pub train_k: &'a Features,
    pub held: &'a [f64],
    pub test_rest: &'a Features,
    pub train_other: &'a Features,
    pub b_tilde: usize,
    pub gamma: f64,
    pub tree_params: TreeParams,
    pub seed: u64,
}

/// `A_lj = 1{μ^{l,j}(X_l) >= μ^{j,l}(X_j)}` over the `n+1` pooled samples;
/// the held sample has index `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonMatrix {
    size: usize,
    entries: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub n: usize,
    pub alpha: f64,
    pub diagonal_ok: bool,
    pub strange_set_size: usize,
    /// `2α(n+1)`.
    pub bound: f64,
    pub bound_holds: bool,
    /// The held sample's row sum falls in the strange set, i.e. the class
    /// would be excluded from its prediction set.
    pub held_in_strange_set: bool,
}

impl ComparisonMatrix {
    pub fn from_entries(size: usize, entries: Vec<bool>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::LengthMismatch("comparison matrix entries".into()));
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, l: usize, j: usize) -> bool {
        self.entries[l * self.size + j]
    }

    pub fn diagonal_ok(&self) -> bool {
        (0..self.size).all(|l| self.get(l, l))
    }

    pub fn row_sum(&self, l: usize) -> usize {
        (0..self.size).filter(|&j| self.get(l, j)).count()
    }

    /// `{j : A_j• <= (n+1)α - 1}`.
    pub fn strange_set(&self, alpha: f64) -> Vec<usize> {
        let threshold = self.size as f64 * alpha - 1.0;
        (0..self.size)
            .filter(|&j| self.row_sum(j) as f64 <= threshold)
            .collect()
    }

    pub fn audit(&self, alpha: f64) -> AuditRecord {
        let strange = self.strange_set(alpha);
        let bound = 2.0 * alpha * self.size as f64;
        AuditRecord {
            n: self.size - 1,
            alpha,
            diagonal_ok: self.diagonal_ok(),
            strange_set_size: strange.len(),
            bound,
            bound_holds: strange.len() as f64 <= bound,
            held_in_strange_set: strange.contains(&(self.size - 1)),
        }
    }
}

/// Build the comparison matrix: each of `b_tilde` trees draws `n` of the
/// `n+1` pooled samples with replacement as its class rows, plus the usual
/// test and other-class bootstraps; pair means use trees excluding both.
pub fn comparison_matrix(input: &AuditInput<'_>) -> Result<ComparisonMatrix> {
    let n = input.train_k.n_samples();
    if n == 0 || input.b_tilde == 0 {
        return Err(Error::InvalidInput(
            "audit needs class rows and at least one tree".into(),
        ));
    }
    let mut pooled = input.train_k.clone();
    pooled.push_row(input.held)?;
    let size = n + 1;
    let m_rest = input.test_rest.n_samples();
    let n_other = input.train_other.n_samples();
    let other_size = if input.gamma == 0.0 || n_other == 0 {
        0
    } else {
        (((m_rest + 1) as f64 * input.gamma).ceil() as usize).min(n_other)
    };
    let mut parts = vec![&pooled];
    if m_rest > 0 {
        parts.push(input.test_rest);
    }
    if n_other > 0 {
        parts.push(input.train_other);
    }
    let stacked = Features::concat(&parts)?;

    let per_tree: Vec<(BitSet, Vec<f64>)> = (0..input.b_tilde)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(input.seed, "audit/tree", b as u64);
            let boot = bootstrap_sized(size, n, &mut r);
            let mut samples = boot.draws.clone();
            let mut labels = vec![LABEL_CLASS; n];
            if m_rest > 0 {
                let te = bootstrap_indices(m_rest, &mut r);
                samples.extend(te.draws.iter().map(|&j| size + j));
                labels.extend(std::iter::repeat_n(LABEL_TEST, m_rest));
            }
            if other_size > 0 {
                let o = bootstrap_sized(n_other, other_size, &mut r);
                samples.extend(o.draws.iter().map(|&j| size + m_rest + j));
                labels.extend(std::iter::repeat_n(LABEL_OTHER, other_size));
            }
            let tree = fit_tree(&stacked, &samples, &labels, ALPHABET, &input.tree_params, &mut r)?;
            let fr = (0..size)
                .map(|l| tree.leaf_fractions(pooled.row(l))[LABEL_CLASS])
                .collect();
            Ok((boot.in_bag, fr))
        })
        .collect::<Result<_>>()?;

    let mut entries = vec![true; size * size];
    for l in 0..size {
        for j in 0..size {
            let (mut s_l, mut s_j, mut c) = (0.0, 0.0, 0usize);
            for (in_bag, fr) in &per_tree {
                if !in_bag.contains(l) && !in_bag.contains(j) {
                    s_l += fr[l];
                    s_j += fr[j];
                    c += 1;
                }
            }
            entries[l * size + j] = c == 0 || s_l / c as f64 >= s_j / c as f64;
        }
    }
    ComparisonMatrix::from_entries(size, entries)
}

pub fn audit_strange_set(input: &AuditInput<'_>, alpha: f64) -> Result<AuditRecord> {
    Ok(comparison_matrix(input)?.audit(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_example1;

    fn small_params(b_tilde: usize, gamma: f64) -> CsForestParams {
        CsForestParams {
            b_tilde,
            gamma,
            seed: 5,
            ..CsForestParams::default()
        }
    }

    #[test]
    fn keep_probability_values() {
        assert_eq!(tree_keep_probability(1), 0.5);
        let p = tree_keep_probability(1000);
        assert!((p - (-1.0f64).exp()).abs() < 0.001);
        assert!((p - 0.368_063_304_288_79).abs() < 1e-12);
    }

    #[test]
    fn tree_count_mean() {
        let mut r = rng::from_seed(2);
        let draws: Vec<usize> = (0..200)
            .map(|_| sample_tree_count(3000, 500, &mut r).unwrap().count)
            .collect();
        let mean = draws.iter().sum::<usize>() as f64 / 200.0;
        let expected = 3000.0 * tree_keep_probability(500);
        assert!((expected - 1104.741_043_057_876).abs() < 1e-9, "{expected}");
        assert!((mean - expected).abs() < 30.0, "{mean}");
    }

    #[test]
    fn tree_count_never_zero() {
        let mut r = rng::from_seed(0);
        for _ in 0..200 {
            assert!(sample_tree_count(1, 1, &mut r).unwrap().count == 1);
        }
    }

    #[test]
    fn gamma_zero_has_no_other_rows() {
        let (train, test) = generate_example1(20, 5, 1).unwrap();
        let x = train.features();
        let own = train.indices_of_class(0);
        let other = train.indices_of_class(1);
        let e = build_class_ensemble(
            &x.select(&own),
            &x.select(&other),
            test.features(),
            0,
            &small_params(30, 0.0),
        )
        .unwrap();
        assert_eq!(e.other_size(), 0);
        let probe = test.features().row(0);
        for t in e.trees() {
            assert_eq!(t.leaf_fractions(probe)[LABEL_OTHER], 0.0);
        }
    }

    #[test]
    fn gamma_one_other_size() {
        let (train, test) = generate_example1(200, 200, 1).unwrap();
        // m = 200 test rows here.
        let test = test.select(&(0..200).collect::<Vec<_>>()).unwrap();
        let x = train.features();
        let e = build_class_ensemble(
            &x.select(&train.indices_of_class(0)),
            &x.select(&train.indices_of_class(1)),
            test.features(),
            0,
            &small_params(3, 1.0),
        )
        .unwrap();
        assert_eq!(e.other_size(), 200);
    }

    #[test]
    fn in_bag_inclusion_rate() {
        let (train, test) = generate_example1(10, 3, 4).unwrap();
        let x = train.features();
        let e = build_class_ensemble(
            &x.select(&train.indices_of_class(0)),
            &x.select(&train.indices_of_class(1)),
            test.features(),
            0,
            &small_params(3000, 1.0),
        )
        .unwrap();
        let b = e.n_trees();
        let rate = (0..b).map(|t| e.train_in_bag(t).count_ones()).sum::<usize>() as f64 / (b * 10) as f64;
        let expected = 1.0 - 0.9f64.powi(10);
        assert!((rate - expected).abs() < 0.02, "{rate} vs {expected}");
    }

    #[test]
    fn score_arithmetic_and_sets() {
        let names: Vec<String> = vec!["1".into(), "2".into()];
        // n_k = 3; 2 successes -> 3/4; 0 successes -> 1/4.
        let s = ScoreMatrix::from_successes(2, vec![3, 3], vec![2, 0, 3, 3]).unwrap();
        assert_eq!(s.score(0, 0), 0.75);
        assert_eq!(s.score(0, 1), 0.25);
        assert_eq!(s.score(1, 0), 1.0);
        let sets = prediction_sets(&s, 0.3, &names).unwrap();
        assert_eq!(sets.get(0), &[0]);
        assert_eq!(sets.get(1), &[0, 1]);
        assert!(prediction_sets(&s, 0.0, &names).is_err());
    }

    #[test]
    fn threshold_boundaries() {
        let names: Vec<String> = vec!["1".into(), "2".into()];
        // n = 99: successes 5 -> 0.06, 3 -> 0.04.
        let s = ScoreMatrix::from_successes(1, vec![99, 99], vec![5, 3]).unwrap();
        assert_eq!(prediction_sets(&s, 0.05, &names).unwrap().get(0), &[0]);
        // n = 19: 0 successes -> exactly 1/20 = alpha, included.
        let s = ScoreMatrix::from_successes(1, vec![19, 19], vec![0, 0]).unwrap();
        assert_eq!(s.score(0, 0), 0.05);
        assert_eq!(prediction_sets(&s, 0.05, &names).unwrap().get(0), &[0, 1]);
        let sets = prediction_sets(&s, 0.06, &names).unwrap();
        assert!(sets.is_outlier(0));
    }

    #[test]
    fn pair_fraction_degenerate_and_mean() {
        let (train, test) = generate_example1(4, 2, 9).unwrap();
        let x = train.features();
        let e = build_class_ensemble(
            &x.select(&train.indices_of_class(0)),
            &x.select(&train.indices_of_class(1)),
            test.features(),
            0,
            &small_params(40, 1.0),
        )
        .unwrap();
        let probe = test.features().row(0);
        for i in 0..e.n_test() {
            for j in 0..e.n_train() {
                let trees: Vec<usize> = (0..e.n_trees())
                    .filter(|&b| !e.test_in_bag(b).contains(i) && !e.train_in_bag(b).contains(j))
                    .collect();
                let got = e.pair_ensemble_fraction(i, j, probe).unwrap();
                if trees.is_empty() {
                    assert!(got.is_none());
                } else {
                    let mean = trees
                        .iter()
                        .map(|&b| e.trees()[b].leaf_fractions(probe)[0])
                        .sum::<f64>()
                        / trees.len() as f64;
                    assert_eq!(got, Some(mean));
                }
            }
        }
    }

    #[test]
    fn permutation_symmetry() {
        let (train, test) = generate_example1(15, 6, 21).unwrap();
        let x = train.features();
        let e = build_class_ensemble(
            &x.select(&train.indices_of_class(1)),
            &x.select(&train.indices_of_class(0)),
            test.features(),
            0,
            &small_params(60, 1.0),
        )
        .unwrap();
        let perm: Vec<usize> = (0..15).rev().collect();
        let p = e.with_train_permuted(&perm).unwrap();
        let a = calibrated_scores(std::slice::from_ref(&e)).unwrap();
        let b = calibrated_scores(std::slice::from_ref(&p)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strange_set_threshold() {
        // n = 9, alpha = 0.05: threshold -0.5, nothing qualifies.
        let m = ComparisonMatrix::from_entries(10, vec![true; 100]).unwrap();
        let rec = m.audit(0.05);
        assert_eq!(rec.strange_set_size, 0);
        assert!(rec.diagonal_ok && rec.bound_holds);
        // n = 3, alpha = 0.5: threshold 1, rows with a single 1 qualify.
        let mut entries = vec![false; 16];
        for l in 0..4 {
            for j in 0..=l {
                entries[l * 4 + j] = true;
            }
        }
        // Lower-triangular: row sums 1, 2, 3, 4.
        let m = ComparisonMatrix::from_entries(4, entries).unwrap();
        let rec = m.audit(0.5);
        assert_eq!(rec.strange_set_size, 1);
        assert_eq!(rec.bound, 4.0);
        assert!(rec.bound_holds && !rec.held_in_strange_set);
    }
}
