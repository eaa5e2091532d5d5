//! CART classification trees with random feature subsets.
//!
//! Splits minimize weighted Gini impurity over midpoints between consecutive
//! distinct sorted values. Among equal-impurity candidates the lowest feature
//! index wins, then the lowest threshold. Leaves store raw class fractions.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::dataset::Features;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCriterion {
    #[default]
    Gini,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// `None` means `⌈√p⌉`.
    pub features_per_split: Option<usize>,
    pub split_criterion: SplitCriterion,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
            split_criterion: SplitCriterion::Gini,
        }
    }
}

impl TreeParams {
    /// Resolved number of candidate features per split for dimension `p`.
    pub fn mtry(&self, p: usize) -> Result<usize> {
        let m = self
            .features_per_split
            .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize);
        if m == 0 || m > p {
            return Err(Error::InvalidInput(format!("features_per_split {m} outside [1, {p}]")));
        }
        Ok(m)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::InvalidInput("min_leaf must be at least 1".into()));
        }
        self.mtry(p).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Offset into `TreeModel::fractions`.
        offset: u32,
    },
}

/// A fitted tree over a label alphabet of `n_classes` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<Node>,
    fractions: Vec<f64>,
    n_classes: usize,
    n_features: usize,
}

/// Multiset of bootstrap draws plus its in-bag mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Bootstrap {
    pub draws: Vec<usize>,
    pub in_bag: BitSet,
}

impl Bootstrap {
    pub fn out_of_bag(&self) -> BitSet {
        self.in_bag.complement()
    }
}

/// `size` uniform draws with replacement from `0..n`.
pub fn bootstrap_sized<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Bootstrap {
    let mut in_bag = BitSet::new(n);
    let draws = (0..size)
        .map(|_| {
            let i = rng.random_range(0..n);
            in_bag.insert(i);
            i
        })
        .collect();
    Bootstrap { draws, in_bag }
}

/// `n` uniform draws with replacement from `0..n`.
pub fn bootstrap_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Bootstrap {
    bootstrap_sized(n, n, rng)
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

struct Grower<'a, R: Rng + ?Sized> {
    x: &'a Features,
    n_classes: usize,
    params: &'a TreeParams,
    mtry: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
    fractions: Vec<f64>,
    scratch: Vec<(f64, u32)>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

impl<R: Rng + ?Sized> Grower<'_, R> {
    fn counts(&self, items: &[(u32, u32)]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &(_, l) in items {
            counts[l as usize] += 1;
        }
        counts
    }

    fn leaf(&mut self, counts: &[usize], n: usize) -> u32 {
        let offset = self.fractions.len() as u32;
        self.fractions.extend(counts.iter().map(|&c| c as f64 / n as f64));
        self.nodes.push(Node::Leaf { offset });
        (self.nodes.len() - 1) as u32
    }

    fn best_split(&mut self, items: &[(u32, u32)], parent: &[usize]) -> Option<Candidate> {
        let p = self.x.n_features();
        let n = items.len();
        let min_leaf = self.params.min_leaf;
        let mut features = sample_indices(self.rng, p, self.mtry).into_vec();
        features.sort_unstable();

        let mut best: Option<Candidate> = None;
        let mut left = vec![0usize; self.n_classes];
        for &f in &features {
            self.scratch.clear();
            self.scratch
                .extend(items.iter().map(|&(r, l)| (self.x.row(r as usize)[f], l)));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            left.iter_mut().for_each(|c| *c = 0);
            for pos in 0..n - 1 {
                let (v, l) = self.scratch[pos];
                left[l as usize] += 1;
                let next = self.scratch[pos + 1].0;
                if next <= v {
                    continue;
                }
                let nl = pos + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let (mut sl, mut sr) = (0.0, 0.0);
                for c in 0..self.n_classes {
                    let cl = left[c] as f64;
                    let cr = (parent[c] - left[c]) as f64;
                    sl += cl * cl;
                    sr += cr * cr;
                }
                // Weighted Gini: 1 - (Σ cl²/nl + Σ cr²/nr) / n.
                let impurity = 1.0 - (sl / nl as f64 + sr / nr as f64) / n as f64;
                let better = match best {
                    None => true,
                    Some(b) => impurity < b.impurity - 1e-12,
                };
                if better {
                    let mut threshold = 0.5 * (v + next);
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, items: &mut [(u32, u32)], depth: usize) -> u32 {
        let n = items.len();
        let counts = self.counts(items);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || n < 2 * self.params.min_leaf {
            return self.leaf(&counts, n);
        }
        let parent_impurity = gini(&counts, n);
        let split = match self.best_split(items, &counts) {
            Some(c) if c.impurity < parent_impurity - 1e-12 => c,
            _ => return self.leaf(&counts, n),
        };
        let x = self.x;
        let mut mid = 0;
        for i in 0..n {
            if x.row(items[i].0 as usize)[split.feature] <= split.threshold {
                items.swap(i, mid);
                mid += 1;
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { offset: 0 });
        let (l_items, r_items) = items.split_at_mut(mid);
        let left = self.grow(l_items, depth + 1);
        let right = self.grow(r_items, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left,
            right,
        };
        id as u32
    }
}

/// Fit a tree on the multiset of rows `samples` of `x` with labels
/// `labels[j] ∈ 0..n_classes` for `samples[j]`.
pub fn fit_tree<R: Rng + ?Sized>(
    x: &Features,
    samples: &[usize],
    labels: &[usize],
    n_classes: usize,
    params: &TreeParams,
    rng: &mut R,
) -> Result<TreeModel> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("cannot fit a tree on zero rows".into()));
    }
    if samples.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} samples, {} labels",
            samples.len(),
            labels.len()
        )));
    }
    if n_classes < 2 {
        return Err(Error::InvalidInput("label alphabet needs at least two symbols".into()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidInput(format!(
            "label {l} outside alphabet of {n_classes}"
        )));
    }
    params.validate(x.n_features())?;
    let mut items: Vec<(u32, u32)> = samples
        .iter()
        .zip(labels)
        .map(|(&r, &l)| (r as u32, l as u32))
        .collect();
    let mut grower = Grower {
        x,
        n_classes,
        params,
        mtry: params.mtry(x.n_features())?,
        rng,
        nodes: Vec::new(),
        fractions: Vec::new(),
        scratch: Vec::with_capacity(items.len()),
    };
    grower.grow(&mut items, 0);
    Ok(TreeModel {
        nodes: grower.nodes,
        fractions: grower.fractions,
        n_classes,
        n_features: x.n_features(),
    })
}

impl TreeModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// `(feature, threshold)` of the root, if it is a split.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split { feature, threshold, .. } => Some((*feature as usize, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    /// Class fractions of the leaf `x` falls in. No dimension check.
    #[inline]
    pub fn leaf_fractions(&self, x: &[f64]) -> &[f64] {
        let mut id = 0usize;
        loop {
            match self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
                Node::Leaf { offset } => {
                    let o = offset as usize;
                    return &self.fractions[o..o + self.n_classes];
                }
            }
        }
    }

    /// Leaf fraction of `target` at `x`.
    pub fn predict_fraction(&self, x: &[f64], target: usize) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        if target >= self.n_classes {
            return Err(Error::InvalidInput(format!("class {target} outside alphabet")));
        }
        Ok(self.leaf_fractions(x)[target])
    }
}

pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoredTree {
    format_version: u32,
    tree: TreeModel,
}

/// Versioned JSON encoding of a fitted tree.
pub fn tree_to_json(tree: &TreeModel) -> Result<String> {
    Ok(serde_json::to_string(&StoredTree {
        format_version: TREE_FORMAT_VERSION,
        tree: tree.clone(),
    })?)
}

pub fn tree_from_json(s: &str) -> Result<TreeModel> {
    let stored: StoredTree = serde_json::from_str(s)?;
    if stored.format_version != TREE_FORMAT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported tree format version {}",
            stored.format_version
        )));
    }
    Ok(stored.tree)
}
