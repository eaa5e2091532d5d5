//! Data model, synthetic Gaussian generators and CSV ingestion.
//!
//! Class labels are contiguous indices into `class_names`, assigned in order
//! of first appearance. Test sets may carry labels for evaluation; the
//! methods in this crate only ever receive the test [`Features`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Row-major `n × p` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    data: Vec<f64>,
    n_features: usize,
}

impl Features {
    pub fn new(data: Vec<f64>, n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidInput("feature dimension must be at least 1".into()));
        }
        if !data.len().is_multiple_of(n_features) {
            return Err(Error::InvalidInput(format!(
                "{} values do not form rows of length {n_features}",
                data.len()
            )));
        }
        Ok(Self { data, n_features })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map(|r| r.as_ref().len()).ok_or(Error::NoData)?;
        let mut data = Vec::with_capacity(p * rows.len());
        for r in rows {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, p)
    }

    /// An empty matrix with `n_features` columns.
    pub fn empty(n_features: usize) -> Self {
        Self {
            data: Vec::new(),
            n_features,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.data.len() / self.n_features
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n_features)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data,
            n_features: self.n_features,
        }
    }

    /// Stack matrices with equal width.
    pub fn concat(parts: &[&Features]) -> Result<Self> {
        let p = parts.first().map(|f| f.n_features).ok_or(Error::NoData)?;
        let mut data = Vec::new();
        for f in parts {
            if f.n_features != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: f.n_features,
                });
            }
            data.extend_from_slice(&f.data);
        }
        Ok(Self { data, n_features: p })
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    /// Apply `f` to every entry of column `j`.
    pub fn map_column(&mut self, j: usize, f: impl Fn(f64) -> f64) {
        let p = self.n_features;
        for v in self.data.iter_mut().skip(j).step_by(p) {
            *v = f(*v);
        }
    }
}

/// Features plus optional per-row class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Features,
    labels: Vec<Option<usize>>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Features, labels: Vec<Option<usize>>, class_names: Vec<String>) -> Result<Self> {
        if features.n_samples() == 0 {
            return Err(Error::NoData);
        }
        if labels.len() != features.n_samples() {
            return Err(Error::LengthMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                features.n_samples()
            )));
        }
        if let Some(bad) = labels.iter().flatten().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidInput(format!(
                "label index {bad} outside {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    pub fn labeled(features: Features, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        Self::new(features, labels.into_iter().map(Some).collect(), class_names)
    }

    pub fn unlabeled(features: Features) -> Result<Self> {
        let n = features.n_samples();
        Self::new(features, vec![None; n], Vec::new())
    }

    pub fn n_samples(&self) -> usize {
        self.features.n_samples()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_features()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Labels as a dense vector; errors if any row is unlabeled.
    pub fn required_labels(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| Error::InvalidInput(format!("row {i} has no label"))))
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in self.labels.iter().flatten() {
            counts[l] += 1;
        }
        counts
    }

    pub fn indices_of_class(&self, k: usize) -> Vec<usize> {
        (0..self.n_samples()).filter(|&i| self.labels[i] == Some(k)).collect()
    }

    /// Rows at `indices`, keeping the class alphabet.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.features.select(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.class_names.clone(),
        )
    }

    pub fn without_labels(&self) -> Self {
        Self {
            features: self.features.clone(),
            labels: vec![None; self.n_samples()],
            class_names: Vec::new(),
        }
    }
}

/// Independent Gaussian per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianClassSpec {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl GaussianClassSpec {
    pub fn new(mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        let spec = Self { mean, sd };
        spec.validate()?;
        Ok(spec)
    }

    /// Standard normal in `p` dimensions.
    pub fn standard(p: usize) -> Self {
        Self {
            mean: vec![0.0; p],
            sd: vec![1.0; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.is_empty() || self.mean.len() != self.sd.len() {
            return Err(Error::InvalidInput(format!(
                "gaussian spec with {} means and {} standard deviations",
                self.mean.len(),
                self.sd.len()
            )));
        }
        if self.sd.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput("standard deviations must be positive".into()));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.sd)
            .map(|(&m, &s)| m + s * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
        self.mean
            .iter()
            .zip(&self.sd)
            .zip(x)
            .map(|((&m, &s), &v)| {
                let z = (v - m) / s;
                -0.5 * z * z - s.ln() - LN_SQRT_2PI
            })
            .sum()
    }
}

/// A named mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComponent {
    pub name: String,
    pub spec: GaussianClassSpec,
    pub weight: f64,
}

/// Target mixture `Σ π̃_k f_k + ε e` from which rows are drawn independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftScenario {
    pub classes: Vec<ScenarioComponent>,
    #[serde(default)]
    pub outlier: Option<ScenarioComponent>,
    pub n: usize,
    pub seed: u64,
}

impl ShiftScenario {
    pub fn validate(&self) -> Result<()> {
        let components: Vec<&ScenarioComponent> = self.classes.iter().chain(self.outlier.as_ref()).collect();
        if components.is_empty() {
            return Err(Error::InvalidInput("scenario has no components".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("scenario sample count must be at least 1".into()));
        }
        let p = components[0].spec.dim();
        for c in &components {
            c.spec.validate()?;
            if c.spec.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: c.spec.dim(),
                });
            }
            if !(c.weight >= 0.0) {
                return Err(Error::InvalidInput(format!("component {} has negative weight", c.name)));
            }
        }
        let sum: f64 = components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::WeightSum { sum });
        }
        Ok(())
    }
}

/// Draw `scenario.n` rows from the scenario mixture. The outlier component,
/// when present, takes the last label index.
pub fn sample_shift_scenario(scenario: &ShiftScenario) -> Result<Dataset> {
    scenario.validate()?;
    let components: Vec<&ScenarioComponent> = scenario.classes.iter().chain(scenario.outlier.as_ref()).collect();
    let p = components[0].spec.dim();
    let mut rng = rng::stream(scenario.seed, "scenario", 0);
    let mut data = Vec::with_capacity(scenario.n * p);
    let mut labels = Vec::with_capacity(scenario.n);
    for _ in 0..scenario.n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        // Falls back to the last positive-weight component when rounding leaves u above the total.
        let mut chosen = components.iter().rposition(|c| c.weight > 0.0).unwrap_or(0);
        for (idx, c) in components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                chosen = idx;
                break;
            }
        }
        data.extend(components[chosen].spec.sample(&mut rng));
        labels.push(chosen);
    }
    let names = components.iter().map(|c| c.name.clone()).collect();
    Dataset::labeled(Features::new(data, p)?, labels, names)
}

/// Draw `counts[c]` rows from each class spec, in class order.
pub fn sample_classes<R: Rng + ?Sized>(
    names: &[String],
    specs: &[GaussianClassSpec],
    counts: &[usize],
    rng: &mut R,
) -> Result<Dataset> {
    if names.len() != specs.len() || specs.len() != counts.len() || specs.is_empty() {
        return Err(Error::InvalidInput("names, specs and counts must align".into()));
    }
    let p = specs[0].dim();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (k, (spec, &count)) in specs.iter().zip(counts).enumerate() {
        spec.validate()?;
        if spec.dim() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: spec.dim(),
            });
        }
        for _ in 0..count {
            data.extend(spec.sample(rng));
            labels.push(k);
        }
    }
    Dataset::labeled(Features::new(data, p)?, labels, names.to_vec())
}

/// Component densities of the introductory two-class example with one novel
/// component, in `p ≥ 2` dimensions: classes `1`, `2` and outlier `R`.
pub fn example1_specs(p: usize) -> Result<[GaussianClassSpec; 3]> {
    if p < 2 {
        return Err(Error::InvalidInput("example needs at least two dimensions".into()));
    }
    let with = |m1: f64, s1: f64, m2: f64, s2: f64| {
        let mut spec = GaussianClassSpec::standard(p);
        spec.mean[0] = m1;
        spec.sd[0] = s1;
        spec.mean[1] = m2;
        spec.sd[1] = s2;
        spec
    };
    Ok([
        with(0.0, 1.0, 0.0, 1.0),
        with(3.0, 0.5, 0.0, 1.0),
        with(0.0, 1.0, 3.0, 1.0),
    ])
}

pub const EXAMPLE1_DIM: usize = 10;

/// Training set with classes `1`, `2` and a test set with classes `1`, `2`, `R`.
pub fn generate_example1(n_train_per_class: usize, n_test_per_class: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    generate_example1_dim(EXAMPLE1_DIM, n_train_per_class, n_test_per_class, seed)
}

pub fn generate_example1_dim(
    p: usize,
    n_train_per_class: usize,
    n_test_per_class: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if n_train_per_class == 0 || n_test_per_class == 0 {
        return Err(Error::InvalidInput("per-class counts must be at least 1".into()));
    }
    let specs = example1_specs(p)?;
    let names: Vec<String> = ["1", "2", "R"].iter().map(|s| s.to_string()).collect();
    let train = sample_classes(
        &names[..2],
        &specs[..2],
        &[n_train_per_class; 2],
        &mut rng::stream(seed, "example1/train", 0),
    )?;
    let test = sample_classes(
        &names,
        &specs,
        &[n_test_per_class; 3],
        &mut rng::stream(seed, "example1/test", 0),
    )?;
    Ok((train, test))
}

/// A labelled family of Gaussian classes to draw train/test cohorts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDesign {
    pub names: Vec<String>,
    pub specs: Vec<GaussianClassSpec>,
}

impl ClassDesign {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Draw the requested per-class counts; classes with zero count are
    /// left out of the resulting alphabet.
    pub fn sample(&self, counts: &BTreeMap<usize, usize>, seed: u64, tag: &str) -> Result<Dataset> {
        let kept: Vec<(usize, usize)> = counts.iter().filter(|(_, &c)| c > 0).map(|(&k, &c)| (k, c)).collect();
        if let Some(&(k, _)) = kept.iter().find(|(k, _)| *k >= self.names.len()) {
            return Err(Error::InvalidInput(format!("unknown class index {k}")));
        }
        let names: Vec<String> = kept.iter().map(|&(k, _)| self.names[k].clone()).collect();
        let specs: Vec<GaussianClassSpec> = kept.iter().map(|&(k, _)| self.specs[k].clone()).collect();
        let n: Vec<usize> = kept.iter().map(|&(_, c)| c).collect();
        sample_classes(&names, &specs, &n, &mut rng::stream(seed, tag, 0))
    }
}

/// The introductory example lifted to `p ≥ 50` dimensions and laid out
/// like a ten-digit benchmark: six inlier classes `0`..`5` and four novel
/// classes `6`..`9`.
///
/// Coordinates `5c..5c+5` form block `c`. Each one-coordinate mean shift of
/// the introductory example becomes a block shift: class `c` raises its own
/// block to `block_shift`, class `1` with standard deviation 0.5. Classes
/// `3`, `4`, `5` copy classes `0`, `1`, `2` and add a weak shift
/// `pair_shift` on their own block, so each of these pairs overlaps.
pub fn example1_upscaled(p: usize) -> Result<ClassDesign> {
    example1_upscaled_with(p, UPSCALED_BLOCK_SHIFT, UPSCALED_PAIR_SHIFT)
}

pub const UPSCALED_BLOCK_SHIFT: f64 = 3.0;
pub const UPSCALED_PAIR_SHIFT: f64 = 1.0;
const UPSCALED_BLOCK: usize = 5;

pub fn example1_upscaled_with(p: usize, block_shift: f64, pair_shift: f64) -> Result<ClassDesign> {
    if p < 10 * UPSCALED_BLOCK {
        return Err(Error::InvalidInput(
            "upscaled example needs at least 50 dimensions".into(),
        ));
    }
    let block = |b: usize, m: f64, sd: f64| (0..UPSCALED_BLOCK).map(move |j| (b * UPSCALED_BLOCK + j, m, sd));
    let own = |c: usize| block(c, block_shift, if c == 1 { 0.5 } else { 1.0 });
    let specs = (0..10)
        .map(|c| {
            let shifts: Vec<(usize, f64, f64)> = match c {
                3..=5 => own(c - 3).chain(block(c, pair_shift, 1.0)).collect(),
                6..=9 => block(c, block_shift, 1.0).collect(),
                _ => own(c).collect(),
            };
            let mut spec = GaussianClassSpec::standard(p);
            for (j, m, sd) in shifts {
                spec.mean[j] = m;
                spec.sd[j] = sd;
            }
            spec
        })
        .collect();
    Ok(ClassDesign {
        names: (0..10).map(|d| d.to_string()).collect(),
        specs,
    })
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Read a comma-separated file. A first row with no numeric cell (or one
/// naming `label_column`) is treated as a header. Label values become class
/// indices by order of first appearance; an empty label cell leaves the row
/// unlabeled. Without a header, `label_column` may be a zero-based index.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::NoData),
    };
    let first_cells: Vec<String> = first.iter().map(str::to_string).collect();
    let names_label = label_column.is_some_and(|l| first_cells.iter().any(|c| c == l));
    let has_header = names_label || first_cells.iter().all(|c| parse_cell(c).is_none());
    let width = first_cells.len();

    let label_idx = match label_column {
        None => None,
        Some(name) => {
            let by_name = if has_header {
                first_cells.iter().position(|c| c == name)
            } else {
                None
            };
            let idx = by_name.or_else(|| name.parse::<usize>().ok().filter(|&i| i < width));
            Some(idx.ok_or_else(|| Error::Config(format!("unknown label column '{name}'")))?)
        }
    };
    if label_idx.is_some() && width < 2 {
        return Err(Error::Config("labelled file needs at least one feature column".into()));
    }
    let p = width - usize::from(label_idx.is_some());

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut push_record = |cells: &csv::StringRecord, line: usize| -> Result<()> {
        if cells.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {width} columns, found {}", cells.len()),
            });
        }
        let mut label = None;
        for (j, cell) in cells.iter().enumerate() {
            if Some(j) == label_idx {
                if !cell.is_empty() {
                    let k = match class_names.iter().position(|c| c == cell) {
                        Some(k) => k,
                        None => {
                            class_names.push(cell.to_string());
                            class_names.len() - 1
                        }
                    };
                    label = Some(k);
                }
            } else {
                let v = parse_cell(cell).ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("column {}: '{cell}' is not a number", j + 1),
                })?;
                data.push(v);
            }
        }
        labels.push(label);
        Ok(())
    };
    if !has_header {
        push_record(&first, 1)?;
    }
    for (offset, rec) in records.enumerate() {
        push_record(&rec?, offset + 2)?;
    }
    if labels.is_empty() {
        return Err(Error::NoData);
    }
    Dataset::new(Features::new(data, p)?, labels, class_names)
}

/// Write a dataset with a header `x1,…,xp[,label]`. The label column is
/// present whenever the dataset has a class alphabet.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let p = data.n_features();
    let with_labels = data.n_classes() > 0;
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    if with_labels {
        header.push("label".into());
    }
    writeln!(w, "{}", header.join(","))?;
    for (i, row) in data.features().rows().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if with_labels {
            cells.push(data.label(i).map(|k| data.class_names()[k].clone()).unwrap_or_default());
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Uniform without-replacement sample of `counts[k]` rows of each class `k`.
/// Classes not in the map (or with count 0) are dropped and the remaining
/// classes re-indexed in their original order.
pub fn subsample_per_class(data: &Dataset, counts: &BTreeMap<usize, usize>, seed: u64) -> Result<Dataset> {
    let (picked, _) = draw_per_class(data, counts, &BTreeMap::new(), seed)?;
    Ok(picked)
}

/// Disjoint per-class train and test draws from one labelled pool.
pub fn split_per_class(
    data: &Dataset,
    train_counts: &BTreeMap<usize, usize>,
    test_counts: &BTreeMap<usize, usize>,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    draw_per_class(data, train_counts, test_counts, seed)
}

fn draw_per_class(
    data: &Dataset,
    first: &BTreeMap<usize, usize>,
    second: &BTreeMap<usize, usize>,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    for &k in first.keys().chain(second.keys()) {
        if k >= data.n_classes() {
            return Err(Error::InvalidInput(format!("unknown class index {k}")));
        }
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for k in 0..data.n_classes() {
        let na = first.get(&k).copied().unwrap_or(0);
        let nb = second.get(&k).copied().unwrap_or(0);
        if na + nb == 0 {
            continue;
        }
        let pool = data.indices_of_class(k);
        if na + nb > pool.len() {
            return Err(Error::InsufficientSamples {
                class: data.class_names()[k].clone(),
                requested: na + nb,
                available: pool.len(),
            });
        }
        let mut rng = rng::stream(seed, "subsample", k as u64);
        let chosen = sample_indices(&mut rng, pool.len(), na + nb).into_vec();
        let mut first_part: Vec<usize> = chosen[..na].iter().map(|&j| pool[j]).collect();
        let mut second_part: Vec<usize> = chosen[na..].iter().map(|&j| pool[j]).collect();
        first_part.sort_unstable();
        second_part.sort_unstable();
        a.extend(first_part.into_iter().map(|i| (k, i)));
        b.extend(second_part.into_iter().map(|i| (k, i)));
    }
    Ok((
        relabel(data, &a)?,
        relabel(data, &b).unwrap_or_else(|_| empty_like(data)),
    ))
}

fn relabel(data: &Dataset, picks: &[(usize, usize)]) -> Result<Dataset> {
    let mut kept: Vec<usize> = picks.iter().map(|&(k, _)| k).collect();
    kept.dedup();
    let names = kept.iter().map(|&k| data.class_names()[k].clone()).collect();
    let rows: Vec<usize> = picks.iter().map(|&(_, i)| i).collect();
    let labels = picks
        .iter()
        .map(|&(k, _)| Some(kept.iter().position(|&c| c == k).expect("kept class")))
        .collect();
    Dataset::new(data.features().select(&rows), labels, names)
}

fn empty_like(data: &Dataset) -> Dataset {
    Dataset {
        features: Features::empty(data.n_features()),
        labels: Vec::new(),
        class_names: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn example1_shapes() {
        let (train, test) = generate_example1(200, 200, 3).unwrap();
        assert_eq!((train.n_samples(), train.n_features()), (400, 10));
        assert_eq!(test.n_samples(), 600);
        assert_eq!(train.class_names(), names(&["1", "2"]).as_slice());
        assert_eq!(test.class_names(), names(&["1", "2", "R"]).as_slice());
        assert_eq!(test.class_counts(), vec![200, 200, 200]);

        let (train, test) = generate_example1(1, 1, 3).unwrap();
        assert_eq!((train.n_samples(), test.n_samples()), (2, 3));
        assert!(generate_example1(0, 1, 3).is_err());
    }

    #[test]
    fn example1_class2_mean() {
        let (train, _) = generate_example1(200, 200, 11).unwrap();
        let idx = train.indices_of_class(1);
        let mean: f64 = idx.iter().map(|&i| train.features().row(i)[0]).sum::<f64>() / idx.len() as f64;
        assert!((mean - 3.0).abs() < 0.15, "mean {mean}");
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            generate_example1(20, 20, 5).unwrap(),
            generate_example1(20, 20, 5).unwrap()
        );
        assert_ne!(
            generate_example1(20, 20, 5).unwrap().0,
            generate_example1(20, 20, 6).unwrap().0
        );
    }

    fn scenario(weights: &[f64], eps: Option<f64>, n: usize) -> ShiftScenario {
        let comp = |name: &str, w: f64, m: f64| ScenarioComponent {
            name: name.into(),
            spec: GaussianClassSpec::new(vec![m, 0.0], vec![1.0, 1.0]).unwrap(),
            weight: w,
        };
        ShiftScenario {
            classes: weights
                .iter()
                .enumerate()
                .map(|(k, &w)| comp(&format!("c{k}"), w, k as f64))
                .collect(),
            outlier: eps.map(|e| comp("R", e, 10.0)),
            n,
            seed: 17,
        }
    }

    #[test]
    fn shift_scenario_degenerate_mixtures() {
        let d = sample_shift_scenario(&scenario(&[1.0], Some(0.0), 50)).unwrap();
        assert!(d.labels().iter().all(|&l| l == Some(0)));
        let d = sample_shift_scenario(&scenario(&[0.0], Some(1.0), 50)).unwrap();
        assert!(d.labels().iter().all(|&l| l == Some(1)));
        assert_eq!(d.class_names()[1], "R");
    }

    #[test]
    fn shift_scenario_frequencies() {
        let d = sample_shift_scenario(&scenario(&[0.5, 0.5], Some(0.0), 10_000)).unwrap();
        let frac = d.class_counts()[0] as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn shift_scenario_rejects_bad_weights() {
        assert!(matches!(
            sample_shift_scenario(&scenario(&[0.5, 0.4], None, 10)),
            Err(Error::WeightSum { .. })
        ));
    }

    #[test]
    fn upscaled_design_is_valid() {
        let design = example1_upscaled(50).unwrap();
        assert_eq!(design.names.len(), 10);
        for s in &design.specs {
            s.validate().unwrap();
            assert_eq!(s.dim(), 50);
        }
        let counts: BTreeMap<usize, usize> = (0..6).map(|k| (k, 3)).collect();
        let d = design.sample(&counts, 1, "t").unwrap();
        assert_eq!(d.n_samples(), 18);
        assert_eq!(d.n_classes(), 6);
    }

    #[test]
    fn subsample_drops_and_permutes() {
        let (train, _) = generate_example1(10, 1, 2).unwrap();
        let d = subsample_per_class(&train, &BTreeMap::from([(0, 0), (1, 4)]), 9).unwrap();
        assert_eq!(d.class_names(), names(&["2"]).as_slice());
        assert_eq!(d.n_samples(), 4);

        let full = subsample_per_class(&train, &BTreeMap::from([(0, 10), (1, 10)]), 9).unwrap();
        let mut a: Vec<Vec<u64>> = full
            .features()
            .rows()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        let mut b: Vec<Vec<u64>> = train
            .features()
            .rows()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn subsample_insufficient_names_class() {
        let (train, _) = generate_example1(5, 1, 2).unwrap();
        match subsample_per_class(&train, &BTreeMap::from([(1, 6)]), 1) {
            Err(Error::InsufficientSamples { class, .. }) => assert_eq!(class, "2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_per_class_is_disjoint() {
        let (train, _) = generate_example1(20, 1, 2).unwrap();
        let (a, b) = split_per_class(
            &train,
            &BTreeMap::from([(0, 10), (1, 5)]),
            &BTreeMap::from([(0, 10), (1, 15)]),
            4,
        )
        .unwrap();
        assert_eq!((a.n_samples(), b.n_samples()), (15, 25));
        for ra in a.features().rows() {
            assert!(b.features().rows().all(|rb| rb != ra));
        }
    }
}
