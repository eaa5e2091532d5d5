//! Density-set classifier: per-class Gaussian product-kernel densities,
//! calibrated per class. Comparisons use log densities.

use serde::{Deserialize, Serialize};

use crate::baselines::split::{ConformalCalibrator, SplitPlan};
use crate::dataset::{Dataset, Features};
use crate::error::{Error, Result};
use crate::sets::PredictionSets;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    /// `σ_j (4 / ((p + 2) n))^{1/(p+4)}` per dimension.
    #[default]
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct GaussianKde {
    points: Features,
    bandwidth: Vec<f64>,
    log_norm: f64,
}

/// Per-dimension Silverman bandwidths with floor `1e-6·(range + 1e-12)`.
pub fn silverman_bandwidth(points: &Features) -> Vec<f64> {
    let n = points.n_samples();
    let p = points.n_features();
    let factor = (4.0 / ((p as f64 + 2.0) * n as f64)).powf(1.0 / (p as f64 + 4.0));
    (0..p)
        .map(|j| {
            let col: Vec<f64> = points.rows().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            let floor = 1e-6 * ((hi - lo) + 1e-12);
            (sd * factor).max(floor)
        })
        .collect()
}

impl GaussianKde {
    pub fn fit(points: Features, rule: BandwidthRule) -> Result<Self> {
        if points.n_samples() == 0 {
            return Err(Error::NoData);
        }
        let bandwidth = match rule {
            BandwidthRule::Silverman => silverman_bandwidth(&points),
            BandwidthRule::Fixed(h) if h > 0.0 => vec![h; points.n_features()],
            BandwidthRule::Fixed(h) => return Err(Error::InvalidInput(format!("bandwidth {h} must be positive"))),
        };
        let p = points.n_features() as f64;
        let log_norm =
            -(points.n_samples() as f64).ln() - bandwidth.iter().map(|h| h.ln()).sum::<f64>() - 0.5 * p * LN_2PI;
        Ok(Self {
            points,
            bandwidth,
            log_norm,
        })
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let exps: Vec<f64> = self
            .points
            .rows()
            .map(|r| {
                -0.5 * r
                    .iter()
                    .zip(x)
                    .zip(&self.bandwidth)
                    .map(|((a, b), h)| ((b - a) / h).powi(2))
                    .sum::<f64>()
            })
            .collect();
        let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
        max + sum.ln() + self.log_norm
    }
}

pub fn dc(
    train: &Dataset,
    test: &Features,
    alpha: f64,
    rule: BandwidthRule,
    plan: &SplitPlan,
) -> Result<PredictionSets> {
    let labels = train.required_labels()?;
    let k_count = train.n_classes();
    plan.validate(train.n_samples(), test.n_samples())?;
    for k in 0..k_count {
        let name = &train.class_names()[k];
        if SplitPlan::class_rows(&plan.fold1, &labels, k).len() < 2 {
            return Err(Error::EmptyFold {
                class: name.clone(),
                fold: "fold 1 (needs two rows)",
            });
        }
        plan.require_class(&labels, k, name, 1)?;
    }
    let x = train.features();
    let mut calibrators = Vec::with_capacity(k_count);
    let mut kdes = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let kde = GaussianKde::fit(x.select(&SplitPlan::class_rows(&plan.fold1, &labels, k)), rule)?;
        let cal = SplitPlan::class_rows(&plan.fold2, &labels, k)
            .iter()
            .map(|&i| kde.log_density(x.row(i)))
            .collect();
        calibrators.push(ConformalCalibrator::new(cal)?);
        kdes.push(kde);
    }
    let pvalues: Vec<Vec<f64>> = test
        .rows()
        .map(|row| {
            kdes.iter()
                .zip(&calibrators)
                .map(|(kde, c)| c.pvalue(kde.log_density(row)))
                .collect()
        })
        .collect();
    let sets = pvalues
        .iter()
        .map(|pv| (0..k_count).filter(|&k| pv[k] >= alpha).collect())
        .collect();
    PredictionSets::new(train.class_names().to_vec(), sets)?.with_scores(pvalues)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_density_at_center() {
        let h = 0.7;
        let kde = GaussianKde::fit(Features::new(vec![1.0, -2.0, 3.0], 3).unwrap(), BandwidthRule::Fixed(h)).unwrap();
        let expected = -1.5 * (2.0 * std::f64::consts::PI * h * h).ln();
        assert!((kde.log_density(&[1.0, -2.0, 3.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_column_gets_floor() {
        let pts = Features::new(vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0], 2).unwrap();
        let bw = silverman_bandwidth(&pts);
        assert!(bw[0] > 0.1);
        assert_eq!(bw[1], 1e-6 * 1e-12);
        let kde = GaussianKde::fit(pts, BandwidthRule::Silverman).unwrap();
        assert!(kde.log_density(&[2.0, 5.0]).is_finite());
        assert!(kde.log_density(&[2.0, 5.1]) < kde.log_density(&[2.0, 5.0]));
    }

    #[test]
    fn density_integrates_to_one_1d() {
        let kde = GaussianKde::fit(Features::new(vec![0.0, 1.0, 3.0], 1).unwrap(), BandwidthRule::Silverman).unwrap();
        let step = 1e-3;
        let total: f64 = (-10_000..14_000)
            .map(|i| kde.log_density(&[i as f64 * step]).exp() * step)
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }
}
