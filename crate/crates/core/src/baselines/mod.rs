//! Split-conformal comparison methods.
//!
//! * [`crf`]: forest class probabilities calibrated per class.
//! * [`dc`]: per-class Gaussian kernel densities calibrated per class.
//! * [`bcops`]: per-class forests separating a class from the test cohort,
//!   cross-fitted over two train/test folds.
//! * [`acrf`]: adaptive (cumulative-probability) sets with marginal
//!   calibration, optionally randomized, and a covariate-shift weighted
//!   variant.
//!
//! All share [`split::SplitPlan`] and the p-value / quantile machinery in
//! [`split`].

pub mod acrf;
pub mod bcops;
pub mod crf;
pub mod dc;
pub mod split;

pub use acrf::{acrf, acrf_score, acrf_set, acrf_shift, acrf_shift_with_odds, OddsSource};
pub use bcops::bcops;
pub use crf::crf;
pub use dc::{dc, BandwidthRule, GaussianKde};
pub use split::{split_conformal_pvalue, weighted_quantile, ConformalCalibrator, ConformityRecord, SplitPlan};
