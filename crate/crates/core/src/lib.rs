//! Conformalized semi-supervised random forests (CSForest).
//!
//! Set-valued multi-class prediction that keeps per-class coverage of the
//! true label while flagging test samples that belong to none of the
//! training classes. The test cohort is used, unlabeled, while growing the
//! per-class tree ensembles, and calibration follows a leave-pair-out
//! jackknife+-after-bootstrap scheme.
//!
//! The crate also carries the comparison methods (CRF, DC, BCOPS, ACRF and
//! its randomized and covariate-shift variants), a known-density oracle for
//! synthetic Gaussian scenarios, data generators and per-class evaluation.
//!
//! ```
//! use csforest::csforest::{CsForest, CsForestParams};
//! use csforest::dataset::generate_example1;
//!
//! let (train, test) = generate_example1(30, 10, 7).unwrap();
//! let params = CsForestParams { b_tilde: 40, ..CsForestParams::default() };
//! let out = CsForest::new(params).fit_predict(&train, test.features()).unwrap();
//! assert_eq!(out.sets.len(), test.n_samples());
//! ```

pub mod baselines;
pub mod bitset;
pub mod csforest;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod forest;
pub mod oracle;
pub mod rng;
pub mod sets;
pub mod tree;

pub use error::{Error, Result};
