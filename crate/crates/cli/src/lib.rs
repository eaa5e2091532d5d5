//! Experiment runner for conformalized semi-supervised forests and the
//! comparison methods: config parsing, data cohorts, method dispatch and the
//! `generate`, `run`, `audit` and `compare` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod methods;

pub use commands::{cmd_audit, cmd_compare, cmd_generate, cmd_run, AuditSummary, RunOutput};
pub use config::{AuditConfig, Cohort, DataSource, ExperimentConfig};
pub use error::{CliError, CliResult};
pub use methods::{Gamma, MethodConfig, MethodName};
