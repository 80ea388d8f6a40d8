//! Trial-level pipeline: ingestion, outcomes, per-task `R`, and the
//! fixed-effects logistic and linear regressions.

pub mod analysis;
pub mod outcome;
pub mod records;
pub mod regression;
pub mod synth;

pub use analysis::{analyze, AnalysisReport, MarginalEffect, TaskSummary};
pub use outcome::{trial_outcome, zscore_by_task, TaskOutcomes, TrialOutcome};
pub use records::{load_trials, read_trials, save_trials, write_trials, LoadedTrials, TrialRecord};
pub use regression::{fit_logistic, fit_ols, Design, NamedVector, RegressionResult, StatisticKind};
pub use synth::{generate_synthetic, SynthConfig};
