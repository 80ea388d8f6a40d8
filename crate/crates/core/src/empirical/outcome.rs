use serde::Serialize;

use super::records::TrialRecord;
use crate::error::{Error, Result};

/// Per-trial accuracy of the collective initial and revised estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub social: bool,
    /// Revised collective estimate strictly closer to the truth than the
    /// initial one.
    pub improved: bool,
    pub abs_error_initial: f64,
    pub abs_error_revised: f64,
    /// Filled in by [`zscore_by_task`].
    pub z_abs_error_revised: Option<f64>,
}

pub fn trial_outcome(trial: &TrialRecord) -> TrialOutcome {
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let abs_error_initial = (mean(&trial.initial_estimates) - trial.truth).abs();
    let abs_error_revised = (mean(&trial.revised_estimates) - trial.truth).abs();
    TrialOutcome {
        social: trial.social,
        improved: abs_error_revised < abs_error_initial,
        abs_error_initial,
        abs_error_revised,
        z_abs_error_revised: None,
    }
}

/// The outcomes of one task's trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcomes {
    pub task_id: String,
    pub outcomes: Vec<TrialOutcome>,
}

/// Standardizes revised absolute errors within each task with the sample
/// standard deviation. Every task must have at least two trials and nonzero
/// spread; all offending tasks are reported together.
pub fn zscore_by_task(tasks: &mut [TaskOutcomes]) -> Result<()> {
    let mut degenerate = Vec::new();
    let mut stats = Vec::with_capacity(tasks.len());
    for task in tasks.iter() {
        let errs: Vec<f64> = task.outcomes.iter().map(|o| o.abs_error_revised).collect();
        let n = errs.len();
        if n < 2 {
            degenerate.push(task.task_id.clone());
            stats.push((0.0, 0.0));
            continue;
        }
        let mean = errs.iter().sum::<f64>() / n as f64;
        let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(f64::MIN_POSITIVE)) {
            degenerate.push(task.task_id.clone());
        }
        stats.push((mean, sd));
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateTask(degenerate));
    }
    for (task, (mean, sd)) in tasks.iter_mut().zip(stats) {
        for o in &mut task.outcomes {
            o.z_abs_error_revised = Some((o.abs_error_revised - mean) / sd);
        }
    }
    Ok(())
}
