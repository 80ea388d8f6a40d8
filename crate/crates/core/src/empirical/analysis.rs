//! End-to-end analysis of trial data.
//!
//! Per task, `R` is computed on the initial estimates pooled over all of the
//! task's groups. Improvement of social groups is regressed on `R` with a
//! logistic model; the z-scored revised error of all groups is regressed on
//! `[1, R, I, I*R]` where `I` marks social interaction. Both models are
//! fixed-effects fits: no group-level random effects are estimated.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::outcome::{trial_outcome, zscore_by_task, TaskOutcomes, TrialOutcome};
use super::records::TrialRecord;
use super::regression::{fit_logistic, fit_ols, Design, RegressionResult};
use crate::context::{r_score, RScore};
use crate::error::{Error, Result};

pub const MODEL_NOTE: &str =
    "fixed-effects approximation: group-level random coefficients are not estimated";
pub const LOGISTIC_TERMS: [&str; 2] = ["intercept", "R"];
pub const OLS_TERMS: [&str; 4] = ["intercept", "R", "I", "I_x_R"];
/// Step of the `R` grid used for marginal effects.
pub const MARGINAL_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSummary {
    pub dataset_id: String,
    pub task_id: String,
    pub r: RScore,
    pub n_trials: usize,
}

impl Serialize for TaskSummary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row<'a> {
            dataset_id: &'a str,
            task_id: &'a str,
            r: f64,
            n_trials: usize,
            n_estimates: usize,
            ll_lognormal: f64,
            ll_normal: f64,
        }
        Row {
            dataset_id: &self.dataset_id,
            task_id: &self.task_id,
            r: self.r.r,
            n_trials: self.n_trials,
            n_estimates: self.r.n_obs,
            ll_lognormal: self.r.ll_lognormal,
            ll_normal: self.r.ll_normal,
        }
        .serialize(s)
    }
}

/// Fitted social-minus-control difference in z-scored revised error at a
/// given `R`, plus the fitted improvement probability of social groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalEffect {
    pub r: f64,
    pub social_minus_control: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_improve: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub seed: Option<u64>,
    pub n_trials: usize,
    pub n_social: usize,
    pub n_control: usize,
    pub n_tasks: usize,
    pub dropped_subjects: usize,
    pub logistic_n_obs: usize,
    pub ols_n_obs: usize,
    /// `R` at which the fitted social-minus-control difference changes sign.
    pub crossover_r: Option<f64>,
    pub model: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub logistic: RegressionResult,
    pub ols: RegressionResult,
    pub tasks: Vec<TaskSummary>,
    pub marginal_effects: Vec<MarginalEffect>,
    pub meta: ReportMeta,
    /// One entry per trial, in input order.
    #[serde(skip)]
    pub outcomes: Vec<TrialOutcome>,
}

impl AnalysisReport {
    /// Fitted social-minus-control difference `beta_I + beta_IxR * r`.
    pub fn social_effect_at(&self, r: f64) -> f64 {
        self.ols.coefficients["I"] + self.ols.coefficients["I_x_R"] * r
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }
}

pub fn analyze(trials: &[TrialRecord]) -> Result<AnalysisReport> {
    if trials.is_empty() {
        return Err(Error::EmptyInput("no trials to analyze".into()));
    }
    for t in trials {
        t.validate()?;
    }

    // tasks in order of first appearance
    let mut task_index: HashMap<(&str, &str), usize> = HashMap::new();
    let mut task_members: Vec<Vec<usize>> = Vec::new();
    let mut trial_task = Vec::with_capacity(trials.len());
    for (k, t) in trials.iter().enumerate() {
        let next = task_members.len();
        let id = *task_index.entry(t.task_key()).or_insert(next);
        if id == next {
            task_members.push(Vec::new());
        }
        task_members[id].push(k);
        trial_task.push(id);
    }

    let summaries: Vec<TaskSummary> = task_members
        .par_iter()
        .map(|members| {
            let first = &trials[members[0]];
            let pooled: Vec<f64> = members
                .iter()
                .flat_map(|&k| trials[k].initial_estimates.iter().copied())
                .collect();
            let r = r_score(&pooled).map_err(|e| match e {
                Error::DegenerateData(m) => {
                    Error::DegenerateData(format!("task {}: {m}", first.task_id))
                }
                other => other,
            })?;
            Ok(TaskSummary {
                dataset_id: first.dataset_id.clone(),
                task_id: first.task_id.clone(),
                r,
                n_trials: members.len(),
            })
        })
        .collect::<Result<_>>()?;

    let mut grouped: Vec<TaskOutcomes> = task_members
        .iter()
        .zip(&summaries)
        .map(|(members, s)| TaskOutcomes {
            task_id: format!("{}/{}", s.dataset_id, s.task_id),
            outcomes: members.iter().map(|&k| trial_outcome(&trials[k])).collect(),
        })
        .collect();
    zscore_by_task(&mut grouped)?;

    // back to input order
    let mut cursor = vec![0usize; grouped.len()];
    let outcomes: Vec<TrialOutcome> = trial_task
        .iter()
        .map(|&task| {
            let o = grouped[task].outcomes[cursor[task]].clone();
            cursor[task] += 1;
            o
        })
        .collect();

    let n_social = outcomes.iter().filter(|o| o.social).count();
    let n_control = outcomes.len() - n_social;
    if n_social == 0 || n_control == 0 {
        return Err(Error::InsufficientDesign(format!(
            "need both social and control trials, got {n_social} social and {n_control} control"
        )));
    }

    let r_of = |k: usize| summaries[trial_task[k]].r.r;
    let social_idx: Vec<usize> = (0..trials.len()).filter(|&k| outcomes[k].social).collect();
    let logistic_design = Design::from_rows(
        &LOGISTIC_TERMS,
        &social_idx
            .iter()
            .map(|&k| vec![1.0, r_of(k)])
            .collect::<Vec<_>>(),
    )?;
    let improved: Vec<bool> = social_idx.iter().map(|&k| outcomes[k].improved).collect();
    let logistic = fit_logistic(&improved, &logistic_design)?;

    let ols_rows: Vec<Vec<f64>> = (0..trials.len())
        .map(|k| {
            let r = r_of(k);
            let i = outcomes[k].social as u8 as f64;
            vec![1.0, r, i, i * r]
        })
        .collect();
    let ols_design = Design::from_rows(&OLS_TERMS, &ols_rows)?;
    let z: Vec<f64> = outcomes
        .iter()
        .map(|o| o.z_abs_error_revised.expect("z-scored above"))
        .collect();
    let ols = fit_ols(&z, &ols_design)?;

    let marginal_effects = marginal_grid(&logistic, &ols);
    let b_i = ols.coefficients["I"];
    let b_ir = ols.coefficients["I_x_R"];
    let crossover_r = (b_ir != 0.0).then(|| -b_i / b_ir);

    let meta = ReportMeta {
        seed: None,
        n_trials: trials.len(),
        n_social,
        n_control,
        n_tasks: summaries.len(),
        dropped_subjects: 0,
        logistic_n_obs: logistic.n_obs,
        ols_n_obs: ols.n_obs,
        crossover_r,
        model: MODEL_NOTE,
    };
    Ok(AnalysisReport {
        logistic,
        ols,
        tasks: summaries,
        marginal_effects,
        meta,
        outcomes,
    })
}

fn marginal_grid(logistic: &RegressionResult, ols: &RegressionResult) -> Vec<MarginalEffect> {
    let b = ols.coefficients.values();
    let cov = &ols.covariance;
    let df = ols.df.unwrap_or(1).max(1) as f64;
    let t_crit = StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let (a0, a1) = (
        logistic.coefficients["intercept"],
        logistic.coefficients["R"],
    );
    let steps = (1.0 / MARGINAL_STEP).round() as usize;
    (0..=steps)
        .map(|k| {
            let r = k as f64 * MARGINAL_STEP;
            let diff = b[2] + b[3] * r;
            let var = cov[(2, 2)] + r * r * cov[(3, 3)] + 2.0 * r * cov[(2, 3)];
            let se = var.max(0.0).sqrt();
            MarginalEffect {
                r,
                social_minus_control: diff,
                std_error: se,
                ci_low: diff - t_crit * se,
                ci_high: diff + t_crit * se,
                p_improve: 1.0 / (1.0 + (-(a0 + a1 * r)).exp()),
            }
        })
        .collect()
}
