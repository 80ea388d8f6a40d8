//! Synthetic trial generator standing in for experimental data.
//!
//! Each task draws a dispersion `sigma ~ U(sigma_lo, sigma_hi)` and a bias
//! `mu = ln(theta) - u * sigma^2 / 2` with `u ~ U(-1, 1)`, so tasks range
//! from mean-unbiased (`u = 1`) to strongly overestimating (`u = -1`).
//! Initial estimates are log-normal. In social trials every agent moves a
//! fixed fraction [`REVISION_STEP`] of the way towards the group's
//! centralized collective estimate; control trials keep their estimates.
//! Even-numbered groups of every task are social, odd-numbered ones control.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::records::TrialRecord;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::influence::{collective_estimate, Centralization};
use crate::rng::{mix_seed, open01, stream};

pub const REVISION_STEP: f64 = 0.7;
pub const SYNTHETIC_DATASET: &str = "synthetic";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_tasks: usize,
    pub groups_per_task: usize,
    pub group_size: usize,
    pub sigma_range: (f64, f64),
    pub theta: f64,
    pub omega_social: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_tasks: 20,
            groups_per_task: 10,
            group_size: 30,
            sigma_range: (0.1, 2.5),
            theta: 100.0,
            omega_social: 0.4,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<Centralization> {
        if self.n_tasks == 0 || self.groups_per_task == 0 || self.group_size == 0 {
            return Err(Error::ParameterDomain(
                "task, group and agent counts must be at least 1".into(),
            ));
        }
        let (lo, hi) = self.sigma_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "sigma range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        Centralization::new(self.omega_social)
    }
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<TrialRecord>> {
    let omega = config.validate()?;
    let tasks: Vec<Vec<TrialRecord>> = (0..config.n_tasks)
        .into_par_iter()
        .map(|task| synth_task(config, omega, task))
        .collect::<Result<_>>()?;
    Ok(tasks.into_iter().flatten().collect())
}

fn synth_task(
    config: &SynthConfig,
    omega: Centralization,
    task: usize,
) -> Result<Vec<TrialRecord>> {
    let mut rng = stream(mix_seed(config.seed, &[task as u64]));
    let (lo, hi) = config.sigma_range;
    let sigma = lo + (hi - lo) * open01(&mut rng);
    let u = 2.0 * open01(&mut rng) - 1.0;
    let mu = config.theta.ln() - 0.5 * sigma * sigma * u;
    let spec = DistributionSpec::lognormal(mu, sigma)?;

    let width = digits(config.n_tasks);
    let gwidth = digits(config.groups_per_task);
    let mut trials = Vec::with_capacity(config.groups_per_task);
    for group in 0..config.groups_per_task {
        let social = group % 2 == 0;
        let mut initial = vec![0.0; config.group_size];
        spec.fill(&mut rng, &mut initial);
        let revised = if social {
            let target = collective_estimate(&initial, omega)?;
            initial
                .iter()
                .map(|a| a + REVISION_STEP * (target - a))
                .collect()
        } else {
            initial.clone()
        };
        trials.push(TrialRecord {
            dataset_id: SYNTHETIC_DATASET.into(),
            task_id: format!("task-{task:0width$}"),
            group_id: format!("group-{group:0gwidth$}"),
            social,
            truth: config.theta,
            initial_estimates: initial,
            revised_estimates: revised,
        });
    }
    Ok(trials)
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}
