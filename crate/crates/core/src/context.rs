//! Heavy-tailedness score `R` of a set of initial estimates.
//!
//! `R` is the relative likelihood of a fitted log-normal model against a
//! fitted normal model, `1 / (1 + exp(ll_normal - ll_lognormal))`. Both models
//! have two parameters, so no complexity penalty enters. `R` near 1 means the
//! estimates look log-normal (heavy right tail), near 0 normal, and exactly
//! 0.5 when the two fits are equally good.

use serde::Serialize;

use crate::distributions::{fit_mle, FitFamily};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RScore {
    pub r: f64,
    pub ll_lognormal: f64,
    pub ll_normal: f64,
    pub n_obs: usize,
}

/// Logistic of the log-likelihood difference. Saturates to exactly 0 or 1
/// once the difference exceeds about 37 nats.
pub fn relative_likelihood(ll_lognormal: f64, ll_normal: f64) -> f64 {
    1.0 / (1.0 + (ll_normal - ll_lognormal).exp())
}

pub fn r_score(data: &[f64]) -> Result<RScore> {
    if let Some(&bad) = data.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Support {
            family: "lognormal",
            value: bad,
        });
    }
    let lognormal = fit_mle(FitFamily::LogNormal, data)?;
    let normal = fit_mle(FitFamily::Normal, data)?;
    Ok(RScore {
        r: relative_likelihood(lognormal.log_likelihood, normal.log_likelihood),
        ll_lognormal: lognormal.log_likelihood,
        ll_normal: normal.log_likelihood,
        n_obs: data.len(),
    })
}
