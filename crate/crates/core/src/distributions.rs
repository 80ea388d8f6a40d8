//! Initial-estimate distribution families.
//!
//! Each family is described by two native parameters:
//!
//! | family       | `p1`                      | `p2`                    |
//! |--------------|---------------------------|-------------------------|
//! | `Normal`     | mean                      | standard deviation      |
//! | `LogNormal`  | mean of `ln X`            | std. dev. of `ln X`     |
//! | `Pareto`     | scale `x_m > 0`           | tail index `alpha`      |
//! | `LogLaplace` | location of `ln X`        | scale of `ln X`         |
//!
//! The location-like parameter plays the role of the bias `mu` and the
//! shape-like parameter the role of the dispersion `sigma`.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::rng::{open01, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    LogNormal,
    Pareto,
    LogLaplace,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::LogNormal => "lognormal",
            Family::Pareto => "pareto",
            Family::LogLaplace => "loglaplace",
        }
    }

    /// Whether the support is the positive half-line.
    pub fn is_positive(self) -> bool {
        !matches!(self, Family::Normal)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Families that can be fitted by maximum likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitFamily {
    Normal,
    LogNormal,
}

impl From<FitFamily> for Family {
    fn from(f: FitFamily) -> Self {
        match f {
            FitFamily::Normal => Family::Normal,
            FitFamily::LogNormal => Family::LogNormal,
        }
    }
}

/// A validated member of one of the [`Family`] distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionSpec {
    family: Family,
    p1: f64,
    p2: f64,
}

impl DistributionSpec {
    pub fn new(family: Family, p1: f64, p2: f64) -> Result<Self> {
        if !p1.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "{family}: p1 must be finite, got {p1}"
            )));
        }
        if !(p2.is_finite() && p2 > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "{family}: p2 must be positive, got {p2}"
            )));
        }
        if family == Family::Pareto && p1 <= 0.0 {
            return Err(Error::ParameterDomain(format!(
                "pareto: scale x_m must be positive, got {p1}"
            )));
        }
        Ok(Self { family, p1, p2 })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(Family::Normal, mean, sd)
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::LogNormal, mu, sigma)
    }

    pub fn pareto(scale: f64, alpha: f64) -> Result<Self> {
        Self::new(Family::Pareto, scale, alpha)
    }

    pub fn log_laplace(location: f64, scale: f64) -> Result<Self> {
        Self::new(Family::LogLaplace, location, scale)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.family {
            Family::Normal => std_normal_cdf((x - self.p1) / self.p2),
            Family::LogNormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - self.p1) / self.p2)
                }
            }
            Family::Pareto => {
                if x <= self.p1 {
                    0.0
                } else {
                    -(self.p2 * (self.p1 / x).ln()).exp_m1()
                }
            }
            Family::LogLaplace => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = (x.ln() - self.p1) / self.p2;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
        }
    }

    /// Survival function `1 - cdf(x)`, evaluated without cancellation in the
    /// upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.family {
            Family::Normal => std_normal_cdf(-(x - self.p1) / self.p2),
            Family::LogNormal => {
                if x <= 0.0 {
                    1.0
                } else {
                    std_normal_cdf(-(x.ln() - self.p1) / self.p2)
                }
            }
            Family::Pareto => {
                if x <= self.p1 {
                    1.0
                } else {
                    (self.p1 / x).powf(self.p2)
                }
            }
            Family::LogLaplace => {
                if x <= 0.0 {
                    return 1.0;
                }
                let z = (x.ln() - self.p1) / self.p2;
                if z < 0.0 {
                    1.0 - 0.5 * z.exp()
                } else {
                    0.5 * (-z).exp()
                }
            }
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Normal => normal_ln_pdf(x, self.p1, self.p2),
            Family::LogNormal => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let lx = x.ln();
                    normal_ln_pdf(lx, self.p1, self.p2) - lx
                }
            }
            Family::Pareto => {
                if x < self.p1 {
                    f64::NEG_INFINITY
                } else {
                    self.p2.ln() + self.p2 * self.p1.ln() - (self.p2 + 1.0) * x.ln()
                }
            }
            Family::LogLaplace => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let lx = x.ln();
                    -(lx - self.p1).abs() / self.p2 - (2.0 * self.p2).ln() - lx
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Inverse CDF for `q` in (0, 1).
    pub(crate) fn quantile(&self, q: f64) -> f64 {
        debug_assert!(q > 0.0 && q < 1.0, "quantile level {q} outside (0, 1)");
        match self.family {
            Family::Normal => self.p1 + self.p2 * std_normal_quantile(q),
            Family::LogNormal => (self.p1 + self.p2 * std_normal_quantile(q)).exp(),
            // ln(1 - q) through ln_1p keeps resolution for small q
            Family::Pareto => self.p1 * (-(-q).ln_1p() / self.p2).exp(),
            Family::LogLaplace => {
                let z = if q < 0.5 {
                    (2.0 * q).ln()
                } else {
                    -(LN_2 + (-q).ln_1p())
                };
                (self.p1 + self.p2 * z).exp()
            }
        }
    }

    /// Fills `out` with i.i.d. draws from `rng` by inverse-CDF transform.
    pub(crate) fn fill<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.quantile(open01(rng));
        }
    }
}

/// Draws `count` i.i.d. values; identical `(spec, count, seed)` gives
/// bit-identical output.
pub fn sample(spec: &DistributionSpec, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::ParameterDomain(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = stream(seed);
    let mut out = vec![0.0; count];
    spec.fill(&mut rng, &mut out);
    Ok(out)
}

pub fn cdf(spec: &DistributionSpec, x: f64) -> f64 {
    spec.cdf(x)
}

/// Maximum-likelihood fit result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub spec: DistributionSpec,
    pub log_likelihood: f64,
    pub n_obs: usize,
}

/// Fits a normal or log-normal distribution by maximum likelihood.
///
/// The variance estimate uses the `1/n` divisor. A log-normal fit is the
/// normal fit of `ln x`, with the log-likelihood carrying the Jacobian term.
pub fn fit_mle(family: FitFamily, data: &[f64]) -> Result<FitResult> {
    if data.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: data.len(),
        });
    }
    if let Some(&bad) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::Support {
            family: Family::from(family).name(),
            value: bad,
        });
    }
    let transformed: Vec<f64> = match family {
        FitFamily::Normal => data.to_vec(),
        FitFamily::LogNormal => {
            if let Some(&bad) = data.iter().find(|&&x| x <= 0.0) {
                return Err(Error::Support {
                    family: "lognormal",
                    value: bad,
                });
            }
            data.iter().map(|x| x.ln()).collect()
        }
    };
    let (mean, sd) = mean_and_ml_sd(&transformed);
    if sd == 0.0 || sd <= 4.0 * f64::EPSILON * mean.abs() {
        return Err(Error::DegenerateData(format!(
            "zero variance in {} fit",
            Family::from(family)
        )));
    }
    let spec = DistributionSpec::new(family.into(), mean, sd)?;
    let log_likelihood = data.iter().map(|&x| spec.ln_pdf(x)).sum();
    Ok(FitResult {
        spec,
        log_likelihood,
        n_obs: data.len(),
    })
}

fn mean_and_ml_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / n).sqrt())
}

fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln()
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub(crate) fn std_normal_quantile(q: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * q)
}
