//! Monte Carlo estimation of the centralization advantage, its analytical
//! lower bound, phase-diagram sweeps and loss comparisons.
//!
//! The advantage probability is
//! `P(|a(omega) - theta| < |a(0) - theta|)` where `a(omega)` is the collective
//! estimate of `n` i.i.d. draws with the first draw as the influential agent.
//! Ties count as failures.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::influence::{centralized, Centralization};
use crate::rng::{mix_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaEstimate {
    pub value: f64,
    pub std_error: f64,
    pub reps: u64,
}

impl OmegaEstimate {
    fn from_count(hits: u64, reps: u64) -> Self {
        let value = hits as f64 / reps as f64;
        Self {
            value,
            std_error: (value * (1.0 - value) / reps as f64).sqrt(),
            reps,
        }
    }
}

fn check_common(theta: f64, n: usize, reps: u64) -> Result<()> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "truth theta must be positive, got {theta}"
        )));
    }
    if n == 0 {
        return Err(Error::ParameterDomain(
            "group size n must be at least 1".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::ParameterDomain(
            "replicate count must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Runs `reps` groups of `n` draws from one seeded stream and hands each
/// group's (first draw, mean) to `visit`.
fn for_each_group(
    spec: &DistributionSpec,
    n: usize,
    reps: u64,
    seed: u64,
    mut visit: impl FnMut(f64, f64),
) {
    let mut rng = stream(seed);
    let mut buf = vec![0.0; n];
    for _ in 0..reps {
        spec.fill(&mut rng, &mut buf);
        let mean = buf.iter().sum::<f64>() / n as f64;
        visit(buf[0], mean);
    }
}

/// Monte Carlo estimate of the probability that the `omega`-centralized
/// collective estimate is strictly closer to `theta` than the simple mean.
pub fn estimate_omega(
    spec: &DistributionSpec,
    theta: f64,
    n: usize,
    omega: Centralization,
    reps: u64,
    seed: u64,
) -> Result<OmegaEstimate> {
    check_common(theta, n, reps)?;
    let om = omega.value();
    let mut hits = 0u64;
    for_each_group(spec, n, reps, seed, |lead, mean| {
        let c = centralized(lead, mean, om);
        if (c - theta).abs() < (mean - theta).abs() {
            hits += 1;
        }
    });
    Ok(OmegaEstimate::from_count(hits, reps))
}

/// Maximizer of the lower-bound objective over the feasible ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub beta_star: f64,
    pub feasible_from: f64,
}

const BOUND_GRID_POINTS: usize = 256;
const BOUND_Q_LO: f64 = 1e-6;
const BOUND_Q_HI: f64 = 1.0 - 1e-9;
const GOLDEN_REL_TOL: f64 = 1e-8;

/// Lower-bound objective `F(beta) * (1 - F(n beta)^(n-1))`.
///
/// The second factor is computed as `-expm1((n-1) ln(1 - S(n beta)))` from
/// the survival function so that it keeps precision when `F(n beta)` is
/// within rounding of one.
pub fn bound_objective(spec: &DistributionSpec, n: usize, beta: f64) -> f64 {
    let head = spec.cdf(beta);
    if n <= 1 || head == 0.0 {
        return 0.0;
    }
    let tail = spec.sf(n as f64 * beta);
    let someone_far = -((n - 1) as f64 * (-tail).ln_1p()).exp_m1();
    head * someone_far
}

/// Maximizes [`bound_objective`] over `beta > theta / (1 - omega)`.
///
/// A log-spaced grid over the central quantile range locates the peak and a
/// golden-section search on `ln beta` refines it inside the neighbouring grid
/// cells.
pub fn lower_bound(
    spec: &DistributionSpec,
    theta: f64,
    n: usize,
    omega: Centralization,
) -> Result<BoundResult> {
    check_common(theta, n, 1)?;
    let om = omega.value();
    if om >= 1.0 {
        return Err(Error::InfeasibleConstraint { omega: om });
    }
    let feasible_from = theta / (1.0 - om);
    // smallest beta strictly inside the open ray
    let start = feasible_from * (1.0 + 4.0 * f64::EPSILON);
    let objective = |beta: f64| bound_objective(spec, n, beta);

    let lo = spec.quantile(BOUND_Q_LO).max(start);
    let hi = spec.quantile(BOUND_Q_HI);
    if !(hi > lo) {
        return Ok(BoundResult {
            value: objective(start),
            beta_star: start,
            feasible_from,
        });
    }

    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let step = (ln_hi - ln_lo) / (BOUND_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..BOUND_GRID_POINTS)
        .map(|k| ln_lo + step * k as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| objective(t.exp())).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (k, v)| if *v > values[best] { k } else { best });

    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(BOUND_GRID_POINTS - 1)];
    // relative tolerance on beta is an absolute tolerance on ln(beta)
    let (t_star, v_star) = golden_section_max(|t| objective(t.exp()), a, b, GOLDEN_REL_TOL);

    let t_best = if v_star >= values[best] {
        t_star
    } else {
        grid[best]
    };
    let beta_star = t_best.exp().max(start);
    Ok(BoundResult {
        value: objective(beta_star),
        beta_star,
        feasible_from,
    })
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
/// Returns the best abscissa seen and its value.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (c, fc), (d, fd), (b, f(b))];
    candidates
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
}

/// Inclusive, evenly spaced axis `lo, ..., hi` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps }
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.lo + (self.hi - self.lo) * (k as f64 / last))
            .collect()
    }

    fn validate(&self, axis: &str) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::ParameterDomain(format!(
                "{axis} axis needs at least 2 steps"
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo) {
            return Err(Error::ParameterDomain(format!(
                "{axis} axis needs finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Advantage estimates over a (mu, sigma) grid; `cells[i][j]` belongs to
/// `mu_axis[i]` and `sigma_axis[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub mu_axis: Vec<f64>,
    pub sigma_axis: Vec<f64>,
    pub cells: Vec<Vec<OmegaEstimate>>,
}

#[derive(Serialize)]
struct PhaseRow {
    mu: f64,
    sigma: f64,
    omega_value: f64,
    std_error: f64,
    reps: u64,
}

impl PhaseGrid {
    pub fn cell(&self, mu_index: usize, sigma_index: usize) -> &OmegaEstimate {
        &self.cells[mu_index][sigma_index]
    }

    /// Writes `mu,sigma,omega_value,std_error,reps`, one row per cell,
    /// mu-major.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, mu) in self.mu_axis.iter().enumerate() {
            for (j, sigma) in self.sigma_axis.iter().enumerate() {
                let c = &self.cells[i][j];
                w.serialize(PhaseRow {
                    mu: *mu,
                    sigma: *sigma,
                    omega_value: c.value,
                    std_error: c.std_error,
                    reps: c.reps,
                })
                .map_err(|e| Error::Serialize(e.to_string()))?;
            }
        }
        w.flush().map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Serialize(e.to_string()))
    }
}

/// Seed of the sweep cell `(i, j)`.
pub fn cell_seed(seed: u64, i: usize, j: usize) -> u64 {
    mix_seed(seed, &[i as u64, j as u64])
}

/// Sweeps [`estimate_omega`] over a grid of the family's native parameters
/// (`p1 = mu`, `p2 = sigma`). Cells run on the current rayon pool; each cell
/// seeds its own stream, so the output does not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn phase_diagram(
    family: Family,
    mu_range: AxisRange,
    sigma_range: AxisRange,
    theta: f64,
    n: usize,
    omega: Centralization,
    reps: u64,
    seed: u64,
) -> Result<PhaseGrid> {
    mu_range.validate("mu")?;
    sigma_range.validate("sigma")?;
    if sigma_range.lo <= 0.0 {
        return Err(Error::ParameterDomain(format!(
            "sigma axis must be positive, got lo = {}",
            sigma_range.lo
        )));
    }
    check_common(theta, n, reps)?;
    let mu_axis = mu_range.points();
    let sigma_axis = sigma_range.points();
    let ns = sigma_axis.len();

    let flat: Vec<OmegaEstimate> = (0..mu_axis.len() * ns)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / ns, k % ns);
            let spec = DistributionSpec::new(family, mu_axis[i], sigma_axis[j])?;
            estimate_omega(&spec, theta, n, omega, reps, cell_seed(seed, i, j))
        })
        .collect::<Result<_>>()?;

    let cells = flat.chunks(ns).map(<[OmegaEstimate]>::to_vec).collect();
    Ok(PhaseGrid {
        mu_axis,
        sigma_axis,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Absolute,
    Squared,
}

impl LossKind {
    pub fn eval(self, err: f64) -> f64 {
        match self {
            LossKind::Absolute => err.abs(),
            LossKind::Squared => err * err,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossComparison {
    pub loss_centralized: f64,
    pub loss_decentralized: f64,
    pub reps: u64,
}

/// Mean loss of the centralized and equal-weight estimates over the same
/// simulated groups.
pub fn expected_loss_compare(
    spec: &DistributionSpec,
    theta: f64,
    n: usize,
    omega: Centralization,
    loss: LossKind,
    reps: u64,
    seed: u64,
) -> Result<LossComparison> {
    check_common(theta, n, reps)?;
    let om = omega.value();
    let (mut cen, mut dec) = (0.0, 0.0);
    for_each_group(spec, n, reps, seed, |lead, mean| {
        cen += loss.eval(centralized(lead, mean, om) - theta);
        dec += loss.eval(mean - theta);
    });
    Ok(LossComparison {
        loss_centralized: cen / reps as f64,
        loss_decentralized: dec / reps as f64,
        reps,
    })
}
