//! Influence weights, the centralization parameter and DeGroot fixed points.

use std::collections::VecDeque;

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;
const DEGROOT_MAX_ITERATIONS: usize = 1_000_000;

/// Centralization `omega` in [0, 1]: 0 is equal weighting, 1 a single dictator.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Centralization(f64);

impl Centralization {
    pub const DECENTRALIZED: Centralization = Centralization(0.0);
    pub const DICTATOR: Centralization = Centralization(1.0);

    pub fn new(omega: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&omega) {
            Ok(Self(omega))
        } else {
            Err(Error::ParameterDomain(format!(
                "centralization must lie in [0, 1], got {omega}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Convex influence weights, stored in nonincreasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceWeights(Vec<f64>);

impl InfluenceWeights {
    /// Validates and sorts the weights so that `w[0]` is the most influential
    /// agent.
    pub fn new(mut w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptyInput("influence weights".into()));
        }
        if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::ParameterDomain(format!(
                "influence weight {bad} is not a nonnegative number"
            )));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::ParameterDomain(format!(
                "influence weights sum to {total}, not 1"
            )));
        }
        w.sort_by(|a, b| b.total_cmp(a));
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Weighted average of `estimates`, pairing `w[0]` with `estimates[0]`.
    pub fn apply(&self, estimates: &[f64]) -> Result<f64> {
        if estimates.len() != self.0.len() {
            return Err(Error::ParameterDomain(format!(
                "{} estimates for {} weights",
                estimates.len(),
                self.0.len()
            )));
        }
        Ok(self.0.iter().zip(estimates).map(|(w, a)| w * a).sum())
    }
}

/// Row-stochastic listening matrix: row `i` holds the weights agent `i`
/// places on everyone's current opinion.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix(DMatrix<f64>);

impl InfluenceMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::ParameterDomain(format!(
                "influence matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::ParameterDomain(
                "influence matrix has negative or non-finite entries".into(),
            ));
        }
        for (i, row) in m.row_iter().enumerate() {
            let s = row.sum();
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::ParameterDomain(format!(
                    "row {i} of the influence matrix sums to {s}"
                )));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ParameterDomain(
                "influence matrix rows have unequal length".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Collective estimate with the first element as the influential agent:
/// `omega * a[0] + (1 - omega) * mean(a)`.
pub fn collective_estimate(estimates: &[f64], omega: Centralization) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput(
            "collective estimate of no estimates".into(),
        ));
    }
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    Ok(centralized(estimates[0], mean, omega.value()))
}

/// `mean + omega * (lead - mean)`; exactly `mean` when `omega == 0` or
/// `lead == mean`.
#[inline]
pub(crate) fn centralized(lead: f64, mean: f64, omega: f64) -> f64 {
    mean + omega * (lead - mean)
}

/// Weights of the one-parameter family interpolating between equal weights
/// and a dictator.
pub fn weights_from_centralization(n: usize, omega: Centralization) -> Result<InfluenceWeights> {
    if n == 0 {
        return Err(Error::ParameterDomain(
            "group size must be at least 1".into(),
        ));
    }
    let om = omega.value();
    let rest = (1.0 - om) / n as f64;
    let mut w = vec![rest; n];
    w[0] = om + rest;
    InfluenceWeights::new(w)
}

/// Freeman-style centralization `sum_i (w_max - w_i) / (n - 1)`.
pub fn centralization_from_weights(weights: &InfluenceWeights) -> Result<Centralization> {
    let w = weights.as_slice();
    if w.len() < 2 {
        return Err(Error::UndefinedCentralization);
    }
    let w_max = w[0];
    let spread: f64 = w.iter().map(|wi| w_max - wi).sum();
    Centralization::new((spread / (w.len() - 1) as f64).clamp(0.0, 1.0))
}

/// Stationary left eigenvector of an irreducible aperiodic influence matrix,
/// by power iteration until the L1 change drops below `tol`.
///
/// The iteration runs on the lazy chain `(W + I) / 2`, which has the same
/// fixed point but no eigenvalues near -1, so nearly bipartite networks
/// converge instead of oscillating at the rounding floor. A step change of
/// `c` means `|pi W - pi|_1 = 2c`.
pub fn degroot_influence(matrix: &InfluenceMatrix, tol: f64) -> Result<InfluenceWeights> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    check_ergodic(matrix.matrix())?;

    let n = matrix.size();
    let w = matrix.matrix();
    let mut pi = RowDVector::from_element(n, 1.0 / n as f64);
    for _ in 0..DEGROOT_MAX_ITERATIONS {
        let mut next = (&pi * w + &pi) * 0.5;
        let total = next.sum();
        next /= total;
        let change: f64 = (&next - &pi).abs().sum();
        pi = next;
        if change < tol {
            return InfluenceWeights::new(pi.iter().copied().collect());
        }
    }
    Err(Error::ReducibleOrPeriodic(format!(
        "power iteration did not converge within {DEGROOT_MAX_ITERATIONS} iterations"
    )))
}

/// Checks strong connectivity and period 1 of the support graph of `w`.
fn check_ergodic(w: &DMatrix<f64>) -> Result<()> {
    let n = w.nrows();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| w[(i, j)] > 0.0).collect())
        .collect();
    let pred: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| w[(i, j)] > 0.0).collect())
        .collect();

    let levels = bfs_levels(&succ);
    if levels.iter().any(Option::is_none) || bfs_levels(&pred).iter().any(Option::is_none) {
        return Err(Error::ReducibleOrPeriodic(
            "support graph is not strongly connected".into(),
        ));
    }
    // The period of an irreducible chain is the gcd of level[u] + 1 - level[v]
    // over all edges u -> v of a BFS tree's level assignment.
    let levels: Vec<i64> = levels.into_iter().map(|l| l.unwrap() as i64).collect();
    let mut period = 0i64;
    for (u, targets) in succ.iter().enumerate() {
        for &v in targets {
            period = gcd(period, (levels[u] + 1 - levels[v]).abs());
        }
    }
    if period != 1 {
        return Err(Error::ReducibleOrPeriodic(format!(
            "chain has period {period}"
        )));
    }
    Ok(())
}

fn bfs_levels(adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    level[0] = Some(0);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Canonical influence network shapes, in order of increasing centralization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Empty,
    Complete,
    Circle,
    Star,
}

/// Tolerance used by [`topology_weights`] for the DeGroot fixed point.
pub const TOPOLOGY_TOLERANCE: f64 = 1e-14;

/// Builds the listening matrix of a canonical topology. Every agent keeps
/// `1 - tie_strength` on itself and spreads `tie_strength` evenly over its
/// neighbours. The empty graph has no ties and yields the identity.
pub fn topology_matrix(kind: Topology, n: usize, tie_strength: f64) -> Result<InfluenceMatrix> {
    if n < 2 {
        return Err(Error::ParameterDomain(format!(
            "topology needs at least 2 agents, got {n}"
        )));
    }
    if !(tie_strength > 0.0 && tie_strength <= 1.0) {
        return Err(Error::ParameterDomain(format!(
            "tie strength must lie in (0, 1], got {tie_strength}"
        )));
    }
    let t = tie_strength;
    let mut m = DMatrix::<f64>::zeros(n, n);
    match kind {
        Topology::Empty => m.fill_with_identity(),
        Topology::Complete => {
            let share = t / (n - 1) as f64;
            m.fill(share);
            m.fill_diagonal(1.0 - t);
        }
        Topology::Circle => {
            for i in 0..n {
                m[(i, i)] += 1.0 - t;
                m[(i, (i + 1) % n)] += t / 2.0;
                m[(i, (i + n - 1) % n)] += t / 2.0;
            }
        }
        Topology::Star => {
            let share = t / (n - 1) as f64;
            m[(0, 0)] = 1.0 - t;
            for i in 1..n {
                m[(0, i)] = share;
                m[(i, 0)] = t;
                m[(i, i)] = 1.0 - t;
            }
        }
    }
    InfluenceMatrix::new(m)
}

/// Asymptotic influence weights of a canonical topology.
///
/// Isolated individuals never move, so the empty graph gets equal (null)
/// influence directly instead of a DeGroot fixed point.
pub fn topology_weights(kind: Topology, n: usize, tie_strength: f64) -> Result<InfluenceWeights> {
    let matrix = topology_matrix(kind, n, tie_strength)?;
    match kind {
        Topology::Empty => InfluenceWeights::new(vec![1.0 / n as f64; n]),
        _ => degroot_influence(&matrix, TOPOLOGY_TOLERANCE),
    }
}
