//! Simulation and analysis toolkit for comparing centralized and decentralized
//! influence structures in collective estimation.
//!
//! The crate is organised around the pieces of the model:
//!
//! * [`distributions`]: initial-estimate families, inverse-CDF sampling and
//!   maximum-likelihood fits.
//! * [`influence`]: weight vectors, the centralization parameter and DeGroot
//!   fixed points for canonical topologies.
//! * [`omega`]: Monte Carlo estimation of the probability that the centralized
//!   collective estimate beats the equal-weight one, its analytical lower bound,
//!   phase-diagram sweeps and loss comparisons.
//! * [`context`]: the heavy-tailedness score `R`.
//! * [`empirical`]: trial ingestion, outcomes and fixed-effects regressions.
//! * [`cli`]: the `crowdbound` command-line front end.

pub mod cli;
pub mod context;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod heatmap;
pub mod influence;
pub mod omega;
pub mod rng;

pub use context::{r_score, RScore};
pub use distributions::{cdf, fit_mle, sample, DistributionSpec, Family, FitFamily, FitResult};
pub use error::{Error, Result};
pub use influence::{
    centralization_from_weights, collective_estimate, degroot_influence, topology_weights,
    weights_from_centralization, Centralization, InfluenceMatrix, InfluenceWeights, Topology,
};
pub use omega::{
    estimate_omega, expected_loss_compare, lower_bound, phase_diagram, AxisRange, BoundResult,
    LossComparison, LossKind, OmegaEstimate, PhaseGrid,
};
