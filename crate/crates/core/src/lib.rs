//! Bayesian adaptive dose-finding on a Gaussian-process surrogate.
//!
//! A logistic dose-response curve is learned with exact GP regression under
//! an RBF prior. The adaptive design picks each next dose by maximizing
//! `μ + λ₁ μ′ + λ₂ σ` on a grid; the baseline uses equally spaced doses.
//! [`harness`] replicates both designs and scores them around the optimum.

pub mod acquisition;
pub mod cli;
pub mod config;
pub mod gp;
pub mod harness;
pub mod rng;
pub mod svg;
pub mod trial;

pub use acquisition::{EvaluationGrid, UtilityWeights};
pub use gp::{fit_posterior, KernelSpec, ObservationSet, PosteriorModel};
pub use trial::{run_adaptive, run_fixed, GroundTruth, ScenarioConfig, TrialTrace};
