//! Ground-truth simulation, the adaptive and fixed trial designs, and the
//! stepwise live mode driven by externally observed outcomes.

use thiserror::Error;

use crate::acquisition::{argmax_on_grid, utility_u3, AcquisitionError, EvaluationGrid, UtilityWeights};
use crate::gp::{fit_posterior, GpError, KernelSpec, ObservationSet, PosteriorModel};
use crate::rng::{self, TrialRng, RNG_ALGORITHM_ID};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrialError {
    #[error(transparent)]
    Gp(#[from] GpError),

    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),

    #[error("invalid scenario: {0}")]
    InvalidConfig(#[from] InvalidConfig),

    #[error("no dose is awaiting an outcome")]
    NoPendingDose,

    #[error("observed outcome must be finite, got {0}")]
    NonFiniteOutcome(f64),
}

/// A violated scenario invariant, naming the offending field.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field}: {reason}")]
pub struct InvalidConfig {
    pub field: String,
    pub reason: String,
}

impl InvalidConfig {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Logistic dose-response `1 / (1 + exp(m − x)) + b` observed with Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub midpoint: f64,
    pub intercept: f64,
    pub noise_std: f64,
}

impl Default for GroundTruth {
    fn default() -> Self {
        Self {
            midpoint: 6.0,
            intercept: 1.0,
            noise_std: 0.1,
        }
    }
}

impl GroundTruth {
    fn logistic(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-x + self.midpoint).exp())
    }

    pub fn performance(&self, x: f64) -> f64 {
        self.logistic(x) + self.intercept
    }

    /// `dθ/dx = s (1 − s)` with `s` the logistic term.
    pub fn slope(&self, x: f64) -> f64 {
        let s = self.logistic(x);
        s * (1.0 - s)
    }
}

pub fn true_performance(truth: &GroundTruth, x: f64) -> f64 {
    truth.performance(x)
}

/// `θ(x) + ε`, `ε ~ N(0, σ²)`. A noise draw is consumed even when `σ = 0`.
pub fn simulate_outcome(truth: &GroundTruth, x: f64, rng: &mut TrialRng) -> f64 {
    let z = rng::standard_normal(rng);
    if truth.noise_std == 0.0 {
        truth.performance(x)
    } else {
        truth.performance(x) + truth.noise_std * z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub truth: GroundTruth,
    pub kernel: KernelSpec,
    pub weights: UtilityWeights,
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub budget: usize,
    pub grid_step: f64,
    pub seed: u64,
    pub warm_start: Option<ObservationSet>,
}

impl Default for ScenarioConfig {
    /// The tutoring-hours scenario: `m = 6`, `b = 1`, `σ = 0.1`, `ℓ = 2`,
    /// `λ = (30, 10)`, doses in `[0, 12]`, twelve participants.
    fn default() -> Self {
        Self {
            truth: GroundTruth::default(),
            kernel: KernelSpec::default(),
            weights: UtilityWeights::default(),
            domain_lo: 0.0,
            domain_hi: 12.0,
            budget: 12,
            grid_step: 0.01,
            seed: 0,
            warm_start: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(InvalidConfig::new(field, format!("must be finite, got {v}")))
            }
        };
        finite("truth.m", self.truth.midpoint)?;
        finite("truth.b", self.truth.intercept)?;
        finite("truth.noise_std", self.truth.noise_std)?;
        if self.truth.noise_std < 0.0 {
            return Err(InvalidConfig::new("truth.noise_std", "must be >= 0"));
        }
        if !(self.kernel.length_scale.is_finite() && self.kernel.length_scale > 0.0) {
            return Err(InvalidConfig::new("kernel.length_scale", "must be > 0"));
        }
        if !(self.kernel.signal_amplitude.is_finite() && self.kernel.signal_amplitude > 0.0) {
            return Err(InvalidConfig::new("kernel.signal_amplitude", "must be > 0"));
        }
        for (field, v) in [
            ("weights.lambda1", self.weights.lambda1),
            ("weights.lambda2", self.weights.lambda2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(InvalidConfig::new(field, "must be finite and >= 0"));
            }
        }
        finite("domain.lo", self.domain_lo)?;
        finite("domain.hi", self.domain_hi)?;
        if self.domain_lo >= self.domain_hi {
            return Err(InvalidConfig::new(
                "domain.lo",
                format!("domain.lo < domain.hi required, got [{}, {}]", self.domain_lo, self.domain_hi),
            ));
        }
        if self.budget == 0 {
            return Err(InvalidConfig::new("budget", "must be >= 1"));
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return Err(InvalidConfig::new("grid.step", "must be > 0"));
        }
        EvaluationGrid::new(self.domain_lo, self.domain_hi, self.grid_step)
            .map_err(|e| InvalidConfig::new("grid.step", e.to_string()))?;
        if let Some(warm) = &self.warm_start {
            if let Some(p) = warm
                .points()
                .iter()
                .find(|p| !(self.domain_lo..=self.domain_hi).contains(&p.x))
            {
                return Err(InvalidConfig::new(
                    "warm_start",
                    format!("dose {} outside [{}, {}]", p.x, self.domain_lo, self.domain_hi),
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<EvaluationGrid, AcquisitionError> {
        EvaluationGrid::new(self.domain_lo, self.domain_hi, self.grid_step)
    }

    /// Warm-start observations, empty when none were supplied.
    pub fn warm_observations(&self) -> ObservationSet {
        self.warm_start.clone().unwrap_or_default()
    }

    pub fn fit(&self, data: &ObservationSet) -> Result<PosteriorModel, GpError> {
        fit_posterior(data, &self.kernel, self.truth.noise_std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignKind {
    Adaptive,
    Fixed,
}

impl DesignKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignKind::Adaptive => "adaptive",
            DesignKind::Fixed => "fixed",
        }
    }
}

impl std::fmt::Display for DesignKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DesignKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" => Ok(DesignKind::Adaptive),
            "fixed" => Ok(DesignKind::Fixed),
            other => Err(format!("unknown design `{other}` (expected adaptive|fixed)")),
        }
    }
}

/// The acquisition maximum that selected a dose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionRecord {
    pub argmax: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub acquisition: Option<AcquisitionRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub design: DesignKind,
    pub steps: Vec<TraceStep>,
    pub config: ScenarioConfig,
    pub rng_algorithm_id: String,
}

impl TrialTrace {
    /// Trial observations in step order (warm start excluded).
    pub fn observations(&self) -> ObservationSet {
        let mut set = ObservationSet::new();
        for s in &self.steps {
            // Steps only ever hold finite values.
            set.push(s.x, s.y).expect("trace values are finite");
        }
        set
    }

    /// Posterior after the first `t` steps, conditioned on the warm start too.
    pub fn posterior_at(&self, t: usize) -> Result<PosteriorModel, GpError> {
        let mut data = self.config.warm_observations();
        data.extend_from(&self.observations().prefix(t));
        self.config.fit(&data)
    }

    pub fn final_posterior(&self) -> Result<PosteriorModel, GpError> {
        self.posterior_at(self.steps.len())
    }
}

/// Next dose: grid argmax of the composite utility over the posterior on `data`.
pub fn next_dose(config: &ScenarioConfig, data: &ObservationSet) -> Result<AcquisitionRecord, TrialError> {
    let model = config.fit(data)?;
    let grid = config.grid()?;
    let (argmax, value) = argmax_on_grid(|x| utility_u3(&model, x, &config.weights), &grid)?;
    Ok(AcquisitionRecord { argmax, value })
}

/// Equally spaced doses over the domain, endpoints included.
pub fn fixed_doses(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + i as f64 * (hi - lo) / (n - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn run_fixed(config: &ScenarioConfig, rng: &mut TrialRng) -> Result<TrialTrace, TrialError> {
    config.validate()?;
    let steps = fixed_doses(config.domain_lo, config.domain_hi, config.budget)
        .into_iter()
        .enumerate()
        .map(|(i, x)| TraceStep {
            t: i + 1,
            x,
            y: simulate_outcome(&config.truth, x, rng),
            acquisition: None,
        })
        .collect();
    Ok(TrialTrace {
        design: DesignKind::Fixed,
        steps,
        config: config.clone(),
        rng_algorithm_id: RNG_ALGORITHM_ID.to_string(),
    })
}

/// First dose of an adaptive trial: uniform on the domain, or the acquisition
/// argmax when warm-start data is available.
fn first_dose(
    config: &ScenarioConfig,
    rng: &mut TrialRng,
) -> Result<(f64, Option<AcquisitionRecord>), TrialError> {
    let warm = config.warm_observations();
    if warm.is_empty() {
        Ok((rng::uniform(rng, config.domain_lo, config.domain_hi), None))
    } else {
        let acq = next_dose(config, &warm)?;
        Ok((acq.argmax, Some(acq)))
    }
}

pub fn run_adaptive(config: &ScenarioConfig, rng: &mut TrialRng) -> Result<TrialTrace, TrialError> {
    config.validate()?;
    let mut data = config.warm_observations();
    let mut steps = Vec::with_capacity(config.budget);

    let (mut x, mut acquisition) = first_dose(config, rng)?;
    for t in 1..=config.budget {
        if t > 1 {
            let acq = next_dose(config, &data)?;
            x = acq.argmax;
            acquisition = Some(acq);
        }
        let y = simulate_outcome(&config.truth, x, rng);
        data.push(x, y)?;
        steps.push(TraceStep {
            t,
            x,
            y,
            acquisition,
        });
    }

    Ok(TrialTrace {
        design: DesignKind::Adaptive,
        steps,
        config: config.clone(),
        rng_algorithm_id: RNG_ALGORITHM_ID.to_string(),
    })
}

pub fn run_design(
    design: DesignKind,
    config: &ScenarioConfig,
    rng: &mut TrialRng,
) -> Result<TrialTrace, TrialError> {
    match design {
        DesignKind::Adaptive => run_adaptive(config, rng),
        DesignKind::Fixed => run_fixed(config, rng),
    }
}

/// An adaptive trial paused between recommending a dose and observing its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveState {
    pub config: ScenarioConfig,
    /// Outcomes recorded so far in this trial (warm start excluded).
    pub observations: ObservationSet,
    pub pending_x: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiveOutcome {
    Recommend(f64),
    TrialComplete,
}

impl LiveState {
    /// Step number of the pending dose.
    pub fn next_t(&self) -> usize {
        self.observations.len() + 1
    }

    pub fn is_complete(&self) -> bool {
        self.observations.len() >= self.config.budget
    }
}

pub fn live_begin(config: &ScenarioConfig, rng: &mut TrialRng) -> Result<(LiveState, f64), TrialError> {
    config.validate()?;
    let (x, _) = first_dose(config, rng)?;
    let state = LiveState {
        config: config.clone(),
        observations: ObservationSet::new(),
        pending_x: Some(x),
    };
    Ok((state, x))
}

/// Records the outcome for the pending dose. The state is untouched on error.
pub fn live_step(state: &mut LiveState, observed_y: f64) -> Result<LiveOutcome, TrialError> {
    let x = state.pending_x.ok_or(TrialError::NoPendingDose)?;
    if !observed_y.is_finite() {
        return Err(TrialError::NonFiniteOutcome(observed_y));
    }

    let mut observations = state.observations.clone();
    observations.push(x, observed_y)?;

    let outcome = if observations.len() >= state.config.budget {
        LiveOutcome::TrialComplete
    } else {
        let mut data = state.config.warm_observations();
        data.extend_from(&observations);
        LiveOutcome::Recommend(next_dose(&state.config, &data)?.argmax)
    };

    state.observations = observations;
    state.pending_x = match outcome {
        LiveOutcome::Recommend(x) => Some(x),
        LiveOutcome::TrialComplete => None,
    };
    Ok(outcome)
}
