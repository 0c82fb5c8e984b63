//! Acquisition functions over a fitted posterior and exhaustive grid maximization.

use thiserror::Error;

use crate::gp::PosteriorModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcquisitionError {
    #[error("utility is not finite at x = {x} (value {value})")]
    NonFiniteUtility { x: f64, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("utility weights must be finite and non-negative, got ({lambda1}, {lambda2})")]
    InvalidWeights { lambda1: f64, lambda2: f64 },
}

/// Weights of the slope (`lambda1`) and exploration (`lambda2`) terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl UtilityWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self, AcquisitionError> {
        let w = Self { lambda1, lambda2 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ok(self.lambda1) && ok(self.lambda2) {
            Ok(())
        } else {
            Err(AcquisitionError::InvalidWeights {
                lambda1: self.lambda1,
                lambda2: self.lambda2,
            })
        }
    }
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            lambda1: 30.0,
            lambda2: 10.0,
        }
    }
}

/// Evenly spaced points `lo, lo + step, …, hi`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationGrid {
    lo: f64,
    hi: f64,
    step: f64,
    intervals: usize,
}

impl EvaluationGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, AcquisitionError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(AcquisitionError::InvalidGrid(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(AcquisitionError::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        let ratio = (hi - lo) / step;
        let intervals = ratio.round();
        if (ratio - intervals).abs() > 1e-9 * ratio.max(1.0) {
            return Err(AcquisitionError::InvalidGrid(format!(
                "step {step} does not divide [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            lo,
            hi,
            step,
            intervals: intervals as usize,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The `i`-th grid point; the last one is exactly `hi`.
    pub fn point(&self, i: usize) -> f64 {
        if i >= self.intervals {
            self.hi
        } else {
            self.lo + i as f64 * self.step
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Grid argmaxes of the three individual objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryTargets {
    /// argmax of the posterior mean.
    pub x_exploit: f64,
    /// argmax of the posterior mean's slope.
    pub x_slope: f64,
    /// argmax of the posterior standard deviation.
    pub x_explore: f64,
}

/// `μ(x) + λ₁ μ′(x) + λ₂ σ(x)`.
pub fn utility_u3(model: &PosteriorModel, x: f64, w: &UtilityWeights) -> f64 {
    model.mean(x) + w.lambda1 * model.mean_deriv(x) + w.lambda2 * model.std(x)
}

/// `μ(x) + λ₁ μ′(x)`: performance plus weighted marginal effect.
pub fn utility_u12(model: &PosteriorModel, x: f64, lambda1: f64) -> f64 {
    model.mean(x) + lambda1 * model.mean_deriv(x)
}

/// Exhaustive search; ties go to the smallest `x`.
pub fn argmax_on_grid<F>(f: F, grid: &EvaluationGrid) -> Result<(f64, f64), AcquisitionError>
where
    F: Fn(f64) -> f64,
{
    let mut best: Option<(f64, f64)> = None;
    for x in grid.points() {
        let value = f(x);
        if !value.is_finite() {
            return Err(AcquisitionError::NonFiniteUtility { x, value });
        }
        match best {
            Some((_, v)) if value <= v => {}
            _ => best = Some((x, value)),
        }
    }
    // A valid grid always has at least two points.
    Ok(best.expect("grid is non-empty"))
}

pub fn stationary_targets(
    model: &PosteriorModel,
    grid: &EvaluationGrid,
) -> Result<StationaryTargets, AcquisitionError> {
    Ok(StationaryTargets {
        x_exploit: argmax_on_grid(|x| model.mean(x), grid)?.0,
        x_slope: argmax_on_grid(|x| model.mean_deriv(x), grid)?.0,
        x_explore: argmax_on_grid(|x| model.std(x), grid)?.0,
    })
}
