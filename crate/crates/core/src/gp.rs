//! Exact Gaussian-process regression on a scalar input with an RBF kernel.
//!
//! The prior mean is fixed at zero and hyperparameters are never learned.
//! A fitted [`PosteriorModel`] stores the lower Cholesky factor of
//! `K + noise² I + jitter I` and the weight vector `α`, from which the
//! predictive mean, its derivative and the predictive standard deviation
//! are evaluated pointwise.

use thiserror::Error;

/// Added to the Gram diagonal before factorization.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("kernel hyperparameters invalid: {0}")]
    InvalidKernel(String),

    #[error("noise standard deviation must be finite and non-negative, got {0}")]
    InvalidNoise(f64),

    #[error("observation ({x}, {y}) is not finite")]
    NonFiniteObservation { x: f64, y: f64 },

    #[error("Gram matrix is not numerically positive definite (pivot {pivot} = {value:e})")]
    FactorizationFailure { pivot: usize, value: f64 },
}

/// RBF kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Length scale in input units (hours).
    pub length_scale: f64,
    /// Standard-deviation scale of the prior; `k(x, x) = signal_amplitude²`.
    pub signal_amplitude: f64,
}

impl KernelSpec {
    pub fn new(length_scale: f64, signal_amplitude: f64) -> Result<Self, GpError> {
        let spec = Self {
            length_scale,
            signal_amplitude,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(GpError::InvalidKernel(format!(
                "length_scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.signal_amplitude.is_finite() && self.signal_amplitude > 0.0) {
            return Err(GpError::InvalidKernel(format!(
                "signal_amplitude must be positive, got {}",
                self.signal_amplitude
            )));
        }
        Ok(())
    }

    /// Prior variance at any input.
    pub fn prior_variance(&self) -> f64 {
        self.signal_amplitude * self.signal_amplitude
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            length_scale: 2.0,
            signal_amplitude: 1.0,
        }
    }
}

/// Squared-exponential covariance `amp² · exp(−(a−b)² / 2ℓ²)`.
pub fn rbf_kernel(x1: f64, x2: f64, spec: &KernelSpec) -> f64 {
    let d = x1 - x2;
    spec.prior_variance() * (-(d * d) / (2.0 * spec.length_scale * spec.length_scale)).exp()
}

/// One trial observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
}

/// Observations in trial order; index `i` is step `i + 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationSet {
    points: Vec<Observation>,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self, GpError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut set = Self::new();
        for (x, y) in pairs {
            set.push(x, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: f64, y: f64) -> Result<(), GpError> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(GpError::NonFiniteObservation { x, y });
        }
        self.points.push(Observation { x, y });
        Ok(())
    }

    pub fn extend_from(&mut self, other: &ObservationSet) {
        self.points.extend_from_slice(&other.points);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Observation] {
        &self.points
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.x)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.y)
    }

    /// The first `len` observations.
    pub fn prefix(&self, len: usize) -> ObservationSet {
        ObservationSet {
            points: self.points[..len.min(self.points.len())].to_vec(),
        }
    }
}

/// Fitted GP posterior. Immutable once built.
#[derive(Debug, Clone)]
pub struct PosteriorModel {
    spec: KernelSpec,
    noise_std: f64,
    train_x: Vec<f64>,
    /// Row-major lower-triangular factor, `n × n`.
    factor: Vec<f64>,
    weights: Vec<f64>,
}

/// Condition the zero-mean GP prior on `data`.
pub fn fit_posterior(
    data: &ObservationSet,
    spec: &KernelSpec,
    noise_std: f64,
) -> Result<PosteriorModel, GpError> {
    spec.validate()?;
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(GpError::InvalidNoise(noise_std));
    }

    let train_x: Vec<f64> = data.xs().collect();
    let y: Vec<f64> = data.ys().collect();
    let n = train_x.len();

    let diag_extra = noise_std * noise_std + JITTER;
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = rbf_kernel(train_x[i], train_x[j], spec);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
        gram[i * n + i] += diag_extra;
    }

    let factor = cholesky(&gram, n)?;
    let z = forward_substitute(&factor, n, &y);
    let weights = backward_substitute_transposed(&factor, n, &z);

    Ok(PosteriorModel {
        spec: *spec,
        noise_std,
        train_x,
        factor,
        weights,
    })
}

impl PosteriorModel {
    /// The prior, i.e. a model fitted to no data.
    pub fn prior(spec: &KernelSpec, noise_std: f64) -> Result<Self, GpError> {
        fit_posterior(&ObservationSet::new(), spec, noise_std)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn train_x(&self) -> &[f64] {
        &self.train_x
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.train_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_x.is_empty()
    }

    /// Lower-triangular factor as rows, for inspection.
    pub fn factor_rows(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| self.factor[i * n..(i + 1) * n].to_vec())
            .collect()
    }

    fn cross_cov(&self, x: f64) -> Vec<f64> {
        self.train_x
            .iter()
            .map(|&xi| rbf_kernel(x, xi, &self.spec))
            .collect()
    }

    /// Predictive mean `k*(x)ᵀ α`.
    pub fn mean(&self, x: f64) -> f64 {
        self.train_x
            .iter()
            .zip(&self.weights)
            .map(|(&xi, &a)| a * rbf_kernel(x, xi, &self.spec))
            .sum()
    }

    /// Analytic derivative of the predictive mean with respect to `x`.
    pub fn mean_deriv(&self, x: f64) -> f64 {
        let inv_l2 = 1.0 / (self.spec.length_scale * self.spec.length_scale);
        self.train_x
            .iter()
            .zip(&self.weights)
            .map(|(&xi, &a)| a * (xi - x) * inv_l2 * rbf_kernel(x, xi, &self.spec))
            .sum()
    }

    /// Posterior variance of the latent function (observation noise excluded).
    pub fn variance(&self, x: f64) -> f64 {
        let prior = self.spec.prior_variance();
        if self.is_empty() {
            return prior;
        }
        let v = forward_substitute(&self.factor, self.len(), &self.cross_cov(x));
        let reduction: f64 = v.iter().map(|vi| vi * vi).sum();
        (prior - reduction).clamp(0.0, prior)
    }

    /// Predictive standard deviation of the latent function, in `[0, amplitude]`.
    pub fn std(&self, x: f64) -> f64 {
        if self.is_empty() {
            return self.spec.signal_amplitude;
        }
        self.variance(x).sqrt()
    }

    /// Alternative band width `sqrt(v − v²/(v + σ²))` with `v` the posterior
    /// variance. Only used for sensitivity reporting against [`Self::std`].
    pub fn std_diagonal_form(&self, x: f64) -> f64 {
        let v = self.variance(x);
        let denom = v + self.noise_std * self.noise_std;
        if denom <= 0.0 {
            return 0.0;
        }
        (v - v * v / denom).max(0.0).sqrt()
    }
}

pub fn posterior_mean(model: &PosteriorModel, x: f64) -> f64 {
    model.mean(x)
}

pub fn posterior_std(model: &PosteriorModel, x: f64) -> f64 {
    model.std(x)
}

pub fn posterior_mean_deriv(model: &PosteriorModel, x: f64) -> f64 {
    model.mean_deriv(x)
}

fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>, GpError> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum.is_finite() && sum > 0.0) {
                    return Err(GpError::FactorizationFailure {
                        pivot: i,
                        value: sum,
                    });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L z = b`.
fn forward_substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * z[k];
        }
        z[i] = sum / l[i * n + i];
    }
    z
}

/// Solves `Lᵀ w = z`.
fn backward_substitute_transposed(l: &[f64], n: usize, z: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = z[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * w[k];
        }
        w[i] = sum / l[i * n + i];
    }
    w
}
