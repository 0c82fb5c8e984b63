//! Test-only oracles, independent of the library's factorization path.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adaptive_dose::gp::{fit_posterior, KernelSpec, ObservationSet, PosteriorModel};

pub fn sq_exp(a: f64, b: f64, spec: &KernelSpec) -> f64 {
    let amp2 = spec.signal_amplitude * spec.signal_amplitude;
    amp2 * (-0.5 * ((a - b) / spec.length_scale).powi(2)).exp()
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (v, p) in m[row].iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Brute-force GP predictive mean and std via an explicit inverse of K + σ²I.
pub struct DenseGp {
    xs: Vec<f64>,
    ys: Vec<f64>,
    inv: Vec<Vec<f64>>,
    spec: KernelSpec,
}

impl DenseGp {
    pub fn new(data: &[(f64, f64)], spec: KernelSpec, noise: f64, jitter: f64) -> Self {
        let xs: Vec<f64> = data.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = data.iter().map(|p| p.1).collect();
        let k: Vec<Vec<f64>> = xs
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                xs.iter()
                    .enumerate()
                    .map(|(j, &b)| sq_exp(a, b, &spec) + if i == j { noise * noise + jitter } else { 0.0 })
                    .collect()
            })
            .collect();
        Self {
            inv: dense_inverse(&k),
            xs,
            ys,
            spec,
        }
    }

    fn kstar(&self, x: f64) -> Vec<f64> {
        self.xs.iter().map(|&xi| sq_exp(x, xi, &self.spec)).collect()
    }

    pub fn mean(&self, x: f64) -> f64 {
        let ks = self.kstar(x);
        let n = self.xs.len();
        (0..n)
            .map(|i| (0..n).map(|j| ks[i] * self.inv[i][j] * self.ys[j]).sum::<f64>())
            .sum()
    }

    pub fn std(&self, x: f64) -> f64 {
        let ks = self.kstar(x);
        let n = self.xs.len();
        let quad: f64 = (0..n)
            .map(|i| (0..n).map(|j| ks[i] * self.inv[i][j] * ks[j]).sum::<f64>())
            .sum();
        (sq_exp(x, x, &self.spec) - quad).max(0.0).sqrt()
    }
}

pub fn random_data(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| (rng.gen_range(lo..hi), rng.gen_range(0.5..2.5)))
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fit(data: &[(f64, f64)], spec: KernelSpec, noise: f64) -> PosteriorModel {
    fit_posterior(&ObservationSet::from_pairs(data.iter().copied()).unwrap(), &spec, noise).unwrap()
}

/// Logistic curve written out independently of the library.
pub fn logistic(m: f64, b: f64, x: f64) -> f64 {
    1.0 / (1.0 + (m - x).exp()) + b
}

/// Grid argmax of θ + λ₁θ′ with θ′ from a central difference of θ.
pub fn brute_force_optimum(m: f64, b: f64, lambda1: f64, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    let h = 1e-5;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = lo + i as f64 * step;
        let d = (logistic(m, b, x + h) - logistic(m, b, x - h)) / (2.0 * h);
        let v = logistic(m, b, x) + lambda1 * d;
        if v > best.1 {
            best = (x, v);
        }
    }
    best.0
}

pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
