//! Gaussian-input capacity: the random-matrix closed form and its replica
//! counterpart.

use nalgebra::{Cholesky, DMatrix};
use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::stats::RunningStats;

fn check(beta: f64, sigma2: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("must be finite and > 0, got {beta}")));
    }
    if !(sigma2 > 0.0) || sigma2.is_nan() {
        return Err(Error::param("sigma2", format!("must be > 0, got {sigma2}")));
    }
    Ok(())
}

/// `Q(x, z) = (√(x(1+√z)² + 1) - √(x(1-√z)² + 1))²`, evaluated through the
/// conjugate form to avoid cancellation.
fn q_function(x: f64, z: f64) -> f64 {
    let r = z.sqrt();
    let a = (x * (1.0 + r).powi(2) + 1.0).sqrt();
    let b = (x * (1.0 - r).powi(2) + 1.0).sqrt();
    (4.0 * x * r / (a + b)).powi(2)
}

/// Per-user capacity of the Gaussian-input channel with Gaussian spreading
/// in the large-system limit, in nats.
pub fn gaussian_closed_form(beta: f64, sigma2: f64) -> Result<f64> {
    check(beta, sigma2)?;
    let x = 1.0 / sigma2;
    if x == 0.0 {
        return Ok(0.0);
    }
    let q = q_function(x, beta);
    Ok(0.5 * (x - 0.25 * q).ln_1p() + (x * beta - 0.25 * q).ln_1p() / (2.0 * beta)
        - q / (8.0 * beta * x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSaddle {
    pub value: f64,
    pub m: f64,
    pub lambda: f64,
    pub iterations: usize,
}

const SADDLE_TOL: f64 = 1e-13;
const MAX_ITERATIONS: usize = 10_000;
const DAMPING: f64 = 0.5;

/// Replica expression for Gaussian inputs at the saddle `m = λ/(1+λ)`,
/// `λ = 1/(σ² + β(1-m))`, found by damped iteration.
pub fn gaussian_replica(beta: f64, sigma2: f64) -> Result<GaussianSaddle> {
    check(beta, sigma2)?;
    let b = 1.0 / sigma2;
    let lambda_of = |m: f64| b / (1.0 + beta * b * (1.0 - m));
    let mut m = 0.0;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let lambda = lambda_of(m);
        let next = (1.0 - DAMPING) * m + DAMPING * lambda / (1.0 + lambda);
        let done = (next - m).abs() < SADDLE_TOL;
        m = next;
        if done {
            break;
        }
    }
    let lambda = lambda_of(m);
    let value = 0.5 * lambda.ln_1p() + (beta * b * (1.0 - m)).ln_1p() / (2.0 * beta)
        - 0.5 * lambda * (1.0 - m);
    Ok(GaussianSaddle {
        value,
        m,
        lambda,
        iterations,
    })
}

/// Monte Carlo estimate of `(1/K)·½·ln det(I + σ⁻² SᵀS/N)` over Gaussian
/// `N × K` matrices; returns `(mean, standard error)` over `n_matrices`.
pub fn logdet_capacity_mc(
    users: usize,
    chips: usize,
    sigma2: f64,
    n_matrices: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if users == 0 || chips == 0 || n_matrices == 0 {
        return Err(Error::param("K", "users, chips and matrix count must be positive"));
    }
    check(users as f64 / chips as f64, sigma2)?;
    let samples: Vec<f64> = (0..n_matrices as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(seed, 2 * j);
            let s = DMatrix::<f64>::from_fn(chips, users, |_, _| rng.sample(StandardNormal));
            let mut a = s.tr_mul(&s) * (1.0 / (sigma2 * chips as f64));
            for i in 0..users {
                a[(i, i)] += 1.0;
            }
            let chol = Cholesky::new(a).expect("I + SᵀS/(Nσ²) is positive definite");
            let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            0.5 * log_det / users as f64
        })
        .collect();
    let stats: RunningStats = samples.into_iter().collect();
    Ok((stats.mean(), stats.std_error()))
}
