//! Replica-symmetric capacity functional for binary inputs, its
//! fixed-point equation and the resulting capacity upper bound.

mod extensions;
mod gaussian;

pub use extensions::{
    colored_noise_bound, unequal_power_bound, unequal_power_functional, NoiseSpectrum,
    PowerProfile,
};
pub use gaussian::{gaussian_closed_form, gaussian_replica, logdet_capacity_mc, GaussianSaddle};

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::quadrature::GaussianIntegrator;

/// Above this effective SNR the Gaussian averages use their saturated
/// values; the neglected terms are `O(e^{-λ/2})`.
pub const LAMBDA_ASYMPTOTIC: f64 = 1e4;

pub const DEFAULT_GRID: usize = 512;
pub const MIN_GRID: usize = 64;
const ROOT_TOL: f64 = 1e-12;

/// Which form of the binary functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Functional {
    /// Uses `ln cosh`; its minimum over `m` lies in `[0, ln 2]`.
    #[default]
    Corrected,
    /// Uses `ln 2cosh`, i.e. the corrected value minus `ln 2`.
    AsPrinted,
}

/// `ln cosh(a)` without overflow.
pub fn ln_cosh(a: f64) -> f64 {
    let a = a.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `∫Dz ln cosh(√λ z + λ)`.
pub fn expected_ln_cosh(lambda: f64, quad: &GaussianIntegrator) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else if lambda > LAMBDA_ASYMPTOTIC {
        lambda - LN_2
    } else {
        let s = lambda.sqrt();
        quad.expect_with_breaks(|z| ln_cosh(s * z + lambda), &[-s])
    }
}

/// `∫Dz tanh(√λ z + λ)`.
pub fn expected_tanh(lambda: f64, quad: &GaussianIntegrator) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else if lambda > LAMBDA_ASYMPTOTIC {
        1.0
    } else {
        let s = lambda.sqrt();
        quad.expect_with_breaks(|z| (s * z + lambda).tanh(), &[-s])
    }
}

/// Effective single-user SNR `1 / (σ² + β(1 - m))`.
pub fn lambda_of_m(m: f64, params: &SystemParams) -> f64 {
    // B/(1 + βB(1-m)) is the same quantity and stays finite as σ² → ∞
    let b = params.snr();
    b / (1.0 + params.beta() * b * (1.0 - m))
}

/// `c_rs(m)` in nats per user.
pub fn c_rs(m: f64, params: &SystemParams, quad: &GaussianIntegrator) -> f64 {
    c_rs_variant(m, params, quad, Functional::Corrected)
}

pub fn c_rs_variant(
    m: f64,
    params: &SystemParams,
    quad: &GaussianIntegrator,
    variant: Functional,
) -> f64 {
    let beta = params.beta();
    let lambda = lambda_of_m(m, params);
    // -(1/2β) ln(λσ²) written so that it is exact for small B
    let log_term = (beta * params.snr() * (1.0 - m)).ln_1p() / (2.0 * beta);
    let value = 0.5 * lambda * (1.0 + m) + log_term - expected_ln_cosh(lambda, quad);
    match variant {
        Functional::Corrected => value,
        Functional::AsPrinted => value - LN_2,
    }
}

/// `F(m) = ∫Dz tanh(√λ z + λ)` with `λ = λ(m)`; fixed points `F(m) = m` are
/// the stationary points of `c_rs`.
pub fn fixed_point_map(m: f64, params: &SystemParams, quad: &GaussianIntegrator) -> f64 {
    expected_tanh(lambda_of_m(m, params), quad)
}

/// `F'(m) = βλ² ∫Dz (1 - t²)(1 - t)` with `t = tanh(√λ z + λ)`.
pub fn fixed_point_slope(m: f64, params: &SystemParams, quad: &GaussianIntegrator) -> f64 {
    let lambda = lambda_of_m(m, params);
    if lambda <= 0.0 || lambda > LAMBDA_ASYMPTOTIC {
        return 0.0;
    }
    let s = lambda.sqrt();
    let e = quad.expect_with_breaks(
        |z| {
            let t = (s * z + lambda).tanh();
            (1.0 - t * t) * (1.0 - t)
        },
        &[-s],
    );
    params.beta() * lambda * lambda * e
}

/// A candidate order parameter together with its functional value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub m: f64,
    pub lambda: f64,
    pub c_rs: f64,
    /// `|F'(m)| < 1`
    pub stable: bool,
    /// `F(m) - m`
    pub residual: f64,
}

impl FixedPoint {
    fn at(m: f64, params: &SystemParams, quad: &GaussianIntegrator) -> Self {
        FixedPoint {
            m,
            lambda: lambda_of_m(m, params),
            c_rs: c_rs(m, params, quad),
            stable: fixed_point_slope(m, params, quad).abs() < 1.0,
            residual: fixed_point_map(m, params, quad) - m,
        }
    }
}

/// All solutions of `F(m) = m` in `[0, 1]` found as sign changes of
/// `F(m) - m` on a uniform grid, each refined by bisection. Sorted by `m`.
pub fn solve_fixed_points(
    params: &SystemParams,
    quad: &GaussianIntegrator,
    grid_size: usize,
) -> Result<Vec<FixedPoint>> {
    if grid_size < MIN_GRID {
        return Err(Error::param("grid", format!("must be at least {MIN_GRID}, got {grid_size}")));
    }
    let g = |m: f64| fixed_point_map(m, params, quad) - m;
    let grid: Vec<f64> = (0..=grid_size).map(|i| i as f64 / grid_size as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&m| g(m)).collect();

    let mut roots = Vec::new();
    for i in 0..=grid_size {
        if values[i] == 0.0 {
            roots.push(grid[i]);
        } else if i < grid_size && values[i] * values[i + 1] < 0.0 {
            roots.push(bisect(&g, grid[i], grid[i + 1], values[i]));
        }
    }
    Ok(roots.into_iter().map(|m| FixedPoint::at(m, params, quad)).collect())
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, g_lo: f64) -> f64 {
    let lo_positive = g_lo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v.abs() <= ROOT_TOL || hi - lo <= f64::EPSILON {
            return mid;
        }
        if (v > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The replica upper bound and everything needed to report it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSolution {
    /// `min c_rs` over the fixed points and the endpoints `m ∈ {0, 1}`.
    pub c_upper: f64,
    pub argmin: FixedPoint,
    pub fixed_points: Vec<FixedPoint>,
}

pub fn capacity_bound(params: &SystemParams, quad: &GaussianIntegrator) -> Result<ReplicaSolution> {
    capacity_bound_with_grid(params, quad, DEFAULT_GRID)
}

pub fn capacity_bound_with_grid(
    params: &SystemParams,
    quad: &GaussianIntegrator,
    grid_size: usize,
) -> Result<ReplicaSolution> {
    let fixed_points = solve_fixed_points(params, quad, grid_size)?;
    let mut candidates = fixed_points.clone();
    for m in [0.0, 1.0] {
        if !candidates.iter().any(|p| p.m == m) {
            candidates.push(FixedPoint::at(m, params, quad));
        }
    }
    candidates.sort_by(|a, b| a.m.total_cmp(&b.m));
    // strict comparison keeps the smallest m among ties
    let mut argmin = candidates[0];
    for c in &candidates[1..] {
        if c.c_rs < argmin.c_rs {
            argmin = *c;
        }
    }
    Ok(ReplicaSolution {
        c_upper: argmin.c_rs,
        argmin,
        fixed_points,
    })
}

/// One cell of a `(β, σ²)` scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell {
    pub beta: f64,
    pub sigma2: f64,
    pub root_count: usize,
    pub m_star: f64,
    pub lambda_star: f64,
    pub c_upper: f64,
}

/// Solves every cell of the grid `betas × sigma2s`, row-major in `betas`.
pub fn phase_scan(
    betas: &[f64],
    sigma2s: &[f64],
    quad: &GaussianIntegrator,
    grid_size: usize,
) -> Result<Vec<PhaseCell>> {
    if betas.is_empty() || sigma2s.is_empty() {
        return Err(Error::param("range", "phase scan needs at least one beta and one sigma2"));
    }
    let cells: Vec<(f64, f64)> = betas
        .iter()
        .flat_map(|&b| sigma2s.iter().map(move |&s| (b, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(beta, sigma2)| {
            let params = SystemParams::asymptotic(beta, sigma2)?;
            let sol = capacity_bound_with_grid(&params, quad, grid_size)?;
            Ok(PhaseCell {
                beta,
                sigma2,
                root_count: sol.fixed_points.len(),
                m_star: sol.argmin.m,
                lambda_star: sol.argmin.lambda,
                c_upper: sol.c_upper,
            })
        })
        .collect()
}

/// For each `σ²` column of a scan, the largest scanned `β` below which the
/// fixed point is unique (`None` if it is never unique, or always unique).
pub fn uniqueness_boundary(cells: &[PhaseCell]) -> Vec<(f64, Option<f64>)> {
    let mut sigma2s: Vec<f64> = cells.iter().map(|c| c.sigma2).collect();
    sigma2s.sort_by(f64::total_cmp);
    sigma2s.dedup();
    sigma2s
        .into_iter()
        .map(|s| {
            let mut column: Vec<&PhaseCell> = cells.iter().filter(|c| c.sigma2 == s).collect();
            column.sort_by(|a, b| a.beta.total_cmp(&b.beta));
            let first_multiple = column.iter().position(|c| c.root_count > 1);
            let beta_s = match first_multiple {
                Some(i) if i > 0 => Some(column[i - 1].beta),
                _ => None,
            };
            (s, beta_s)
        })
        .collect()
}
