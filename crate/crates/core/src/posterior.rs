//! Exact posterior of the binary CDMA channel by enumeration of all `2^K`
//! inputs.
//!
//! Inputs are visited in reflected Gray-code order, so consecutive
//! configurations differ in one bit and the residual `y - N^{-1/2} S x`
//! is updated in `O(N)`. The residual is recomputed from scratch every
//! [`RESYNC_PERIOD`] steps to bound round-off drift.

use std::f64::consts::LN_2;

use crate::channel::Instance;
use crate::error::{Error, Result};
use crate::lse::ShiftedSums;
use crate::params::SystemParams;

pub const DEFAULT_K_MAX: usize = 24;

/// Below this noise variance the posterior is the indicator of the inputs
/// that reproduce the noiseless signal.
pub const SIGMA2_FLOOR: f64 = 1e-12;

pub(crate) const RESYNC_PERIOD: u64 = 1 << 12;

/// Squared distance below which two noiseless signals are identified.
const EXACT_MATCH_TOLERANCE: f64 = 1e-18;

/// Exact quantities of one posterior. All logarithms are natural.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorStats {
    pub log_z: f64,
    /// `log_z / K`
    pub free_energy: f64,
    /// Posterior means `⟨x_k⟩`.
    pub bit_means: Vec<f64>,
    /// `(1/K) Σ x0_k ⟨x_k⟩`
    pub magnetization: f64,
    /// `(1/K) Σ ⟨x_k⟩²`
    pub overlap: f64,
    /// Fraction of MAP bit decisions `sign⟨x_k⟩` that differ from `x0`;
    /// undecided bits (`⟨x_k⟩ = 0`) count one half.
    pub ber: f64,
}

impl PosteriorStats {
    pub(crate) fn from_parts(log_z: f64, bit_means: Vec<f64>, input: &[f64]) -> Self {
        let k = bit_means.len() as f64;
        let magnetization = input.iter().zip(&bit_means).map(|(x, m)| x * m).sum::<f64>() / k;
        let overlap = bit_means.iter().map(|m| m * m).sum::<f64>() / k;
        let agreement = input
            .iter()
            .zip(&bit_means)
            .map(|(x, m)| x * sign(*m))
            .sum::<f64>()
            / k;
        PosteriorStats {
            log_z,
            free_energy: log_z / k,
            bit_means,
            magnetization,
            overlap,
            ber: 0.5 * (1.0 - agreement),
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Refuses systems too large to enumerate, quoting the cost.
pub fn check_enumerable(users: usize, chips: usize, limit: usize) -> Result<()> {
    if users > limit || users >= 63 {
        let configurations = 2f64.powi(users as i32);
        return Err(Error::EnumerationRefused {
            k: users,
            limit,
            configurations,
            flops: configurations * (3 * chips + 2 * users) as f64,
        });
    }
    Ok(())
}

/// Exact posterior statistics with the default limit `K ≤ 24`.
pub fn enumerate_posterior(inst: &Instance, sigma2: f64) -> Result<PosteriorStats> {
    enumerate_posterior_limited(inst, sigma2, DEFAULT_K_MAX)
}

pub fn enumerate_posterior_limited(
    inst: &Instance,
    sigma2: f64,
    limit: usize,
) -> Result<PosteriorStats> {
    let (k, n) = (inst.users(), inst.chips());
    check_enumerable(k, n, limit)?;
    if !(sigma2 >= 0.0) || sigma2.is_infinite() {
        return Err(Error::param("sigma2", format!("must be finite and >= 0, got {sigma2}")));
    }
    if sigma2 < SIGMA2_FLOOR {
        return Ok(noiseless_posterior(inst));
    }

    let scale = 1.0 / (n as f64).sqrt();
    let s = &inst.spreading;
    let inv_two_sigma2 = 0.5 / sigma2;

    let mut x = vec![1.0; k];
    let mut residual = residual_for(inst, &x);
    let mut acc = ShiftedSums::new(1 + k);
    let total = 1u64 << k;

    let mut rr: f64 = residual.iter().map(|r| r * r).sum();
    for step in 0..total {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            let old = x[j];
            x[j] = -old;
            if step % RESYNC_PERIOD == 0 {
                residual = residual_for(inst, &x);
                rr = residual.iter().map(|r| r * r).sum();
            } else {
                let c = 2.0 * old * scale;
                rr = 0.0;
                for (r, sv) in residual.iter_mut().zip(s.col(j)) {
                    *r += c * sv;
                    rr += *r * *r;
                }
            }
        }
        let w = acc.weight(-rr * inv_two_sigma2);
        acc.sums[0] += w;
        for (a, xv) in acc.sums[1..].iter_mut().zip(&x) {
            *a += w * xv;
        }
    }

    let log_z = acc.log_total() - k as f64 * LN_2;
    let z = acc.sums[0];
    let bit_means = acc.sums[1..].iter().map(|a| (a / z).clamp(-1.0, 1.0)).collect();
    Ok(PosteriorStats::from_parts(log_z, bit_means, &inst.input))
}

fn residual_for(inst: &Instance, x: &[f64]) -> Vec<f64> {
    let scale = 1.0 / (inst.chips() as f64).sqrt();
    let sx = inst.spreading.mul_vec(x);
    inst.received
        .iter()
        .zip(&sx)
        .map(|(y, v)| y - scale * v)
        .collect()
}

/// `σ² → 0`: uniform posterior over the inputs whose noiseless signal
/// equals that of `x0`. Every such input has residual `σ n`, so its
/// unnormalized weight is `exp(-‖n‖²/2)`.
fn noiseless_posterior(inst: &Instance) -> PosteriorStats {
    let (k, n) = (inst.users(), inst.chips());
    let scale = 1.0 / (n as f64).sqrt();
    let s = &inst.spreading;
    // d = N^{-1/2} S (x0 - x), starting from x = x0
    let mut x = inst.input.clone();
    let mut d = vec![0.0; n];
    let mut matches = 0u64;
    let mut sums = vec![0.0; k];
    for step in 0..(1u64 << k) {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            let old = x[j];
            x[j] = -old;
            for (dv, sv) in d.iter_mut().zip(s.col(j)) {
                *dv += 2.0 * old * scale * sv;
            }
        }
        if d.iter().map(|v| v * v).sum::<f64>() <= EXACT_MATCH_TOLERANCE {
            matches += 1;
            for (a, xv) in sums.iter_mut().zip(&x) {
                *a += xv;
            }
        }
    }
    let nn: f64 = inst.noise.iter().map(|v| v * v).sum();
    let log_z = -0.5 * nn + (matches as f64).ln() - k as f64 * LN_2;
    let bit_means = sums.iter().map(|a| a / matches as f64).collect();
    PosteriorStats::from_parts(log_z, bit_means, &inst.input)
}

/// Per-user mutual information of one sample, `-1/(2β) - f`, in nats.
/// Its average over noise and inputs is `I(X;Y)/K`.
pub fn mutual_info_sample(stats: &PosteriorStats, params: &SystemParams) -> f64 {
    -0.5 / params.beta() - stats.free_energy
}

/// Spins `x_k` of configuration `gray(step)`.
#[cfg(test)]
pub(crate) fn gray_config(step: u64, k: usize) -> Vec<f64> {
    let g = crate::lse::gray(step);
    (0..k)
        .map(|j| if g >> j & 1 == 1 { -1.0 } else { 1.0 })
        .collect()
}
