//! The interpolating system between the CDMA channel (`t = 1`) and `K`
//! decoupled Gaussian channels of SNR `λ` (`t = 0`), with a small Gaussian
//! side channel of SNR `u` on every bit.
//!
//! The transmitted word is fixed to all ones. Writing `z = 1 - x`, the
//! log-weight of configuration `x` is
//!
//! ```text
//! -½‖n + √(B(t)/N) S z‖² - ½‖w + √λ(t) z‖² + √u h·x + u Σx - √u Σ|h|
//! ```
//!
//! with no prior factor.

mod experiments;

pub use experiments::{
    free_energy_terms, magnetization_concentration, nishimori_check, sum_rule_check, Estimate,
    uniform_grid, MagnetizationRow, NishimoriReport, SumRuleReport, TermBreakdown, TermsOptions,
};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lse::ShiftedSums;
use crate::params::SystemParams;
use crate::posterior::{check_enumerable, RESYNC_PERIOD};
use crate::spreading::{dot, Matrix, SpreadingDistribution};

/// Linear path `B(t) = tB`, with `λ(t)` chosen so that
/// `B(t)/(1 + βB(t)(1-m)) + λ(t)` stays equal to `λ(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationPath {
    pub m: f64,
    pub snr: f64,
    pub beta: f64,
}

impl InterpolationPath {
    pub fn new(m: f64, params: &SystemParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::param("m", format!("must lie in [0, 1], got {m}")));
        }
        Ok(InterpolationPath {
            m,
            snr: params.snr(),
            beta: params.beta(),
        })
    }

    fn effective(&self, b: f64) -> f64 {
        b / (1.0 + self.beta * b * (1.0 - self.m))
    }

    /// `λ(0)`, the SNR of the decoupled channels.
    pub fn lambda(&self) -> f64 {
        self.effective(self.snr)
    }

    /// `(B(t), λ(t))`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let b_t = t * self.snr;
        let lambda_t = if t == 1.0 { 0.0 } else { (self.lambda() - self.effective(b_t)).max(0.0) };
        (b_t, lambda_t)
    }

    /// `(B'(t), λ'(t))`.
    pub fn derivatives(&self, t: f64) -> (f64, f64) {
        let d = 1.0 + self.beta * t * self.snr * (1.0 - self.m);
        (self.snr, -self.snr / (d * d))
    }

    /// `1 + βB(t)(1-m)`
    pub fn denominator(&self, t: f64) -> f64 {
        1.0 + self.beta * t * self.snr * (1.0 - self.m)
    }
}

pub fn path_eval(t: f64, m: f64, params: &SystemParams) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param("t", format!("must lie in [0, 1], got {t}")));
    }
    Ok(InterpolationPath::new(m, params)?.at(t))
}

/// Randomness of one interpolated channel use: spreading matrix, channel
/// noise `n`, decoupled-channel noise `w` and side-channel noise `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedInstance {
    pub spreading: Matrix,
    pub n: Vec<f64>,
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    pub u: f64,
}

impl PerturbedInstance {
    pub fn sample<R: Rng + ?Sized>(
        users: usize,
        chips: usize,
        dist: &SpreadingDistribution,
        u: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::param("u", format!("must be finite and >= 0, got {u}")));
        }
        let spreading = dist.fill(users, chips, rng);
        let mut normals = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.sample(StandardNormal)).collect() };
        let n = normals(chips);
        let w = normals(users);
        let h = normals(users);
        Ok(PerturbedInstance { spreading, n, w, h, u })
    }

    pub fn users(&self) -> usize {
        self.spreading.cols()
    }

    pub fn chips(&self) -> usize {
        self.spreading.rows()
    }
}

/// Exact Gibbs averages of one interpolated system. Brackets `⟨·⟩` below
/// are posterior means; `𝒵 = n + √(B(t)/N) S z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedStats {
    pub log_z: f64,
    /// `log_z / K`
    pub free_energy: f64,
    pub bit_means: Vec<f64>,
    /// `(1/K) Σ⟨x_k⟩`
    pub magnetization: f64,
    /// `(1/K) Σ⟨x_k⟩²`
    pub overlap: f64,
    /// `⟨w·z⟩`
    pub w_dot_z: f64,
    /// `⟨z·z⟩`
    pub z_dot_z: f64,
    /// `⟨𝒵·Sz⟩`
    pub zcal_dot_sz: f64,
    /// `⟨‖𝒵‖²⟩`
    pub zcal_norm2: f64,
    /// `⟨(n·𝒵) z_k⟩` for each user.
    pub n_zcal_z: Vec<f64>,
    /// `‖S⟨z⟩‖²`
    pub mean_sz_norm2: f64,
    /// Posterior probability that exactly `j` bits are wrong, `j = 0..=K`.
    pub error_count: Vec<f64>,
}

impl PerturbedStats {
    /// `Σ_k ⟨z_k⟩⟨(n·𝒵) z_k⟩ - Σ_k ⟨(n·𝒵) z_k⟩`: the two-replica identity
    /// for one realization, whose expectation vanishes.
    pub fn two_replica_residual(&self) -> f64 {
        self.bit_means
            .iter()
            .zip(&self.n_zcal_z)
            .map(|(x, v)| (1.0 - x) * v - v)
            .sum()
    }
}

const FIXED_SLOTS: usize = 6;

/// Enumerates all `2^K` configurations of the interpolated system at time
/// `t` on `path`.
pub fn perturbed_free_energy(
    inst: &PerturbedInstance,
    t: f64,
    path: &InterpolationPath,
    k_max: usize,
) -> Result<PerturbedStats> {
    let (k, n) = (inst.users(), inst.chips());
    check_enumerable(k, n, k_max)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param("t", format!("must lie in [0, 1], got {t}")));
    }
    let (b_t, lambda_t) = path.at(t);
    let b = (b_t / n as f64).sqrt();
    let a = lambda_t.sqrt();
    let root_u = inst.u.sqrt();
    let s = &inst.spreading;

    // configuration-independent part of the exponent: -½‖w‖² - √u Σ|h|
    let w_norm2 = dot(&inst.w, &inst.w);
    let offset = -0.5 * w_norm2 - root_u * inst.h.iter().map(|v| v.abs()).sum::<f64>();

    // slots: Z, ⟨w·z⟩, ⟨z·z⟩, ⟨𝒵·Sz⟩, ⟨‖𝒵‖²⟩, ⟨n·𝒵⟩ | ⟨x_k⟩ | ⟨(n·𝒵)z_k⟩ | counts
    let mut acc = ShiftedSums::new(FIXED_SLOTS + 2 * k + k + 1);
    let mut x = vec![1.0; k];
    let mut sz = vec![0.0; n];
    let mut zcal = inst.n.clone();
    let mut w_dot_z = 0.0;
    let mut flipped = 0usize;
    // √u h·x + u Σx at the current configuration
    let mut field = root_u * inst.h.iter().sum::<f64>() + inst.u * k as f64;

    for step in 0..(1u64 << k) {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            let old = x[j];
            x[j] = -old;
            // z_j goes 0 → 2 when x_j goes +1 → -1
            let dz = old - x[j];
            w_dot_z += dz * inst.w[j];
            field -= old * 2.0 * (root_u * inst.h[j] + inst.u);
            if old > 0.0 {
                flipped += 1;
            } else {
                flipped -= 1;
            }
            if step % RESYNC_PERIOD == 0 {
                let z: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
                sz = s.mul_vec(&z);
            } else {
                for (v, sv) in sz.iter_mut().zip(s.col(j)) {
                    *v += dz * sv;
                }
            }
            for ((zc, nv), v) in zcal.iter_mut().zip(&inst.n).zip(&sz) {
                *zc = nv + b * v;
            }
        }
        let z_dot_z = 4.0 * flipped as f64;
        let zcal_norm2 = dot(&zcal, &zcal);
        let n_dot_zcal = dot(&inst.n, &zcal);
        let zcal_dot_sz = dot(&zcal, &sz);
        let log_w = -0.5 * zcal_norm2 - a * w_dot_z - 0.5 * lambda_t * z_dot_z + field;
        let wgt = acc.weight(log_w);

        let sums = &mut acc.sums;
        sums[0] += wgt;
        sums[1] += wgt * w_dot_z;
        sums[2] += wgt * z_dot_z;
        sums[3] += wgt * zcal_dot_sz;
        sums[4] += wgt * zcal_norm2;
        sums[5] += wgt * n_dot_zcal;
        let (bits, rest) = sums[FIXED_SLOTS..].split_at_mut(k);
        let (nz, counts) = rest.split_at_mut(k);
        let weighted_nz = wgt * n_dot_zcal;
        for j in 0..k {
            bits[j] += wgt * x[j];
            if x[j] < 0.0 {
                nz[j] += 2.0 * weighted_nz;
            }
        }
        counts[flipped] += wgt;
    }

    let z = acc.sums[0];
    let mean = |i: usize| acc.sums[i] / z;
    let log_z = acc.log_total() + offset;
    let bit_means: Vec<f64> = (0..k).map(|j| mean(FIXED_SLOTS + j).clamp(-1.0, 1.0)).collect();
    let n_zcal_z: Vec<f64> = (0..k).map(|j| mean(FIXED_SLOTS + k + j)).collect();
    let error_count: Vec<f64> = (0..=k).map(|j| mean(FIXED_SLOTS + 2 * k + j)).collect();
    let mean_z: Vec<f64> = bit_means.iter().map(|m| 1.0 - m).collect();
    let mean_sz = s.mul_vec(&mean_z);
    let kf = k as f64;
    Ok(PerturbedStats {
        log_z,
        free_energy: log_z / kf,
        magnetization: bit_means.iter().sum::<f64>() / kf,
        overlap: bit_means.iter().map(|m| m * m).sum::<f64>() / kf,
        bit_means,
        w_dot_z: mean(1),
        z_dot_z: mean(2),
        zcal_dot_sz: mean(3),
        zcal_norm2: mean(4),
        n_zcal_z,
        mean_sz_norm2: dot(&mean_sz, &mean_sz),
        error_count,
    })
}
