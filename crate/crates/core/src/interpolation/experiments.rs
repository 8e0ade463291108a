//! Monte Carlo over realizations of the interpolated system: derivative
//! terms, gauge identities, the free-energy sum rule and magnetization
//! fluctuations. Sample `i` of a run is drawn from stream `i` of its seed.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use super::{perturbed_free_energy, InterpolationPath, PerturbedInstance, PerturbedStats};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::posterior::DEFAULT_K_MAX;
use crate::quadrature::GaussianIntegrator;
use crate::replica::expected_ln_cosh;
use crate::rng::{derive_seed, stream_rng};
use crate::spreading::SpreadingDistribution;
use crate::stats::RunningStats;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn of(stats: &RunningStats) -> Self {
        Estimate {
            mean: stats.mean(),
            se: stats.std_error(),
        }
    }

    fn collect(values: impl IntoIterator<Item = f64>) -> Self {
        Self::of(&values.into_iter().collect())
    }

    /// `g(mean)` with a first-order error propagated through `slope = g'`.
    fn map(self, value: f64, slope: f64) -> Self {
        Estimate {
            mean: value,
            se: slope.abs() * self.se,
        }
    }

    fn scale(self, c: f64) -> Self {
        Estimate {
            mean: c * self.mean,
            se: c.abs() * self.se,
        }
    }

    /// Difference of two independent estimates.
    pub fn minus(self, other: Estimate) -> Self {
        Estimate {
            mean: self.mean - other.mean,
            se: self.se.hypot(other.se),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermsOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub dist: SpreadingDistribution,
    /// Step of the central difference in `t`.
    pub delta: f64,
    pub k_max: usize,
}

impl TermsOptions {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        TermsOptions {
            n_samples,
            seed,
            dist: SpreadingDistribution::GaussianUnit,
            delta: 1e-3,
            k_max: DEFAULT_K_MAX,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::param("samples", "need at least 2 samples for a standard error"));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::param("delta", format!("must lie in (0, 0.5), got {}", self.delta)));
        }
        Ok(())
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in [0, 1], got {v}")))
    }
}

fn check_u(u: f64) -> Result<()> {
    if u >= 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::param("u", format!("must be finite and >= 0, got {u}")))
    }
}

fn instance(params: &SystemParams, u: f64, opts: &TermsOptions, seed: u64, i: u64) -> Result<PerturbedInstance> {
    let (k, n) = params.dims()?;
    let mut rng = stream_rng(seed, i);
    PerturbedInstance::sample(k, n, &opts.dist, u, &mut rng)
}

/// Runs `f` on every sample in parallel; results come back in sample order.
fn per_sample<T: Send>(
    params: &SystemParams,
    u: f64,
    opts: &TermsOptions,
    seed: u64,
    f: impl Fn(&PerturbedInstance) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..opts.n_samples as u64)
        .into_par_iter()
        .map(|i| f(&instance(params, u, opts, seed, i)?))
        .collect()
}

/// Monte Carlo estimates of `E f_{t,u}`, its `t`-derivative and the pieces
/// it splits into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermBreakdown {
    pub t: f64,
    pub u: f64,
    pub f: Estimate,
    /// Central difference of `f` on common random numbers. At `t = 0` and
    /// `t = 1` it is one-sided, and since single realizations behave like
    /// `√t` (resp. `√(1-t)`) there, its variance grows like `1/δ`.
    pub dfdt_fd: Estimate,
    /// Derivative through `λ(t)`, from the Gibbs averages directly.
    pub t1_raw: Estimate,
    /// Derivative through `B(t)`, from the Gibbs averages directly.
    pub t2_raw: Estimate,
    /// `B'/(2D²) E⟨1 - m1⟩`
    pub t1_reduced: Estimate,
    /// `-B' q / (2(1 + βB(t) q))` with `q = E⟨1 - m1⟩`
    pub t2_reduced: Estimate,
    /// Remainder `βB'B(t)(E⟨m1⟩ - m)² / (2D²(1 + βB(t) q))`, nonnegative.
    pub r: Estimate,
    /// Per-sample `dfdt_fd - t1_raw - t2_raw`.
    pub split_residual: Estimate,
    pub m1: Estimate,
    pub q12: Estimate,
    /// `(1/N) E⟨‖𝒵‖²⟩`
    pub zcal_norm: Estimate,
}

struct SampleTerms {
    f: f64,
    fd: f64,
    t1: f64,
    t2: f64,
    m1: f64,
    q12: f64,
    zcal_norm: f64,
}

/// Derivative pieces of one realization at time `t`.
fn raw_terms(stats: &PerturbedStats, path: &InterpolationPath, t: f64, users: usize, chips: usize) -> (f64, f64) {
    let (k, n) = (users as f64, chips as f64);
    let (b_t, lambda_t) = path.at(t);
    let (db, dl) = path.derivatives(t);
    let t1 = if lambda_t > 0.0 {
        -dl / (2.0 * lambda_t.sqrt() * k) * stats.w_dot_z - dl / (2.0 * k) * stats.z_dot_z
    } else {
        // Gaussian integration by parts in w removes the 1/√λ
        let mean_z2: f64 = stats.bit_means.iter().map(|x| (1.0 - x).powi(2)).sum();
        -dl / (2.0 * k) * mean_z2
    };
    let t2 = if b_t > 0.0 {
        -db / (2.0 * b_t.sqrt() * k * n.sqrt()) * stats.zcal_dot_sz
    } else {
        -db / (2.0 * n * k) * stats.mean_sz_norm2
    };
    (t1, t2)
}

struct Reduced {
    t1: Estimate,
    t2: Estimate,
    r: Estimate,
}

fn reduced_terms(q: Estimate, path: &InterpolationPath, t: f64) -> Reduced {
    let (b_t, _) = path.at(t);
    let (db, _) = path.derivatives(t);
    let d = path.denominator(t);
    let beta = path.beta;
    let qm = q.mean;
    let e = 1.0 + beta * b_t * qm;
    let c = beta * db * b_t / (2.0 * d * d);
    let gap = qm - (1.0 - path.m);
    Reduced {
        t1: q.scale(db / (2.0 * d * d)),
        t2: q.map(-db * qm / (2.0 * e), -db / (2.0 * e * e)),
        r: q.map(
            c * gap * gap / e,
            c * (2.0 * gap / e - gap * gap * beta * b_t / (e * e)),
        ),
    }
}

pub fn free_energy_terms(
    t: f64,
    u: f64,
    m: f64,
    params: &SystemParams,
    opts: &TermsOptions,
) -> Result<TermBreakdown> {
    check_unit("t", t)?;
    check_u(u)?;
    opts.validate()?;
    let (k, n) = params.dims()?;
    let path = InterpolationPath::new(m, params)?;
    let lo = (t - opts.delta).max(0.0);
    let hi = (t + opts.delta).min(1.0);

    let samples = per_sample(params, u, opts, opts.seed, |inst| {
        let stats = perturbed_free_energy(inst, t, &path, opts.k_max)?;
        let f_hi = perturbed_free_energy(inst, hi, &path, opts.k_max)?.free_energy;
        let f_lo = perturbed_free_energy(inst, lo, &path, opts.k_max)?.free_energy;
        let (t1, t2) = raw_terms(&stats, &path, t, k, n);
        Ok(SampleTerms {
            f: stats.free_energy,
            fd: (f_hi - f_lo) / (hi - lo),
            t1,
            t2,
            m1: stats.magnetization,
            q12: stats.overlap,
            zcal_norm: stats.zcal_norm2 / n as f64,
        })
    })?;

    let q = Estimate::collect(samples.iter().map(|s| 1.0 - s.m1));
    let reduced = reduced_terms(q, &path, t);
    Ok(TermBreakdown {
        t,
        u,
        f: Estimate::collect(samples.iter().map(|s| s.f)),
        dfdt_fd: Estimate::collect(samples.iter().map(|s| s.fd)),
        t1_raw: Estimate::collect(samples.iter().map(|s| s.t1)),
        t2_raw: Estimate::collect(samples.iter().map(|s| s.t2)),
        t1_reduced: reduced.t1,
        t2_reduced: reduced.t2,
        r: reduced.r,
        split_residual: Estimate::collect(samples.iter().map(|s| s.fd - s.t1 - s.t2)),
        m1: Estimate::collect(samples.iter().map(|s| s.m1)),
        q12: Estimate::collect(samples.iter().map(|s| s.q12)),
        zcal_norm: Estimate::collect(samples.iter().map(|s| s.zcal_norm)),
    })
}

/// Sample averages of three gauge identities, each of which has
/// expectation zero at any `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NishimoriReport {
    pub t: f64,
    pub u: f64,
    /// `⟨m1⟩ - ⟨q12⟩`
    pub res_mq: Estimate,
    /// `(1/N)⟨‖𝒵‖²⟩ - 1`
    pub res_x11: Estimate,
    /// Two-replica residual divided by `NK`.
    pub res_x12: Estimate,
}

pub fn nishimori_check(
    t: f64,
    u: f64,
    m: f64,
    params: &SystemParams,
    opts: &TermsOptions,
) -> Result<NishimoriReport> {
    check_unit("t", t)?;
    check_u(u)?;
    opts.validate()?;
    let (k, n) = params.dims()?;
    let path = InterpolationPath::new(m, params)?;
    let scale = 1.0 / (n * k) as f64;
    let samples = per_sample(params, u, opts, opts.seed, |inst| {
        let s = perturbed_free_energy(inst, t, &path, opts.k_max)?;
        Ok([
            s.magnetization - s.overlap,
            s.zcal_norm2 / n as f64 - 1.0,
            s.two_replica_residual() * scale,
        ])
    })?;
    let column = |c: usize| Estimate::collect(samples.iter().map(|s| s[c]));
    Ok(NishimoriReport {
        t,
        u,
        res_mq: column(0),
        res_x11: column(1),
        res_x12: column(2),
    })
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        let h = 0.5 * (grid[i] - grid[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

fn check_grid(grid: &[f64]) -> Result<()> {
    let ok = grid.len() >= 2
        && grid[0] == 0.0
        && grid[grid.len() - 1] == 1.0
        && grid.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::param("t-grid", "must increase strictly from 0 to 1 with at least two points"))
    }
}

/// Uniform grid of `points` times covering `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

/// Both sides of the free-energy sum rule at finite `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRuleReport {
    pub m: f64,
    pub u: f64,
    /// `½ + E f_{1,u}`
    pub lhs: Estimate,
    /// Explicit decoupled terms plus `∫R dt`.
    pub rhs: Estimate,
    pub residual: Estimate,
    /// `3·se + 2√u·√(2/π) + u`: sampling error plus the largest shift the
    /// side channel can cause in the free energy.
    pub budget: f64,
    pub remainder: Vec<(f64, Estimate)>,
}

pub fn sum_rule_check(
    m: f64,
    params: &SystemParams,
    u: f64,
    t_grid: &[f64],
    opts: &TermsOptions,
) -> Result<SumRuleReport> {
    check_u(u)?;
    check_grid(t_grid)?;
    opts.validate()?;
    let (k, _) = params.dims()?;
    let path = InterpolationPath::new(m, params)?;

    // E‖w‖²/(2K) = ½ exactly, and at t = 1 f depends on w only through
    // -‖w‖²/(2K); adding it back removes that variance
    let lhs_seed = derive_seed(opts.seed, u64::MAX);
    let lhs_samples = per_sample(params, u, opts, lhs_seed, |inst| {
        let f = perturbed_free_energy(inst, 1.0, &path, opts.k_max)?.free_energy;
        let w2: f64 = inst.w.iter().map(|v| v * v).sum();
        Ok(f + w2 / (2.0 * k as f64) - 0.5)
    })?;
    let lhs = Estimate::collect(lhs_samples.iter().map(|f| 0.5 + f));

    let mut remainder = Vec::with_capacity(t_grid.len());
    for (j, &t) in t_grid.iter().enumerate() {
        let seed = derive_seed(opts.seed, j as u64);
        let q = Estimate::collect(per_sample(params, u, opts, seed, |inst| {
            Ok(1.0 - perturbed_free_energy(inst, t, &path, opts.k_max)?.magnetization)
        })?);
        remainder.push((t, reduced_terms(q, &path, t).r));
    }
    let weights = trapezoid_weights(t_grid);
    let integral = Estimate {
        mean: weights.iter().zip(&remainder).map(|(w, (_, r))| w * r.mean).sum(),
        se: weights
            .iter()
            .zip(&remainder)
            .map(|(w, (_, r))| (w * r.se).powi(2))
            .sum::<f64>()
            .sqrt(),
    };

    let beta = path.beta;
    let lambda = path.lambda();
    let explicit = LN_2 + expected_ln_cosh(lambda, &GaussianIntegrator::default())
        - 0.5 / beta
        - (beta * path.snr * (1.0 - m)).ln_1p() / (2.0 * beta)
        - 0.5 * lambda * (1.0 + m);
    let rhs = Estimate {
        mean: explicit + integral.mean,
        se: integral.se,
    };
    let residual = lhs.minus(rhs);
    let budget = 3.0 * residual.se + 2.0 * u.sqrt() * (2.0 / PI).sqrt() + u;
    Ok(SumRuleReport {
        m,
        u,
        lhs,
        rhs,
        residual,
        budget,
        remainder,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetizationRow {
    pub users: usize,
    pub chips: usize,
    /// `∫dt E⟨|m1 - E⟨m1⟩|⟩` by the trapezoid rule.
    pub deviation: Estimate,
}

/// Integrated fluctuation of the magnetization for each user count at
/// the load and noise of `params`.
pub fn magnetization_concentration(
    t_grid: &[f64],
    u: f64,
    m: f64,
    params: &SystemParams,
    users: &[usize],
    opts: &TermsOptions,
) -> Result<Vec<MagnetizationRow>> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::param("u", format!("magnetization concentration needs u > 0, got {u}")));
    }
    check_grid(t_grid)?;
    opts.validate()?;
    let weights = trapezoid_weights(t_grid);
    users
        .iter()
        .map(|&k| {
            let sub = SystemParams::with_load(k, params.beta(), params.sigma2())?;
            let path = InterpolationPath::new(m, &sub)?;
            let mut mean = 0.0;
            let mut var = 0.0;
            for (j, &t) in t_grid.iter().enumerate() {
                let seed = derive_seed(opts.seed, (k as u64) << 32 | j as u64);
                let counts = per_sample(&sub, u, opts, seed, |inst| {
                    Ok(perturbed_free_energy(inst, t, &path, opts.k_max)?.error_count)
                })?;
                let m1 = |e: usize| 1.0 - 2.0 * e as f64 / k as f64;
                let center = counts
                    .iter()
                    .map(|c| c.iter().enumerate().map(|(e, p)| p * m1(e)).sum::<f64>())
                    .sum::<f64>()
                    / counts.len() as f64;
                let dev = Estimate::collect(counts.iter().map(|c| {
                    c.iter().enumerate().map(|(e, p)| p * (m1(e) - center).abs()).sum::<f64>()
                }));
                mean += weights[j] * dev.mean;
                var += (weights[j] * dev.se).powi(2);
            }
            Ok(MagnetizationRow {
                users: k,
                chips: sub.chips().unwrap_or(0),
                deviation: Estimate { mean, se: var.sqrt() },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spreading::Matrix;

    fn params(k: usize, n: usize, sigma2: f64) -> SystemParams {
        SystemParams::finite(k, n, sigma2).unwrap()
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = [0.0, 0.1, 0.5, 1.0];
        let w = trapezoid_weights(&g);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w.iter().zip(&g).map(|(w, t)| w * t).sum::<f64>() - 0.5).abs() < 1e-15);
        assert!(check_grid(&[0.0, 0.5]).is_err());
        assert_eq!(uniform_grid(3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn decoupled_endpoint_mean() {
        // ½ + E f_{0,0} = -1/(2β) - λ + ∫Dz ln 2cosh(√λ z + λ)
        let p = params(6, 6, 1.0);
        let m = 0.3;
        let opts = TermsOptions::new(4000, 1);
        let terms = free_energy_terms(0.0, 0.0, m, &p, &opts).unwrap();
        let lambda = InterpolationPath::new(m, &p).unwrap().lambda();
        let exact = -0.5 - lambda + LN_2 + expected_ln_cosh(lambda, &GaussianIntegrator::default());
        assert!((0.5 + terms.f.mean - exact).abs() < 3.0 * terms.f.se, "{:?} {exact}", terms.f);
    }

    #[test]
    fn split_and_integration_by_parts() {
        let p = params(6, 6, 1.0);
        let opts = TermsOptions::new(3000, 2);
        let b = free_energy_terms(0.5, 0.1, 0.4, &p, &opts).unwrap();
        let split = b.dfdt_fd.minus(Estimate {
            mean: b.t1_raw.mean + b.t2_raw.mean,
            se: b.t1_raw.se.hypot(b.t2_raw.se),
        });
        assert!(split.mean.abs() <= 3.0 * split.se, "{split:?}");
        assert!(b.split_residual.mean.abs() < 1e-5);
        let ibp = b.t1_raw.minus(b.t1_reduced);
        assert!(ibp.mean.abs() <= 3.0 * ibp.se, "{ibp:?}");
        assert!(b.r.mean >= 0.0);
    }

    #[test]
    fn endpoints_use_integrated_forms() {
        let p = params(5, 5, 0.8);
        let opts = TermsOptions::new(2000, 3);
        for t in [0.0, 1.0] {
            let b = free_energy_terms(t, 0.05, 0.5, &p, &opts).unwrap();
            assert!(b.t1_raw.mean.is_finite() && b.t2_raw.mean.is_finite());
            let d = b.dfdt_fd.minus(Estimate {
                mean: b.t1_raw.mean + b.t2_raw.mean,
                se: b.t1_raw.se.hypot(b.t2_raw.se),
            });
            // one-sided differences carry an O(δ) bias
            assert!(d.mean.abs() <= 3.0 * d.se + 5e-3, "t={t}: {d:?}");
        }
    }

    #[test]
    fn gauge_identities() {
        let p = params(6, 6, 1.0);
        let r = nishimori_check(0.7, 0.05, 0.4, &p, &TermsOptions::new(4000, 4)).unwrap();
        for e in [r.res_mq, r.res_x11, r.res_x12] {
            assert!(e.mean.abs() <= 3.0 * e.se, "{r:?}");
        }
    }

    #[test]
    fn uniform_posterior_without_signal() {
        let mut opts = TermsOptions::new(50, 5);
        opts.dist = SpreadingDistribution::Custom(
            crate::spreading::SymmetricTable::new(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
        );
        let p = params(4, 4, 1.0).with_snr(0.0).unwrap();
        let r = nishimori_check(0.0, 0.0, 0.5, &p, &opts).unwrap();
        assert_eq!(r.res_mq.mean, 0.0);
        // zero matrix: the measure is uniform and m1 = q12 = 0 exactly
        let inst = PerturbedInstance {
            spreading: Matrix::zeros(3, 3),
            n: vec![0.1, -0.2, 0.3],
            w: vec![0.0; 3],
            h: vec![0.0; 3],
            u: 0.0,
        };
        let path = InterpolationPath::new(0.5, &p).unwrap();
        let s = perturbed_free_energy(&inst, 0.0, &path, 24).unwrap();
        assert_eq!(s.magnetization, 0.0);
        assert_eq!(s.overlap, 0.0);
    }

    #[test]
    fn sum_rule_without_signal() {
        let p = params(5, 5, 1.0).with_snr(0.0).unwrap();
        let report = sum_rule_check(0.5, &p, 0.01, &uniform_grid(5), &TermsOptions::new(500, 6)).unwrap();
        assert!(report.residual.mean.abs() <= report.budget, "{report:?}");
        assert!(report.remainder.iter().all(|(_, r)| r.mean == 0.0));
    }

    #[test]
    fn magnetization_requires_field() {
        let p = params(4, 4, 1.0);
        let opts = TermsOptions::new(10, 7);
        assert!(magnetization_concentration(&uniform_grid(3), 0.0, 0.5, &p, &[4], &opts).is_err());
    }

    #[test]
    fn magnetization_fluctuation_without_signal_is_binomial() {
        // uniform posterior: E|m1| for K fair ±1 spins
        let p = params(6, 6, 1.0).with_snr(0.0).unwrap();
        let opts = TermsOptions::new(20, 8);
        let rows = magnetization_concentration(&uniform_grid(3), 1e-12, 0.5, &p, &[6], &opts);
        // with_load rebuilds params from σ², which is infinite here
        assert!(rows.is_err());
        let rows = magnetization_concentration(&uniform_grid(3), 1e-12, 0.5, &params(6, 6, 1e12), &[6], &opts).unwrap();
        let exact: f64 = (0..=6)
            .map(|e| {
                let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0][e];
                binom / 64.0 * (1.0 - 2.0 * e as f64 / 6.0).abs()
            })
            .sum();
        assert!((rows[0].deviation.mean - exact).abs() < 1e-4, "{:?} {exact}", rows[0]);
    }
}
