//! Monte Carlo estimates of the finite-size capacity and the experiments
//! built on them.
//!
//! Matrix `j` of a run is drawn from stream `2j` of the run seed and its
//! noise (and inputs, if sampled) from stream `2j + 1`. Matrices are
//! processed in parallel and reduced in index order, so every result is
//! independent of the worker count.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::channel_output_rng;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::posterior::{check_enumerable, enumerate_posterior_limited, mutual_info_sample, DEFAULT_K_MAX};
use crate::rng::{derive_seed, stream_rng};
use crate::spreading::SpreadingDistribution;
use crate::stats::RunningStats;

/// How the transmitted word is chosen for each channel use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputMode {
    /// `x0 = (1, ..., 1)`; equivalent in law to uniform inputs because the
    /// spreading law is symmetric.
    #[default]
    AllOnes,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub dist: SpreadingDistribution,
    pub n_matrices: usize,
    pub n_noise: usize,
    pub seed: u64,
    /// Deviation thresholds for the tail frequencies, in nats.
    pub epsilons: Vec<f64>,
    pub k_max: usize,
    pub input_mode: InputMode,
}

impl ExperimentConfig {
    pub fn new(params: SystemParams, n_matrices: usize, n_noise: usize, seed: u64) -> Self {
        ExperimentConfig {
            params,
            dist: SpreadingDistribution::GaussianUnit,
            n_matrices,
            n_noise,
            seed,
            epsilons: vec![0.05, 0.1],
            k_max: DEFAULT_K_MAX,
            input_mode: InputMode::AllOnes,
        }
    }

    pub fn with_dist(mut self, dist: SpreadingDistribution) -> Self {
        self.dist = dist;
        self
    }

    fn validate(&self) -> Result<(usize, usize)> {
        if self.n_matrices == 0 {
            return Err(Error::param("matrices", "must be at least 1"));
        }
        if self.n_noise == 0 {
            return Err(Error::param("noise-draws", "must be at least 1"));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::param("epsilon", format!("must be finite and > 0, got {e}")));
        }
        let (k, n) = self.params.dims()?;
        if !(self.params.sigma2().is_finite()) {
            return Err(Error::param("sigma2", "finite systems need a finite noise variance"));
        }
        check_enumerable(k, n, self.k_max)?;
        Ok((k, n))
    }

    /// Same experiment at another user count, `N = round(K/β)`.
    fn at_users(&self, users: usize) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.params = SystemParams::with_load(users, self.params.beta(), self.params.sigma2())?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub params: SystemParams,
    /// Per-user mutual information in nats; the standard error is taken
    /// over matrix means.
    pub capacity_mean: f64,
    pub capacity_se: f64,
    /// Per-matrix mean of the mutual-information samples.
    pub matrix_means: Vec<f64>,
    /// Free energy of every channel use, matrix-major.
    pub free_energies: Vec<f64>,
    pub ber_mean: f64,
    pub ber_se: f64,
}

struct MatrixOutcome {
    mi: RunningStats,
    ber: RunningStats,
    free_energies: Vec<f64>,
}

fn run_matrix(cfg: &ExperimentConfig, users: usize, chips: usize, j: u64) -> Result<MatrixOutcome> {
    let mut matrix_rng = stream_rng(cfg.seed, 2 * j);
    let spreading = cfg.dist.fill(users, chips, &mut matrix_rng);
    let mut rng = stream_rng(cfg.seed, 2 * j + 1);
    let sigma2 = cfg.params.sigma2();
    let mut out = MatrixOutcome {
        mi: RunningStats::new(),
        ber: RunningStats::new(),
        free_energies: Vec::with_capacity(cfg.n_noise),
    };
    for _ in 0..cfg.n_noise {
        let input = match cfg.input_mode {
            InputMode::AllOnes => vec![1.0; users],
            InputMode::Uniform => (0..users)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect(),
        };
        let inst = channel_output_rng(spreading.clone(), input, sigma2, &mut rng)?;
        let stats = enumerate_posterior_limited(&inst, sigma2, cfg.k_max)?;
        let noise_energy: f64 = inst.noise.iter().map(|v| v * v).sum();
        out.mi.push(mutual_info_sample(&stats, &cfg.params) - (noise_energy - chips as f64) / (2.0 * users as f64));
        out.ber.push(stats.ber);
        out.free_energies.push(stats.free_energy);
    }
    Ok(out)
}

/// Averages the per-user mutual-information sample over `n_matrices`
/// spreading matrices and `n_noise` channel uses per matrix.
///
/// Each sample is corrected by `-(‖n‖² - N)/(2K)`, which has mean zero for
/// every matrix. It cancels the part of the free energy that only measures
/// the noise energy, so the estimator is far less noisy at every SNR.
pub fn estimate_capacity(cfg: &ExperimentConfig) -> Result<EstimateRecord> {
    let (users, chips) = cfg.validate()?;
    let outcomes: Vec<MatrixOutcome> = (0..cfg.n_matrices as u64)
        .into_par_iter()
        .map(|j| run_matrix(cfg, users, chips, j))
        .collect::<Result<_>>()?;

    let mut capacity = RunningStats::new();
    let mut ber = RunningStats::new();
    let mut matrix_means = Vec::with_capacity(outcomes.len());
    let mut free_energies = Vec::with_capacity(cfg.n_matrices * cfg.n_noise);
    for o in outcomes {
        capacity.push(o.mi.mean());
        ber.push(o.ber.mean());
        matrix_means.push(o.mi.mean());
        free_energies.extend(o.free_energies);
    }
    Ok(EstimateRecord {
        params: cfg.params,
        capacity_mean: capacity.mean(),
        capacity_se: capacity.std_error(),
        matrix_means,
        free_energies,
        ber_mean: ber.mean(),
        ber_se: ber.std_error(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationRow {
    pub users: usize,
    pub chips: usize,
    pub epsilon: f64,
    /// Variance across matrices of the per-matrix mean mutual information.
    pub var_mi: f64,
    /// Variance across all channel uses of the free energy.
    pub var_f: f64,
    /// Fraction of matrices whose mean deviates from the grand mean by at
    /// least `epsilon`.
    pub tail_freq_mi: f64,
    pub tail_freq_f: f64,
}

fn tail_frequency(values: &[f64], epsilon: f64) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().filter(|v| (*v - mean).abs() >= epsilon).count() as f64 / values.len() as f64
}

/// Fluctuations of the mutual information and free energy for each user
/// count; one row per `(K, ε)`.
pub fn concentration_experiment(cfg: &ExperimentConfig, users: &[usize]) -> Result<Vec<ConcentrationRow>> {
    let mut rows = Vec::new();
    for &k in users {
        let mut sub = cfg.at_users(k)?;
        sub.seed = derive_seed(cfg.seed, k as u64);
        let rec = estimate_capacity(&sub)?;
        let var_mi: RunningStats = rec.matrix_means.iter().copied().collect();
        let var_f: RunningStats = rec.free_energies.iter().copied().collect();
        for &epsilon in &cfg.epsilons {
            rows.push(ConcentrationRow {
                users: k,
                chips: sub.params.chips().unwrap_or(0),
                epsilon,
                var_mi: var_mi.variance(),
                var_f: var_f.variance(),
                tail_freq_mi: tail_frequency(&rec.matrix_means, epsilon),
                tail_freq_f: tail_frequency(&rec.free_energies, epsilon),
            });
        }
    }
    Ok(rows)
}

/// Least-squares constant `a` in `tail ≈ a / (K ε²)`, fitted on the rows
/// with the largest `K`.
pub fn fit_tail_constant(rows: &[ConcentrationRow]) -> Option<f64> {
    let k_max = rows.iter().map(|r| r.users).max()?;
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.users == k_max)
        .map(|r| (1.0 / (r.users as f64 * r.epsilon * r.epsilon), r.tail_freq_mi))
        .collect();
    let sxx: f64 = fit.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = fit.iter().map(|(x, y)| x * y).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniversalityRow {
    pub users: usize,
    pub chips: usize,
    pub dist: SpreadingDistribution,
    pub capacity_mean: f64,
    pub capacity_se: f64,
    pub matrix_means: Vec<f64>,
}

/// Capacity estimates for several spreading laws. For a given `K` every
/// law uses the same seed, so all of them transform the same normal draws
/// and see the same noise.
pub fn universality_experiment(
    cfg: &ExperimentConfig,
    users: &[usize],
    dists: &[SpreadingDistribution],
) -> Result<Vec<UniversalityRow>> {
    let mut rows = Vec::new();
    for &k in users {
        for dist in dists {
            let mut sub = cfg.at_users(k)?.with_dist(dist.clone());
            sub.seed = derive_seed(cfg.seed, k as u64);
            let rec = estimate_capacity(&sub)?;
            rows.push(UniversalityRow {
                users: k,
                chips: sub.params.chips().unwrap_or(0),
                dist: dist.clone(),
                capacity_mean: rec.capacity_mean,
                capacity_se: rec.capacity_se,
                matrix_means: rec.matrix_means,
            });
        }
    }
    Ok(rows)
}

/// Difference of two capacity estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub value: f64,
    /// `√(se_a² + se_b²)`
    pub combined_se: f64,
    /// Standard error of the matrix-by-matrix differences, valid when both
    /// estimates share seeds.
    pub paired_se: f64,
}

pub fn capacity_gap(a: &UniversalityRow, b: &UniversalityRow) -> Gap {
    let paired: RunningStats = a
        .matrix_means
        .iter()
        .zip(&b.matrix_means)
        .map(|(x, y)| x - y)
        .collect();
    Gap {
        value: a.capacity_mean - b.capacity_mean,
        combined_se: a.capacity_se.hypot(b.capacity_se),
        paired_se: paired.std_error(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendRow {
    pub users: usize,
    pub chips: usize,
    pub beta_actual: f64,
    pub sigma2: f64,
    pub capacity_mean: f64,
    pub capacity_se: f64,
}

/// Finite-size capacity as a function of `K` at (approximately) fixed load.
pub fn limit_trend(cfg: &ExperimentConfig, users: &[usize]) -> Result<Vec<TrendRow>> {
    users
        .iter()
        .map(|&k| {
            let mut sub = cfg.at_users(k)?;
            sub.seed = derive_seed(cfg.seed, k as u64);
            let rec = estimate_capacity(&sub)?;
            Ok(TrendRow {
                users: k,
                chips: sub.params.chips().unwrap_or(0),
                beta_actual: sub.params.beta(),
                sigma2: sub.params.sigma2(),
                capacity_mean: rec.capacity_mean,
                capacity_se: rec.capacity_se,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn cfg(users: usize, beta: f64, sigma2: f64, m: usize, n: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig::new(SystemParams::with_load(users, beta, sigma2).unwrap(), m, n, seed)
    }

    #[test]
    fn no_information_limit() {
        let rec = estimate_capacity(&cfg(4, 1.0, 1e6, 200, 10, 1)).unwrap();
        // the exact value is positive but below B/2 = 5e-7
        assert!(rec.capacity_mean.abs() < 3.0 * rec.capacity_se + 5e-7, "{rec:?}");
        assert!((rec.ber_mean - 0.5).abs() < 3.0 * rec.ber_se);
    }

    #[test]
    fn noiseless_limit() {
        let rec = estimate_capacity(&cfg(4, 1.0, 1e-4, 200, 10, 2)).unwrap();
        assert!((rec.capacity_mean - LN_2).abs() < 3.0 * rec.capacity_se + 1e-6, "{rec:?}");
        assert!(rec.ber_mean < 3.0 * rec.ber_se + 1e-12);
    }

    #[test]
    fn bounded_by_replica_value() {
        let c = cfg(8, 1.0, 1.0, 400, 50, 3);
        let rec = estimate_capacity(&c).unwrap();
        let bound = crate::replica::capacity_bound(
            &SystemParams::asymptotic(1.0, 1.0).unwrap(),
            &Default::default(),
        )
        .unwrap()
        .c_upper;
        assert!(rec.capacity_mean <= bound + 3.0 * rec.capacity_se);
        assert!(rec.capacity_mean > 0.0 && rec.capacity_mean < LN_2);
    }

    #[test]
    fn independent_of_thread_count() {
        let c = cfg(6, 1.0, 0.8, 24, 3, 4);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_capacity(&c).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
        assert_eq!(a.capacity_mean.to_bits(), b.capacity_mean.to_bits());
    }

    #[test]
    fn uniform_inputs_match_all_ones() {
        let mut c = cfg(6, 1.0, 1.0, 300, 10, 5);
        let fixed = estimate_capacity(&c).unwrap();
        c.input_mode = InputMode::Uniform;
        let sampled = estimate_capacity(&c).unwrap();
        let se = fixed.capacity_se.hypot(sampled.capacity_se);
        assert!((fixed.capacity_mean - sampled.capacity_mean).abs() < 3.0 * se);
    }

    #[test]
    fn refuses_oversized_systems() {
        let c = cfg(30, 1.0, 1.0, 1, 1, 0);
        assert!(matches!(estimate_capacity(&c), Err(Error::EnumerationRefused { .. })));
        let mut small = cfg(4, 1.0, 1.0, 1, 1, 0);
        small.k_max = 3;
        assert!(matches!(estimate_capacity(&small), Err(Error::EnumerationRefused { limit: 3, .. })));
        assert!(estimate_capacity(&cfg(4, 1.0, 1.0, 0, 1, 0)).is_err());
    }

    #[test]
    fn concentration_in_degenerate_limit() {
        let rows = concentration_experiment(&cfg(4, 1.0, 1e6, 100, 5, 6), &[4, 6]).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.var_mi < 1e-6 && r.tail_freq_mi == 0.0, "{r:?}");
            // f is then -‖n‖²/(2K) up to O(1/σ), with variance 1/(2βK)
            let expected = 1.0 / (2.0 * r.users as f64);
            assert!((r.var_f / expected - 1.0).abs() < 0.25, "{r:?}");
        }
        assert!(fit_tail_constant(&rows).unwrap().abs() < 1e-12);
    }

    #[test]
    fn same_law_different_seeds_agree() {
        let binary = SpreadingDistribution::BinaryPm1;
        let base = cfg(6, 1.0, 1.0, 200, 5, 7);
        let mut other = base.clone();
        other.seed = 8;
        let a = universality_experiment(&base, &[6], &[binary.clone()]).unwrap();
        let b = universality_experiment(&other, &[6], &[binary]).unwrap();
        let gap = capacity_gap(&a[0], &b[0]);
        assert!(gap.value.abs() < 3.0 * gap.combined_se);
    }

    #[test]
    fn laws_agree_without_signal() {
        let dists = [
            SpreadingDistribution::GaussianUnit,
            SpreadingDistribution::BinaryPm1,
            SpreadingDistribution::UniformSymmetric,
        ];
        let rows = universality_experiment(&cfg(4, 1.0, 1e6, 50, 4, 9), &[4], &dists).unwrap();
        for r in &rows[1..] {
            let gap = capacity_gap(&rows[0], r);
            assert!(gap.value.abs() <= 3.0 * gap.combined_se + 1e-6);
        }
    }

    #[test]
    fn trend_without_signal_is_flat() {
        let rows = limit_trend(&cfg(4, 1.0, 1e6, 50, 4, 10), &[2, 4]).unwrap();
        for r in &rows {
            assert!(r.capacity_mean.abs() <= 3.0 * r.capacity_se + 1e-6);
            assert!(r.capacity_mean <= LN_2);
        }
    }
}
