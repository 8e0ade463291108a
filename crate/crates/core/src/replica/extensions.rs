//! Variants of the binary functional: users with unequal powers and
//! colored Gaussian noise. Neither comes with a usable fixed-point
//! equation, so both are minimized directly over `m ∈ [0, 1]`.

use std::f64::consts::PI;

use super::expected_ln_cosh;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::quadrature::GaussianIntegrator;

const SEARCH_GRID: usize = 256;
const GOLDEN_TOL: f64 = 1e-12;

/// Minimum of a functional on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalBound {
    pub c_upper: f64,
    pub argmin_m: f64,
    /// Effective SNR at the minimizer.
    pub lambda: f64,
}

/// Grid search followed by golden-section refinement around every local
/// grid minimum. Endpoints compete as candidates; ties go to smaller `m`.
fn minimize_unit(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = SEARCH_GRID;
    let ms: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let vs: Vec<f64> = ms.iter().map(|&m| f(m)).collect();
    let mut best = (vs[0], ms[0]);
    let mut consider = |v: f64, m: f64| {
        if v < best.0 || (v == best.0 && m < best.1) {
            best = (v, m);
        }
    };
    consider(vs[n], ms[n]);
    for i in 1..n {
        if vs[i] <= vs[i - 1] && vs[i] <= vs[i + 1] {
            let (m, v) = golden(&f, ms[i - 1], ms[i + 1]);
            consider(v.min(vs[i]), if v < vs[i] { m } else { ms[i] });
        }
    }
    best
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    (m, f(m))
}

/// Discrete distribution of per-user powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    levels: Vec<(f64, f64)>,
}

impl PowerProfile {
    /// Validated profile with `Σ p·P = 1`.
    pub fn new(levels: &[(f64, f64)]) -> Result<Self> {
        let profile = Self::unnormalized(levels)?;
        let mean = profile.mean_power();
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::param("profile", format!("mean power must be 1, got {mean}")));
        }
        Ok(profile)
    }

    /// Profile without the unit-mean requirement, e.g. all users silent.
    pub fn unnormalized(levels: &[(f64, f64)]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::param("profile", "needs at least one level"));
        }
        for &(power, prob) in levels {
            if !(power >= 0.0 && power.is_finite()) {
                return Err(Error::param("profile", format!("power must be finite and >= 0, got {power}")));
            }
            if !(prob >= 0.0 && prob <= 1.0) {
                return Err(Error::param("profile", format!("probability must lie in [0, 1], got {prob}")));
            }
        }
        let total: f64 = levels.iter().map(|l| l.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("profile", format!("probabilities sum to {total}, not 1")));
        }
        Ok(PowerProfile {
            levels: levels.to_vec(),
        })
    }

    pub fn unit() -> Self {
        PowerProfile {
            levels: vec![(1.0, 1.0)],
        }
    }

    pub fn levels(&self) -> &[(f64, f64)] {
        &self.levels
    }

    pub fn mean_power(&self) -> f64 {
        self.levels.iter().map(|(p, w)| p * w).sum()
    }

    /// Parses `P@p;P@p;...`.
    pub fn parse(s: &str) -> Result<Self> {
        Self::new(&parse_pairs(s, "profile")?)
    }
}

pub(crate) fn parse_pairs(s: &str, name: &'static str) -> Result<Vec<(f64, f64)>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (v, p) = t
                .split_once('@')
                .ok_or_else(|| Error::param(name, format!("expected value@probability, got `{t}`")))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::param(name, format!("not a number: `{x}`")))
            };
            Ok((parse(v)?, parse(p)?))
        })
        .collect()
}

/// Unequal-power functional
/// `-Σ p ∫Dz ln cosh(√(Pλ) z + Pλ) + λ E[P] - λ(1-m)/2 + (1/2β) ln(1 + βB(1-m))`,
/// which for unit mean power reads `... + λ(1+m)/2 + ...` like the
/// equal-power functional.
pub fn unequal_power_functional(
    m: f64,
    params: &SystemParams,
    profile: &PowerProfile,
    quad: &GaussianIntegrator,
) -> f64 {
    let beta = params.beta();
    let b = params.snr();
    let lambda = super::lambda_of_m(m, params);
    let decoupled: f64 = profile
        .levels
        .iter()
        .map(|&(power, prob)| prob * expected_ln_cosh(power * lambda, quad))
        .sum();
    -decoupled + lambda * profile.mean_power() - 0.5 * lambda * (1.0 - m)
        + (beta * b * (1.0 - m)).ln_1p() / (2.0 * beta)
}

pub fn unequal_power_bound(
    params: &SystemParams,
    profile: &PowerProfile,
    quad: &GaussianIntegrator,
) -> VariationalBound {
    let (c_upper, m) = minimize_unit(|m| unequal_power_functional(m, params, profile, quad));
    VariationalBound {
        c_upper,
        argmin_m: m,
        lambda: super::lambda_of_m(m, params),
    }
}

/// Power spectral density `Ĉ(ω)` of stationary Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpectrum {
    White { sigma2: f64 },
    /// First-order autoregressive noise with variance `power`.
    Ar1 { power: f64, rho: f64 },
    /// Samples on the uniform grid `ω_j = 2πj/len`.
    Tabulated(Vec<f64>),
}

impl NoiseSpectrum {
    pub fn white(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::param("sigma2", format!("must be finite and > 0, got {sigma2}")));
        }
        Ok(NoiseSpectrum::White { sigma2 })
    }

    pub fn ar1(power: f64, rho: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::param("sigma2", format!("noise power must be finite and > 0, got {power}")));
        }
        if !(rho.abs() < 1.0) {
            return Err(Error::param("rho", format!("must satisfy |rho| < 1, got {rho}")));
        }
        Ok(NoiseSpectrum::Ar1 { power, rho })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("spectrum", "table is empty"));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::param("spectrum", format!("samples must be finite and > 0, got {v}")));
        }
        Ok(NoiseSpectrum::Tabulated(values))
    }

    pub fn at(&self, omega: f64) -> f64 {
        match *self {
            NoiseSpectrum::White { sigma2 } => sigma2,
            NoiseSpectrum::Ar1 { power, rho } => {
                power * (1.0 - rho * rho) / (1.0 - 2.0 * rho * omega.cos() + rho * rho)
            }
            NoiseSpectrum::Tabulated(ref v) => {
                let j = (omega.rem_euclid(2.0 * PI) / (2.0 * PI) * v.len() as f64).round() as usize;
                v[j % v.len()]
            }
        }
    }

    /// Samples on `points` equally spaced frequencies; a table is returned
    /// as stored.
    pub fn samples(&self, points: usize) -> Result<Vec<f64>> {
        if let NoiseSpectrum::Tabulated(v) = self {
            return Ok(v.clone());
        }
        if points == 0 {
            return Err(Error::param("omega-grid", "must be at least 1"));
        }
        Ok((0..points)
            .map(|j| self.at(2.0 * PI * j as f64 / points as f64))
            .collect())
    }
}

/// Colored-noise functional; the frequency averages are rectangle sums on
/// the periodic sample grid, which coincide with the trapezoid rule.
fn colored_functional(m: f64, beta: f64, samples: &[f64], quad: &GaussianIntegrator) -> (f64, f64) {
    let n = samples.len() as f64;
    let load = beta * (1.0 - m);
    let lambda: f64 = samples.iter().map(|c| 1.0 / (c + load)).sum::<f64>() / n;
    let log_term: f64 = samples.iter().map(|c| (load / c).ln_1p()).sum::<f64>() / n;
    let value = -expected_ln_cosh(lambda, quad) + 0.5 * lambda * (1.0 + m) + log_term / (2.0 * beta);
    (value, lambda)
}

/// Minimum over `m` of the colored-noise functional. Only `β` is read from
/// `params`; the noise level comes from the spectrum.
pub fn colored_noise_bound(
    params: &SystemParams,
    spectrum: &NoiseSpectrum,
    quad: &GaussianIntegrator,
    omega_grid: usize,
) -> Result<VariationalBound> {
    let samples = spectrum.samples(omega_grid)?;
    let beta = params.beta();
    let (c_upper, m) = minimize_unit(|m| colored_functional(m, beta, &samples, quad).0);
    Ok(VariationalBound {
        c_upper,
        argmin_m: m,
        lambda: colored_functional(m, beta, &samples, quad).1,
    })
}
