//! Exponents of the concentration inequalities for Gaussian spreading.

use num_rational::Ratio;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstants {
    /// Constant in the tail of the mutual information per user.
    pub alpha1: f64,
    /// Constant in the tail of the free energy.
    pub alpha2: f64,
}

pub fn concentration_rate_constants(beta: f64, sigma2: f64) -> Result<RateConstants> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("must be finite and > 0, got {beta}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::param("sigma2", format!("must be finite and > 0, got {sigma2}")));
    }
    let sigma = sigma2.sqrt();
    let s4 = sigma2 * sigma2;
    Ok(RateConstants {
        alpha1: s4 / (16.0 * (64.0 * beta + 32.0 + sigma2)),
        alpha2: s4 * beta.powf(1.5) / (32.0 * (2.0 * beta.sqrt() + sigma).powi(2)),
    })
}

/// The same constants in exact rational arithmetic, for `σ` and `√β`
/// rational. Returns `(α₁, α₂)`.
pub fn rate_constants_exact(
    sigma: Ratio<i128>,
    sqrt_beta: Ratio<i128>,
) -> (Ratio<i128>, Ratio<i128>) {
    let int = |v: i128| Ratio::from_integer(v);
    let sigma2 = sigma * sigma;
    let s4 = sigma2 * sigma2;
    let beta = sqrt_beta * sqrt_beta;
    let alpha1 = s4 / (int(16) * (int(64) * beta + int(32) + sigma2));
    let root = int(2) * sqrt_beta + sigma;
    let alpha2 = s4 * beta * sqrt_beta / (int(32) * root * root);
    (alpha1, alpha2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_parameters_exact() {
        let one = Ratio::from_integer(1);
        let (a1, a2) = rate_constants_exact(one, one);
        assert_eq!(a1, Ratio::new(1, 1552));
        assert_eq!(a2, Ratio::new(1, 288));
        let f = concentration_rate_constants(1.0, 1.0).unwrap();
        assert!((f.alpha1 - 1.0 / 1552.0).abs() < 1e-18);
        assert!((f.alpha2 - 1.0 / 288.0).abs() < 1e-18);
    }

    #[test]
    fn float_agrees_with_rational() {
        let (sigma, sqrt_beta) = (Ratio::new(3, 2), Ratio::new(1, 2));
        let (a1, a2) = rate_constants_exact(sigma, sqrt_beta);
        let f = concentration_rate_constants(0.25, 2.25).unwrap();
        let to_f = |r: Ratio<i128>| *r.numer() as f64 / *r.denom() as f64;
        assert!((f.alpha1 - to_f(a1)).abs() < 1e-15);
        assert!((f.alpha2 - to_f(a2)).abs() < 1e-15);
    }

    #[test]
    fn positive() {
        for beta in [0.01, 1.0, 50.0] {
            for sigma2 in [1e-3, 1.0, 1e3] {
                let r = concentration_rate_constants(beta, sigma2).unwrap();
                assert!(r.alpha1 > 0.0 && r.alpha2 > 0.0);
            }
        }
        assert!(concentration_rate_constants(0.0, 1.0).is_err());
    }
}
