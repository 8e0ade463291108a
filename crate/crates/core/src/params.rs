use crate::error::{Error, Result};

/// Load, noise level and (optionally) the finite dimensions of a CDMA system.
///
/// The SNR `B = 1/σ²` is stored alongside `σ²`. `B = 0` (infinite noise) is
/// representable for the asymptotic formulas only; finite systems need
/// `0 < σ² < ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    users: Option<usize>,
    chips: Option<usize>,
    beta: f64,
    sigma2: f64,
    snr: f64,
}

impl SystemParams {
    /// A finite system with `K` users and `N` chips; `β = K/N`.
    pub fn finite(users: usize, chips: usize, sigma2: f64) -> Result<Self> {
        if users == 0 {
            return Err(Error::param("K", "must be at least 1"));
        }
        if chips == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        check_sigma2(sigma2)?;
        Ok(SystemParams {
            users: Some(users),
            chips: Some(chips),
            beta: users as f64 / chips as f64,
            sigma2,
            snr: 1.0 / sigma2,
        })
    }

    /// A finite system with `N = round(K/β)` chips. The realized load
    /// `K/N` replaces the requested one.
    pub fn with_load(users: usize, beta: f64, sigma2: f64) -> Result<Self> {
        check_beta(beta)?;
        let chips = (users as f64 / beta).round().max(1.0) as usize;
        Self::finite(users, chips, sigma2)
    }

    /// Large-system parameters: only the load and the noise level.
    pub fn asymptotic(beta: f64, sigma2: f64) -> Result<Self> {
        check_beta(beta)?;
        check_sigma2(sigma2)?;
        Ok(SystemParams {
            users: None,
            chips: None,
            beta,
            sigma2,
            snr: 1.0 / sigma2,
        })
    }

    /// Large-system parameters from the SNR; `snr = 0` gives `σ² = ∞`.
    pub fn from_snr(beta: f64, snr: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(snr >= 0.0 && snr.is_finite()) {
            return Err(Error::param("snr", format!("must be finite and >= 0, got {snr}")));
        }
        Ok(SystemParams {
            users: None,
            chips: None,
            beta,
            sigma2: 1.0 / snr,
            snr,
        })
    }

    pub fn users(&self) -> Option<usize> {
        self.users
    }

    pub fn chips(&self) -> Option<usize> {
        self.chips
    }

    /// `(K, N)`, or an error for asymptotic parameters.
    pub fn dims(&self) -> Result<(usize, usize)> {
        match (self.users, self.chips) {
            (Some(k), Some(n)) => Ok((k, n)),
            _ => Err(Error::param("K", "finite system dimensions are required")),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    /// Same load and dimensions at another noise level.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        check_sigma2(sigma2)?;
        Ok(SystemParams {
            sigma2,
            snr: 1.0 / sigma2,
            ..*self
        })
    }
}

impl SystemParams {
    /// Same load and dimensions at SNR `snr`; `snr = 0` is allowed and
    /// gives `σ² = ∞`.
    pub fn with_snr(&self, snr: f64) -> Result<Self> {
        if !(snr >= 0.0 && snr.is_finite()) {
            return Err(Error::param("snr", format!("must be finite and >= 0, got {snr}")));
        }
        Ok(SystemParams {
            sigma2: 1.0 / snr,
            snr,
            ..*self
        })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::param("beta", format!("must be finite and > 0, got {beta}")))
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::param("sigma2", format!("must be finite and > 0, got {sigma2}")))
    }
}
