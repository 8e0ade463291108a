//! Shifted accumulation of `Σ exp(log_w) · v` over a stream of
//! configurations whose log-weights are only known one at a time.

pub(crate) struct ShiftedSums {
    shift: f64,
    pub(crate) sums: Vec<f64>,
}

impl ShiftedSums {
    pub(crate) fn new(len: usize) -> Self {
        ShiftedSums {
            shift: f64::NEG_INFINITY,
            sums: vec![0.0; len],
        }
    }

    /// Returns `exp(log_w - shift)`. Raising the shift rescales every
    /// accumulated sum so that the largest weight seen so far is 1.
    #[inline]
    pub(crate) fn weight(&mut self, log_w: f64) -> f64 {
        if log_w > self.shift {
            let scale = (self.shift - log_w).exp();
            for s in &mut self.sums {
                *s *= scale;
            }
            self.shift = log_w;
        }
        (log_w - self.shift).exp()
    }

    /// `ln Σ exp(log_w)`, with `sums[0]` holding the shifted partition sum.
    pub(crate) fn log_total(&self) -> f64 {
        self.shift + self.sums[0].ln()
    }
}

/// Bits of configuration `gray(step)`; bit `k` set means `x_k = -1`.
#[cfg(test)]
#[inline]
pub(crate) fn gray(step: u64) -> u64 {
    step ^ (step >> 1)
}
