//! Streaming mean and variance.

/// Welford accumulator; `merge` combines partial results (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64) / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_two_pass() {
        let xs = [1.0, 4.0, -2.0, 8.5, 3.25];
        let s: RunningStats = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean() - mean).abs() < 1e-14);
        assert!((s.variance() - var).abs() < 1e-13);
        assert!((s.std_error() - (var / 5.0).sqrt()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn merge_equals_single_pass(
            a in prop::collection::vec(-1e3f64..1e3, 0..40),
            b in prop::collection::vec(-1e3f64..1e3, 0..40),
        ) {
            let mut left: RunningStats = a.iter().copied().collect();
            let right: RunningStats = b.iter().copied().collect();
            let mut swapped = right;
            swapped.merge(&left);
            left.merge(&right);
            let all: RunningStats = a.iter().chain(&b).copied().collect();
            prop_assert_eq!(left.count(), all.count());
            if all.count() > 0 {
                prop_assert!((left.mean() - all.mean()).abs() < 1e-9);
                prop_assert!((swapped.mean() - all.mean()).abs() < 1e-9);
                prop_assert!((left.variance() - all.variance()).abs() < 1e-6 * (1.0 + all.variance()));
                prop_assert!((swapped.variance() - all.variance()).abs() < 1e-6 * (1.0 + all.variance()));
            }
        }
    }
}
