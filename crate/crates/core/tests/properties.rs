use std::f64::consts::LN_2;

use cdma_core::replica::{fixed_point_map, lambda_of_m};
use cdma_core::{c_rs, capacity_bound, GaussianIntegrator, SystemParams};
use proptest::prelude::*;

fn quad() -> GaussianIntegrator {
    GaussianIntegrator::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bound_stays_between_zero_and_ln2(beta in 0.05f64..5.0, log_snr in -4.0f64..3.0) {
        let p = SystemParams::from_snr(beta, 10f64.powf(log_snr)).unwrap();
        let c = capacity_bound(&p, &quad()).unwrap().c_upper;
        prop_assert!(c >= -1e-12 && c <= LN_2 + 1e-12, "c = {}", c);
    }

    /// At `m = 1` the functional is the single-user BPSK mutual information.
    #[test]
    fn functional_at_full_overlap_is_at_most_ln2(beta in 0.05f64..5.0, log_snr in -4.0f64..3.0) {
        let p = SystemParams::from_snr(beta, 10f64.powf(log_snr)).unwrap();
        let c = c_rs(1.0, &p, &quad());
        prop_assert!(c >= -1e-12 && c <= LN_2 + 1e-12, "c = {}", c);
    }

    #[test]
    fn effective_snr_grows_with_m(beta in 0.05f64..5.0, snr in 0.01f64..100.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let p = SystemParams::from_snr(beta, snr).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(lambda_of_m(lo, &p) <= lambda_of_m(hi, &p));
        prop_assert!(lambda_of_m(hi, &p) <= snr * (1.0 + 1e-15));
    }

    #[test]
    fn fixed_point_map_lands_in_unit_interval(beta in 0.05f64..5.0, snr in 0.0f64..1e3, m in 0.0f64..=1.0) {
        let p = SystemParams::from_snr(beta, snr).unwrap();
        let f = fixed_point_map(m, &p, &quad());
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&f), "F = {}", f);
    }

    #[test]
    fn bound_increases_with_snr(beta in 0.1f64..4.0, snr in 0.01f64..50.0, factor in 1.1f64..4.0) {
        let q = quad();
        let low = capacity_bound(&SystemParams::from_snr(beta, snr).unwrap(), &q).unwrap().c_upper;
        let high = capacity_bound(&SystemParams::from_snr(beta, snr * factor).unwrap(), &q).unwrap().c_upper;
        prop_assert!(high >= low - 1e-12, "{} < {}", high, low);
    }
}
