//! Cross-module properties over randomized inputs.

use logchoquard::config::RunConfig;
use logchoquard::constants::{k_frak, mu_n, norm_cap, MuForm, ProblemParams};
use logchoquard::radial::{RadialField, RadialGrid};
use logchoquard::report::{Anchor, Check, VerificationReport};
use proptest::prelude::*;
use std::sync::Arc;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_csv_round_trip_is_bit_exact(values in proptest::collection::vec(-1e3f64..1e3, 64)) {
        let grid = Arc::new(RadialGrid::uniform_geometric(8, 5.0, 1.2, 4).unwrap());
        let mut v = values[..grid.len() - 1].to_vec();
        v.push(0.0);
        let u = RadialField::new(grid, v).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        u.write_csv(&path).unwrap();
        let back = RadialField::read_csv(&path, 4).unwrap();
        prop_assert_eq!(back.values(), u.values());
        prop_assert_eq!(back.grid().nodes(), u.grid().nodes());
    }

    #[test]
    fn report_json_round_trip(measured in proptest::collection::vec(prop_oneof![any::<f64>(), Just(f64::INFINITY), Just(f64::NAN)], 1..8)) {
        let mut r = VerificationReport::new();
        for (k, m) in measured.iter().enumerate() {
            r.push(Check::upper(&format!("c{k}"), Anchor::ALL[k % Anchor::ALL.len()], *m, 1.0, "w"));
        }
        let back = VerificationReport::from_json(&r.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), r.to_json());
    }

    #[test]
    fn config_echo_round_trips(n in 2usize..5, s in 0.1f64..0.9, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let lo = (1.0 - 2.0 / n as f64) * s;
        let mut cfg = RunConfig::with_problem(ProblemParams::new(n, s, lo + frac * (s - lo)).unwrap());
        cfg.seed = seed;
        cfg.nonlinearity.q = cfg.problem.p() + 1.0;
        if cfg.validate().is_ok() {
            prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
    }

    #[test]
    fn growth_window_and_norm_cap(n in 2usize..6, s in 0.05f64..0.95, frac in 0.01f64..0.99) {
        let lo = (1.0 - 2.0 / n as f64) * s;
        let tau = lo + frac * (s - lo);
        for form in [MuForm::Literal, MuForm::Difference] {
            prop_assert!(mu_n(n, s, tau, form) <= s / n as f64 + 1e-15);
        }
        prop_assert!(norm_cap(n, s, tau) > 0.0);
    }
}

#[test]
fn seminorm_constant_diverges_at_the_singular_exponent() {
    for n in [2usize, 3] {
        let s_max = n as f64 / (n as f64 - 1.0);
        let s_max = s_max.min(1.0);
        let values: Vec<f64> = (1..=6).map(|k| k_frak(n, s_max - 0.5f64.powi(k + 2))).collect();
        if n == 2 {
            assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
        }
        assert!(values.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
