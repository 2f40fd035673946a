use fbm_stm_core::fbm::{covariance_matrix, increment_covariance, FbmGrid};
use fbm_stm_core::special::{gaussian_raw_moment, GaussianScalar};
use fbm_stm_core::stats::{log_sum_exp, LogPowerSums};
use fbm_stm_core::stm::{simulate_linear, StepFactors, ThetaScheme};
use fbm_stm_core::{IncrementBlock, LinearTestModel};
use proptest::prelude::*;

proptest! {
    #[test]
    fn covariance_matrix_is_toeplitz(h in 0.5f64..0.99, dt in 0.01f64..2.0, n in 2usize..40) {
        let c = covariance_matrix(&FbmGrid::new(h, dt, n).unwrap());
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(c.get(i, j), c.get(j, i));
                if i + 1 < n && j + 1 < n {
                    prop_assert_eq!(c.get(i, j), c.get(i + 1, j + 1));
                }
            }
        }
    }

    #[test]
    fn covariance_scales_with_dt(h in 0.5f64..0.99, dt in 0.01f64..4.0, lag in 0usize..500) {
        let unit = increment_covariance(lag, 1.0, h).unwrap();
        let scaled = increment_covariance(lag, dt, h).unwrap();
        prop_assert!((scaled - unit * dt.powf(2.0 * h)).abs() <= 1e-12 * unit.abs() * dt.powf(2.0 * h) + 1e-300);
    }

    #[test]
    fn even_moments_are_positive(mu in -5.0f64..5.0, sigma in 0.01f64..3.0, half in 1u32..16) {
        let g = GaussianScalar::new(mu, sigma).unwrap();
        prop_assert!(gaussian_raw_moment(g, 2 * half).unwrap() > 0.0);
    }

    #[test]
    fn log_sum_exp_matches_naive(xs in prop::collection::vec(-30.0f64..30.0, 1..50)) {
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(&xs) - naive).abs() < 1e-12 * naive.abs().max(1.0));
        let mut acc = LogPowerSums::default();
        for &x in &xs {
            acc.push(x);
        }
        let mean = naive - (xs.len() as f64).ln();
        prop_assert!((acc.log_mean() - mean).abs() < 1e-12 * mean.abs().max(1.0));
    }

    #[test]
    fn sign_follows_factors(
        theta in 0.0f64..1.0,
        values in prop::collection::vec(-3.0f64..3.0, 1..60),
        x0 in prop::sample::select(vec![-2.0, 0.5, 3.0]),
    ) {
        let n = values.len();
        let m = LinearTestModel::new(9.0, 2.0, 1.4, x0).unwrap();
        let s = ThetaScheme::new(theta, 0.5, n).unwrap();
        let grid = FbmGrid::new(0.7, 0.5, n).unwrap();
        let traj = simulate_linear(&m, &s, &IncrementBlock { values: values.clone(), grid, stream_id: 0 }).unwrap();
        let f = StepFactors::new(&m, &s).unwrap();
        for (k, &v) in values.iter().enumerate() {
            let z = f.factor(k, v);
            let expected = if z == 0.0 { 0 } else { traj.states[k].sign * z.signum() as i8 };
            prop_assert_eq!(traj.states[k + 1].sign, expected);
        }
    }
}
