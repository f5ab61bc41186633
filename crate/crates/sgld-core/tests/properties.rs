//! Property tests for the algebraic invariants.

use proptest::prelude::*;
use sgld_core::convergence::histogram_tv;
use sgld_core::diagnostics::{compose_drift, DriftCertificate, DriftConstants};
use sgld_core::vecmath;
use sgld_core::{step, BoundFn, ChainConfig, LinearModel, NoiseModel};

fn small_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, len)
}

proptest! {
    #[test]
    fn linear_step_matches_convex_combination(
        theta in small_vec(3),
        y in small_vec(3),
        xi in small_vec(3),
        lambda in 0.01..1.0f64,
    ) {
        // θ − λ(θ − y) + √λξ = (1−λ)θ + λy + √λξ as an algebraic identity
        let model = LinearModel::new(3);
        let stepped = step(&theta, &y, &xi, lambda, &model).unwrap();
        for i in 0..3 {
            let closed = (1.0 - lambda) * theta[i] + lambda * y[i] + lambda.sqrt() * xi[i];
            prop_assert!((stepped[i] - closed).abs() <= 1e-12 * closed.abs().max(1.0));
        }
    }

    #[test]
    fn density_infimum_lower_bounds_density_inside_ball(
        x in small_vec(2),
        extra in 0.0..3.0f64,
    ) {
        for noise in [
            NoiseModel::gaussian(2),
            NoiseModel::gaussian_var2(2),
            NoiseModel::laplace(2, 0.7).unwrap(),
        ] {
            let radius = vecmath::norm(&x) + extra;
            prop_assert!(noise.inf_density_on_ball(radius) <= noise.density(&x) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn density_infimum_is_non_increasing(r1 in 0.0..20.0f64, r2 in 0.0..20.0f64) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        for noise in [
            NoiseModel::gaussian(1),
            NoiseModel::gaussian_var2(3),
            NoiseModel::laplace(2, 1.3).unwrap(),
        ] {
            prop_assert!(noise.ln_inf_density_on_ball(hi) <= noise.ln_inf_density_on_ball(lo));
        }
    }

    #[test]
    fn tv_estimate_is_bounded_and_symmetric(
        a in prop::collection::vec(-5.0..5.0f64, 1..200),
        b in prop::collection::vec(-5.0..5.0f64, 1..200),
        bins in 1usize..40,
    ) {
        let ab = histogram_tv(&a, &b, bins, (-4.0, 4.0));
        prop_assert!(ab.value >= 0.0 && ab.value <= 1.0 + 1e-12);
        let ba = histogram_tv(&b, &a, bins, (-4.0, 4.0));
        prop_assert_eq!(ab.value, ba.value);
        // counts conserve the sample sizes
        prop_assert_eq!(ab.counts_a.iter().sum::<u64>() as usize, a.len());
        prop_assert_eq!(ab.counts_b.iter().sum::<u64>() as usize, b.len());
    }

    #[test]
    fn composed_drift_shrinks_with_gamma_power(v0 in 0.0..100.0f64, k in 1usize..30) {
        // with K ≡ 0 the composed bound is exactly γ^k·V
        let constants = DriftConstants {
            delta: 0.5,
            k1: 1.0,
            k2: 0.0,
            k3: 0.0,
            beta: 1.0,
            b: BoundFn::Quadratic { c0: 0.0, c2: 0.0 },
            sigma2: 0.0,
        };
        let cert = DriftCertificate::new(constants, 0.1).unwrap();
        let ys = vec![vec![0.0]; k];
        let bound = compose_drift(&cert, v0, &ys);
        prop_assert!((bound - cert.gamma.powi(k as i32) * v0).abs() <= 1e-12 * v0.max(1.0));
    }

    #[test]
    fn checkpoints_must_increase(mut checkpoints in prop::collection::vec(0usize..50, 2..10)) {
        checkpoints.sort_unstable();
        checkpoints.reverse();
        // any strictly decreasing (hence non-increasing with duplicates) list fails
        let result = ChainConfig::new(0.1, 100, vec![0.0], 1, checkpoints.clone());
        if checkpoints.windows(2).all(|w| w[0] < w[1]) {
            prop_assert!(result.is_ok());
        } else {
            prop_assert!(result.is_err());
        }
    }

    #[test]
    fn fitted_envelope_requirement_never_exceeds_candidate(
        c2 in 0.1..2.0f64,
        ys in prop::collection::vec(-3.0..3.0f64, 1..20),
    ) {
        // for the linear model, fit against b(y) = c2·|y|² and verify the
        // reported per-sample requirement stays below the candidate
        let model = LinearModel::new(1);
        let plan = sgld_core::assumptions::SamplingPlan::from_points(
            vec![vec![-100.0], vec![-1.0], vec![-0.1], vec![0.1], vec![1.0], vec![100.0]],
            ys.iter().map(|&y| vec![y]).collect(),
        );
        let b = BoundFn::Quadratic { c0: 0.0, c2 };
        if let Some(fitted) = sgld_core::assumptions::fit_constants(&model, &b, &plan) {
            for &(norm_y, required) in &fitted.b_samples {
                prop_assert!(required <= c2 * norm_y * norm_y + 1e-9);
            }
        }
    }
}
