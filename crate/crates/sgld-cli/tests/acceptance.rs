//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values. Everything is oracle- or property-based at desk
//! scale and runs from fixed seeds.
//!
//! Run with `cargo test -p sgld-cli --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use std::path::Path;
use std::process::Command;

use rand::Rng;
use rand_distr::StandardNormal;
use sgld_cli::runner::run_ensemble_parallel;
use sgld_core::convergence::{ensemble_moments, linear_chain_oracle, two_start_decay};
use sgld_core::diagnostics::{
    minorization_cert, verify_drift_mc, verify_minorization_mc, BallSubset, DriftCertificate,
    DriftConstants,
};
use sgld_core::rng::derive_seed;
use sgld_core::vecmath;
use sgld_core::{
    finite_diff_grad, BoundFn, ChainConfig, LinearModel, MlpSpec, NoiseModel, RegressionModel,
    StreamModel, TamedMlp, UntamedMlp, UpdateModel,
};

fn linear_drift_certificate(lambda: f64) -> DriftCertificate {
    let constants = DriftConstants {
        delta: 0.5,
        k1: 1.0,
        k2: 1.0,
        k3: 0.0,
        beta: 1.0,
        b: BoundFn::Quadratic { c0: 0.0, c2: 0.5 },
        sigma2: 1.0,
    };
    DriftCertificate::new(constants, lambda).expect("lambda below threshold")
}

#[test]
fn criterion_1_drift_certificate_exactness() {
    let cert = linear_drift_certificate(0.1);
    // γ = 1 − 2λΔ + 3λ²K₁², written out independently
    let expected_gamma = 1.0 - 2.0 * 0.1 * 0.5 + 3.0 * 0.1 * 0.1 * 1.0 * 1.0;
    assert_eq!(cert.gamma, expected_gamma);
    assert!((cert.gamma - 0.93).abs() < 1e-15, "gamma = {}", cert.gamma);
    // K(1) = λ(σ² + 2·b(1)) + 3λ²(K₂²·1 + K₃²)
    let k1y = cert.k_of(&[1.0]);
    let expected_k = 0.1 * (1.0 + 2.0 * (0.0 + 0.5 * 1.0)) + 3.0 * 0.1 * 0.1 * (1.0 * 1.0 + 0.0);
    assert_eq!(k1y, expected_k);
    assert!((k1y - 0.23).abs() < 1e-15, "K(1) = {k1y}");
    println!(
        "acceptance 1 drift certificate exactness: PASS (gamma = {}, K(1) = {k1y})",
        cert.gamma
    );
}

#[test]
fn criterion_2_drift_mc_verification() {
    let model = LinearModel::new(1);
    let noise = NoiseModel::gaussian(1);
    let cert = linear_drift_certificate(0.1);
    let thetas: Vec<Vec<f64>> = (-5..=5).map(|t| vec![t as f64]).collect();
    let ys: Vec<Vec<f64>> = (-3..=3).map(|y| vec![y as f64]).collect();
    let report = verify_drift_mc(&model, &noise, &cert, &thetas, &ys, 100_000, 20_250_802);
    assert_eq!(report.points_checked(), 77);
    let violations = report.violations().count();
    assert_eq!(
        violations,
        0,
        "drift violations: {:?}",
        report.violations().next()
    );
    println!(
        "acceptance 2 drift MC verification: PASS (77 points x 1e5 samples, 0 violations, max relative excess {:.3})",
        report.max_relative_excess
    );
}

#[test]
fn criterion_3_moment_boundedness() {
    let model = LinearModel::new(1);
    let stream = StreamModel::ar1(1, 0.9).unwrap();
    let noise = NoiseModel::gaussian(1);
    let lambda = 0.1;
    let cert = linear_drift_certificate(lambda);
    // stationary marginal is standard normal: M_y = E Y² = 1 (β = 1),
    // M_b = E[|Y|²/2] = 1/2, both in closed form
    let m_y = stream.exact_moment_2beta(1.0).unwrap();
    let m_b = cert.constants.b.mean_under_std_gaussian(1);
    assert_eq!((m_y, m_b), (1.0, 0.5));
    let bound = cert.moment_bound(&[0.0], m_b, m_y);
    assert!((bound.value - 0.93 / 0.07 * 5.0).abs() < 1e-9);

    let checkpoints = vec![0, 10, 100, 1000, 5000, 10_000];
    let cfg = ChainConfig::new(lambda, 10_000, vec![0.0], 33_001, checkpoints.clone()).unwrap();
    let ensemble = run_ensemble_parallel(&model, &stream, &noise, &cfg, 1000).unwrap();
    assert_eq!(ensemble.diverged_count(), 0, "no chain may diverge");

    let mut worst = 0.0f64;
    for &t in &checkpoints {
        let states = ensemble.surviving_states_at(t);
        let mean_v = states.iter().map(|s| vecmath::norm_sq(s)).sum::<f64>() / states.len() as f64;
        worst = worst.max(mean_v);
        assert!(
            mean_v <= bound.value,
            "t = {t}: mean |θ|² = {mean_v} exceeds bound {}",
            bound.value
        );
    }
    println!(
        "acceptance 3 moment boundedness: PASS (max mean |θ_t|² = {worst:.4} <= bound {:.2}, 0 divergences)",
        bound.value
    );
}

#[test]
fn criterion_4_oracle_equivalence() {
    let model = LinearModel::new(1);
    let noise = NoiseModel::gaussian(1);
    let lambda = 0.1;
    let theta0 = 1.0;
    let n_chains = 10_000;
    let checkpoints = vec![10, 100, 1000];
    for (i, rho) in [0.0, 0.5, 0.9].into_iter().enumerate() {
        let stream = StreamModel::ar1(1, rho).unwrap();
        let cfg = ChainConfig::new(
            lambda,
            1000,
            vec![theta0],
            44_000 + i as u64,
            checkpoints.clone(),
        )
        .unwrap();
        let ensemble = run_ensemble_parallel(&model, &stream, &noise, &cfg, n_chains).unwrap();
        let laws = linear_chain_oracle(lambda, rho, 1000, theta0);
        for &t in &checkpoints {
            let m = ensemble_moments(&ensemble.surviving_states_at(t)).unwrap();
            let law = laws[t];
            let mean_se = (law.var / n_chains as f64).sqrt();
            assert!(
                (m.mean[0] - law.mean).abs() <= 3.0 * mean_se,
                "rho = {rho}, t = {t}: mean {} vs oracle {} (3se = {})",
                m.mean[0],
                law.mean,
                3.0 * mean_se
            );
            let var_se = law.var * (2.0 / (n_chains as f64 - 1.0)).sqrt();
            assert!(
                (m.variance(0) - law.var).abs() <= 3.0 * var_se,
                "rho = {rho}, t = {t}: var {} vs oracle {} (3se = {})",
                m.variance(0),
                law.var,
                3.0 * var_se
            );
        }
    }
    println!(
        "acceptance 4 oracle equivalence: PASS (mean and variance within 3 MC standard errors for rho in {{0, 0.5, 0.9}}, t in {{10, 100, 1000}}, 1e4 chains)"
    );
}

#[test]
fn criterion_5_tv_decay_with_dependent_data() {
    let model = LinearModel::new(1);
    let stream = StreamModel::ar1(1, 0.9).unwrap();
    let noise = NoiseModel::gaussian(1);
    let cfg = ChainConfig::new(0.1, 1000, vec![0.0], 55_123, vec![0, 200, 1000]).unwrap();
    let report = two_start_decay(&model, &stream, &noise, &cfg, vec![10.0], 10_000, 50).unwrap();
    assert_eq!(report.diverged_a + report.diverged_b, 0);
    assert_eq!(report.points.len(), 3);

    let at0 = &report.points[0];
    assert!(
        (at0.estimate.value - 1.0).abs() <= 0.01,
        "tv at t=0 is {}",
        at0.estimate.value
    );
    let at200 = &report.points[1];
    assert!(
        at200.estimate.value < 0.05,
        "tv at t=200 is {}",
        at200.estimate.value
    );
    let at1000 = &report.points[2];
    assert!(
        at1000.estimate.value <= 2.0 * at1000.noise_floor,
        "tv at t=1000 is {} with noise floor {}",
        at1000.estimate.value,
        at1000.noise_floor
    );
    println!(
        "acceptance 5 TV decay with dependent data: PASS (tv = {:.3} -> {:.4} -> {:.4}, floor {:.4})",
        at0.estimate.value, at200.estimate.value, at1000.estimate.value, at1000.noise_floor
    );
}

fn random_in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = vecmath::norm(&v);
    if n > 0.0 {
        let r = radius * rng.random::<f64>();
        for x in v.iter_mut() {
            *x *= r / n;
        }
    }
    v
}

// Relative error with a unit floor: the finite-difference oracle carries
// rounding noise of order eps·U/step, which must not dominate at points
// where the true gradient nearly vanishes.
fn max_fd_relative_error<M, F>(model: &M, loss: F, seed: u64, points: usize) -> f64
where
    M: UpdateModel,
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut rng = sgld_core::rng::derive_rng(seed, 0, 90);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let theta = random_in_ball(&mut rng, model.param_dim(), 5.0);
        let y = random_in_ball(&mut rng, model.data_dim(), 5.0);
        let analytic = model.eval(&theta, &y);
        let numeric = finite_diff_grad(&loss, &theta, &y, 1e-5);
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / vecmath::norm(&analytic).max(1.0));
    }
    worst
}

#[test]
fn criterion_6_gradient_correctness() {
    // one-layer regression gradient vs central finite differences
    let regression = RegressionModel::new(3, 2, 0.1).unwrap();
    let reg_err = max_fd_relative_error(&regression, |t, y| regression.loss(t, y), 66_001, 100);
    assert!(reg_err < 1e-5, "regression max relative error {reg_err}");

    // untamed multilayer gradient
    let spec = MlpSpec::new(vec![4, 8, 8, 2], 1.0).unwrap();
    let untamed = UntamedMlp::new(spec.clone());
    let untamed_err = max_fd_relative_error(&untamed, |t, y| spec.loss(t, y), 66_002, 100);
    assert!(
        untamed_err < 1e-5,
        "untamed max relative error {untamed_err}"
    );

    // tamed multilayer gradient: H·(1 + √λ|θ|^{2r}) must match the oracle
    let lambda: f64 = 0.01;
    let tamed = TamedMlp::new(spec.clone(), lambda).unwrap();
    let spec_for_loss = spec.clone();
    let mut rng = sgld_core::rng::derive_rng(66_003, 0, 90);
    let mut tamed_err = 0.0f64;
    for _ in 0..100 {
        let theta = random_in_ball(&mut rng, tamed.param_dim(), 5.0);
        let y = random_in_ball(&mut rng, tamed.data_dim(), 5.0);
        let denom = 1.0 + lambda.sqrt() * vecmath::norm_sq(&theta).powf(spec.exponent());
        let analytic: Vec<f64> = tamed.eval(&theta, &y).iter().map(|h| h * denom).collect();
        let numeric = finite_diff_grad(|t, yy| spec_for_loss.loss(t, yy), &theta, &y, 1e-5);
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        tamed_err = tamed_err.max(diff / vecmath::norm(&analytic).max(1.0));
    }
    assert!(tamed_err < 1e-5, "tamed max relative error {tamed_err}");

    println!(
        "acceptance 6 gradient correctness: PASS (max relative errors: regression {reg_err:.2e}, untamed {untamed_err:.2e}, tamed {tamed_err:.2e})"
    );
}

#[test]
fn criterion_7_taming_stabilizes() {
    let dims = vec![4, 8, 8, 2];
    let eta = 1.0;
    let lambda = 0.01;
    let spec = MlpSpec::new(dims, eta).unwrap();
    assert_eq!(spec.exponent(), 2.5); // r = (n+2)/2 for n = 3
    let d = spec.param_dim();
    assert_eq!(d, 112);

    // |θ0| = 50 along the all-ones direction
    let theta0 = vec![50.0 / (d as f64).sqrt(); d];
    let theta0_norm_sq = vecmath::norm_sq(&theta0);
    assert!((theta0_norm_sq - 2500.0).abs() < 1e-9);

    let stream = StreamModel::regression(
        4,
        2,
        vec![0.5, -0.3, 0.8, 0.1, -0.6, 0.4, 0.2, -0.7, 0.3, -0.1],
        0.1,
        0.5,
    )
    .unwrap();
    let noise = NoiseModel::gaussian(d);
    let n_chains = 100;

    // tamed: 10^5 steps, no divergence, bounded mean |θ_t|²
    let tamed = TamedMlp::new(spec.clone(), lambda).unwrap();
    let checkpoints = vec![0, 1000, 10_000, 100_000];
    let cfg =
        ChainConfig::new(lambda, 100_000, theta0.clone(), 77_001, checkpoints.clone()).unwrap();
    let ensemble = run_ensemble_parallel(&tamed, &stream, &noise, &cfg, n_chains).unwrap();
    assert_eq!(
        ensemble.diverged_count(),
        0,
        "tamed ensemble must not diverge"
    );
    let mut max_mean_v = 0.0f64;
    let mut final_mean_v = 0.0;
    for &t in &checkpoints {
        let states = ensemble.surviving_states_at(t);
        let mean_v = states.iter().map(|s| vecmath::norm_sq(s)).sum::<f64>() / states.len() as f64;
        max_mean_v = max_mean_v.max(mean_v);
        final_mean_v = mean_v;
    }
    assert!(
        max_mean_v <= 1.05 * theta0_norm_sq,
        "tamed mean |θ|² must stay bounded, got {max_mean_v}"
    );
    assert!(
        final_mean_v < 100.0,
        "tamed chain must settle, got {final_mean_v}"
    );

    // untamed from the same start: at least 90% divergence within 10³ steps
    let untamed = UntamedMlp::new(spec);
    let cfg = ChainConfig::new(lambda, 1000, theta0, 77_002, vec![0, 1000]).unwrap();
    let ensemble = run_ensemble_parallel(&untamed, &stream, &noise, &cfg, n_chains).unwrap();
    let diverged = ensemble.diverged_count();
    assert!(
        diverged * 10 >= n_chains * 9,
        "untamed divergence {diverged}/{n_chains} below 90%"
    );
    println!(
        "acceptance 7 taming stabilizes: PASS (tamed: 0/{n_chains} diverged, mean |θ|² 2500 -> {final_mean_v:.2}; untamed: {diverged}/{n_chains} diverged within 10³ steps)"
    );
}

#[test]
fn criterion_8_minorization_certificate() {
    let model = LinearModel::new(1);
    let noise = NoiseModel::gaussian(1);
    let cert = minorization_cert(1.0, 1.0, 0.0, 1.0, 0.25, &noise, 1).unwrap();
    assert!((cert.radius - 5.0).abs() < 1e-12);
    // α₁ = C(1)·Leb(B₁)/λ^{1/2} = (e^{−12.5}/√(2π))·2/0.5
    let expected = (-12.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt() * 2.0 / 0.5;
    assert!(
        (cert.alpha - expected).abs() / expected < 1e-6,
        "alpha = {} vs {expected}",
        cert.alpha
    );

    let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut point = 0u64;
    let mut min_margin = f64::INFINITY;
    for &theta in &grid {
        for &y in &grid {
            for subset in [BallSubset::Full, BallSubset::UpperHalf] {
                let check = verify_minorization_mc(
                    &model,
                    &noise,
                    &cert,
                    &[theta],
                    &[y],
                    &subset,
                    1_000_000,
                    derive_seed(88_001, point),
                )
                .unwrap();
                assert!(
                    check.passed,
                    "θ = {theta}, y = {y}, {subset:?}: q = {} < bound {}",
                    check.q_hat, check.lower_bound
                );
                min_margin = min_margin.min(check.q_hat - check.lower_bound);
                point += 1;
            }
        }
    }
    println!(
        "acceptance 8 minorization certificate: PASS (alpha = {:.6e}, 50 MC checks, min margin {min_margin:.4})",
        cert.alpha
    );
}

#[test]
fn criterion_9_determinism_across_reruns_and_thread_counts() {
    let binary = env!("CARGO_BIN_EXE_sgld");
    let configs_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let work = tempfile::tempdir().unwrap();

    // a reduced two-start experiment exercises three ensembles, projections
    // and both output formats
    let tv_config = r#"{
        "version": 1,
        "seed": 99,
        "model": { "kind": "linear", "d": 2 },
        "stream": { "kind": "ar1", "m": 2, "rho": 0.9 },
        "noise": { "kind": "gaussian", "d": 2 },
        "chain": {
            "lambda": 0.1,
            "horizon": 200,
            "theta0": [0.0, 0.0],
            "checkpoints": [0, 100, 200],
            "n_chains": 500
        },
        "tv": { "theta0_b": [5.0, -5.0], "bins": 40 }
    }"#;
    let tv_path = work.path().join("tv.json");
    std::fs::write(&tv_path, tv_config).unwrap();

    let jobs: [(&str, std::path::PathBuf, &[&str]); 2] = [
        (
            "run",
            configs_dir.join("linear_run.json"),
            &["snapshots.csv", "summary.json"][..],
        ),
        (
            "tv",
            tv_path.clone(),
            &["tv_series.csv", "summary.json"][..],
        ),
    ];
    for (subcommand, config, files) in jobs {
        let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
        for (label, threads) in [("a1", "1"), ("b1", "1"), ("c4", "4")] {
            let out_dir = work.path().join(format!("{subcommand}_{label}"));
            let status = Command::new(binary)
                .args([
                    subcommand,
                    "--config",
                    config.to_str().unwrap(),
                    "--out",
                    out_dir.to_str().unwrap(),
                    "--threads",
                    threads,
                ])
                .status()
                .expect("binary must run");
            assert!(
                status.success(),
                "{subcommand} with {threads} threads failed"
            );
            outputs.push(
                files
                    .iter()
                    .map(|f| std::fs::read(out_dir.join(f)).unwrap())
                    .collect(),
            );
        }
        assert_eq!(
            outputs[0], outputs[1],
            "{subcommand}: rerun must be byte-identical"
        );
        assert_eq!(
            outputs[0], outputs[2],
            "{subcommand}: thread count must not change the bytes"
        );
    }
    println!(
        "acceptance 9 determinism: PASS (run + tv byte-identical across reruns and across 1 vs 4 threads)"
    );
}
