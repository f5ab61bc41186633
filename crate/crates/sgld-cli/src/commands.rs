//! The five subcommands. Each returns `Ok(true)` for a pass (exit 0),
//! `Ok(false)` for a completed run with failing checks (exit 1), or a
//! [`CliError`] carrying its own exit code.

use std::path::Path;

use sgld_core::assumptions::{check_dissipativity, check_growth, fit_constants, SamplingPlan};
use sgld_core::convergence::tv_decay_from_ensembles;
use sgld_core::diagnostics::{
    minorization_cert, verify_drift_mc, verify_minorization_mc, DriftCertificate, DriftConstants,
};
use sgld_core::rng::{derive_rng, derive_seed, role};
use sgld_core::{ChainConfig, Error};

use crate::config::{ExperimentConfig, SubsetSpec};
use crate::output;
use crate::runner::run_ensemble_parallel;
use crate::CliError;

/// `sgld run`: executes the configured ensemble and writes `snapshots.csv`
/// plus `summary.json` into `out_dir`.
pub fn cmd_run(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<bool, CliError> {
    let model = config.build_model()?;
    let stream = config.build_stream()?;
    let noise = config.build_noise()?;
    let chain_cfg = config.build_chain_config(seed_override)?;
    let ensemble =
        run_ensemble_parallel(&*model, &stream, &noise, &chain_cfg, config.chain.n_chains)
            .map_err(map_core_error)?;

    let d = model.param_dim();
    output::write_snapshots_csv(&out_dir.join("snapshots.csv"), &ensemble, d)?;
    let summary = output::RunSummary::from_ensemble(
        &ensemble,
        chain_cfg.seed(),
        chain_cfg.lambda(),
        chain_cfg.horizon(),
        d,
    );
    output::write_json(&out_dir.join("summary.json"), &summary)?;

    if ensemble.diverged_count() == ensemble.n_chains() {
        return Err(CliError::AllDiverged);
    }
    Ok(true)
}

/// `sgld check`: runs the dissipativity and growth checkers (and optionally
/// the fitter) on the standard sampling plan and prints a JSON report to
/// stdout.
pub fn cmd_check(config: &ExperimentConfig, seed_override: Option<u64>) -> Result<bool, CliError> {
    let spec = config
        .check
        .as_ref()
        .ok_or_else(|| CliError::Config("check: section missing from config".into()))?;
    let model = config.build_model()?;
    let stream = config.build_stream()?;
    let seed = seed_override.unwrap_or(config.seed);
    let mut rng = derive_rng(seed, 0, role::PLAN);
    let plan = SamplingPlan::standard(model.param_dim(), &stream, &mut rng);

    let b = spec.b.build();
    let dissipativity = check_dissipativity(&*model, spec.delta, &b, &plan);
    let growth = check_growth(&*model, spec.k1, spec.k2, spec.k3, spec.beta, &plan);
    let passed = dissipativity.passed() && growth.passed();

    let (fitted, fit_outcome) = if spec.fit {
        match fit_constants(&*model, &b, &plan) {
            Some(f) => {
                let json = output::FittedConstantsJson::from(&f);
                (Some(json), Some("fitted".to_string()))
            }
            None => (None, Some("no certificate found".to_string())),
        }
    } else {
        (None, None)
    };

    let report = output::CheckOutput {
        seed,
        reports: vec![
            output::AssumptionReportJson::from(&dissipativity),
            output::AssumptionReportJson::from(&growth),
        ],
        passed,
        fitted,
        fit_outcome,
    };
    println!("{}", output::to_json_string(&report));
    Ok(passed)
}

/// `sgld drift`: builds the drift certificate (exit 4 if the step size is
/// above the 2Δ/(3K₁²) threshold), optionally verifies it by Monte Carlo on
/// the configured grid, and writes `certificate.json` (+ `drift_points.csv`).
pub fn cmd_drift(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<bool, CliError> {
    let spec = config
        .drift
        .as_ref()
        .ok_or_else(|| CliError::Config("drift: section missing from config".into()))?;
    let model = config.build_model()?;
    let noise = config.build_noise()?;
    let seed = seed_override.unwrap_or(config.seed);

    let constants = DriftConstants {
        delta: spec.delta,
        k1: spec.k1,
        k2: spec.k2,
        k3: spec.k3,
        beta: spec.beta,
        b: spec.b.build(),
        sigma2: noise.sigma2(),
    };
    let cert = DriftCertificate::new(constants, config.chain.lambda).map_err(map_core_error)?;

    let report = spec.verify.as_ref().map(|v| {
        verify_drift_mc(
            &*model,
            &noise,
            &cert,
            &v.theta_grid,
            &v.y_grid,
            v.samples,
            seed,
        )
    });

    let mut unit_y = vec![0.0; model.data_dim()];
    unit_y[0] = 1.0;
    let json = output::drift_certificate_json(&cert, &unit_y, report.as_ref());
    output::write_json(&out_dir.join("certificate.json"), &json)?;
    if let Some(r) = &report {
        output::write_drift_points_csv(
            &out_dir.join("drift_points.csv"),
            r,
            model.param_dim(),
            model.data_dim(),
        )?;
    }
    Ok(report.as_ref().is_none_or(|r| r.passed()))
}

/// `sgld minorize`: builds the minorization certificate, optionally verifies
/// it on the configured `(θ, y, A)` grid, and writes `certificate.json`
/// (+ `minorize_points.csv`).
pub fn cmd_minorize(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<bool, CliError> {
    let spec = config
        .minorize
        .as_ref()
        .ok_or_else(|| CliError::Config("minorize: section missing from config".into()))?;
    let model = config.build_model()?;
    let noise = config.build_noise()?;
    let seed = seed_override.unwrap_or(config.seed);

    let cert = minorization_cert(
        spec.k1,
        spec.k2,
        spec.k3,
        spec.beta,
        config.chain.lambda,
        &noise,
        spec.n,
    )
    .map_err(map_core_error)?;

    let mut rows = Vec::new();
    let mut passed = true;
    if let Some(v) = &spec.verify {
        let mut point = 0u64;
        for theta in &v.theta_grid {
            for y in &v.y_grid {
                for subset_spec in &v.subsets {
                    let subset = subset_spec.build();
                    let check = verify_minorization_mc(
                        &*model,
                        &noise,
                        &cert,
                        theta,
                        y,
                        &subset,
                        v.samples,
                        derive_seed(seed, point),
                    )
                    .map_err(map_core_error)?;
                    passed &= check.passed;
                    rows.push((theta.clone(), y.clone(), subset_name(subset_spec), check));
                    point += 1;
                }
            }
        }
    }

    let verification = spec
        .verify
        .as_ref()
        .map(|v| output::MinorizeVerificationJson {
            points_checked: rows.len(),
            samples_per_point: v.samples,
            passed,
            failures: rows.iter().filter(|r| !r.3.passed).count(),
        });
    let json = output::minorization_certificate_json(&cert, verification);
    output::write_json(&out_dir.join("certificate.json"), &json)?;
    if spec.verify.is_some() {
        output::write_minorize_points_csv(
            &out_dir.join("minorize_points.csv"),
            &rows,
            model.param_dim(),
            model.data_dim(),
        )?;
    }
    Ok(passed)
}

/// `sgld tv`: runs the two-start decay experiment (three ensembles on the
/// rayon pool, merged by chain index) and writes `tv_series.csv` plus
/// `summary.json`.
pub fn cmd_tv(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<bool, CliError> {
    let spec = config
        .tv
        .as_ref()
        .ok_or_else(|| CliError::Config("tv: section missing from config".into()))?;
    let model = config.build_model()?;
    let stream = config.build_stream()?;
    let noise = config.build_noise()?;
    let seed = seed_override.unwrap_or(config.seed);
    let base = config.build_chain_config(Some(seed))?;
    let n_chains = config.chain.n_chains;

    // same derived seed layout as sgld_core::convergence::two_start_decay
    let cfg_a = base.clone().with_seed(derive_seed(seed, 1));
    let cfg_b = ChainConfig::new(
        base.lambda(),
        base.horizon(),
        spec.theta0_b.materialize(),
        derive_seed(seed, 2),
        base.checkpoints().to_vec(),
    )
    .map_err(map_core_error)?;
    let cfg_ref = base.clone().with_seed(derive_seed(seed, 3));

    let ens_a = run_ensemble_parallel(&*model, &stream, &noise, &cfg_a, n_chains)
        .map_err(map_core_error)?;
    let ens_b = run_ensemble_parallel(&*model, &stream, &noise, &cfg_b, n_chains)
        .map_err(map_core_error)?;
    let ens_ref = run_ensemble_parallel(&*model, &stream, &noise, &cfg_ref, n_chains)
        .map_err(map_core_error)?;
    let report = tv_decay_from_ensembles(&ens_a, &ens_b, &ens_ref, spec.bins, seed)
        .map_err(map_core_error)?;

    output::write_tv_series_csv(&out_dir.join("tv_series.csv"), &report)?;

    let final_tv = report.points.last().map(|p| p.estimate.value);
    let passed = match (spec.pass_threshold, final_tv) {
        (Some(threshold), Some(tv)) => tv < threshold,
        (Some(_), None) => false,
        (None, _) => true,
    };
    let summary = output::TvSummary {
        seed,
        n_chains,
        bins: spec.bins,
        diverged_a: report.diverged_a,
        diverged_b: report.diverged_b,
        diverged_reference: report.diverged_reference,
        projection: report.projection.clone(),
        skipped_checkpoints: report.skipped_checkpoints.clone(),
        series: report
            .points
            .iter()
            .map(|p| output::TvPointJson {
                t: p.t,
                tv: p.estimate.value,
                std_error: p.estimate.std_error,
                noise_floor: p.noise_floor,
            })
            .collect(),
        pass_threshold: spec.pass_threshold,
        final_tv,
        passed,
    };
    output::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(passed)
}

fn subset_name(spec: &SubsetSpec) -> String {
    match spec {
        SubsetSpec::Full => "full".into(),
        SubsetSpec::UpperHalf => "upper_half".into(),
        SubsetSpec::SubBall { radius } => format!("sub_ball({radius})"),
        SubsetSpec::Empty => "empty".into(),
    }
}

fn map_core_error(e: Error) -> CliError {
    match e {
        Error::StepSizeTooLarge { lambda, threshold } => {
            CliError::StepSizeTooLarge { lambda, threshold }
        }
        other => CliError::Config(other.to_string()),
    }
}
