//! Machine-readable outputs: CSV snapshot/series files and JSON summaries.
//!
//! CSV floats carry 17 significant digits so a double round-trips exactly;
//! JSON floats go through serde_json's shortest-round-trip formatting, which
//! is also exact. Nothing here touches the clock or the environment, so a
//! rerun with the same seed produces byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sgld_core::assumptions::{AssumptionReport, FittedConstants};
use sgld_core::convergence::{ensemble_moments, TvDecayReport};
use sgld_core::diagnostics::{
    DriftCertificate, DriftReport, MinorizationCertificate, MinorizationCheck,
};
use sgld_core::EnsembleResult;

/// 17 significant digits: exact round-trip for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `snapshots.csv`: one row per surviving (chain, checkpoint) pair, columns
/// `chain_id,t,theta_0..theta_{d-1}`, ordered by chain then time.
pub fn write_snapshots_csv(
    path: &Path,
    ensemble: &EnsembleResult,
    d: usize,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "chain_id,t")?;
    for i in 0..d {
        write!(w, ",theta_{i}")?;
    }
    writeln!(w)?;
    for (chain_id, trajectory) in ensemble.trajectories().iter().enumerate() {
        for (t, state) in trajectory.checkpoints.iter().zip(&trajectory.states) {
            write!(w, "{chain_id},{t}")?;
            for x in state {
                write!(w, ",{}", fmt_f64(*x))?;
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

#[derive(Serialize)]
pub struct CheckpointMoments {
    pub t: usize,
    pub n_surviving: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub mean_norm_sq: f64,
}

#[derive(Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub lambda: f64,
    pub horizon: usize,
    pub n_chains: usize,
    pub d: usize,
    pub checkpoints: Vec<usize>,
    pub diverged_chains: usize,
    /// `(chain_id, first diverged time)` for every diverged chain.
    pub divergences: Vec<(usize, usize)>,
    pub moments: Vec<CheckpointMoments>,
}

impl RunSummary {
    pub fn from_ensemble(
        ensemble: &EnsembleResult,
        seed: u64,
        lambda: f64,
        horizon: usize,
        d: usize,
    ) -> Self {
        let divergences: Vec<(usize, usize)> = ensemble
            .trajectories()
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.diverged_at.map(|at| (i, at)))
            .collect();
        let moments = ensemble
            .checkpoints()
            .iter()
            .map(|&t| {
                let states = ensemble.surviving_states_at(t);
                match ensemble_moments(&states) {
                    Some(m) => CheckpointMoments {
                        t,
                        n_surviving: states.len(),
                        variance: (0..d).map(|i| m.variance(i)).collect(),
                        mean_norm_sq: m.mean_norm_sq(),
                        mean: m.mean,
                    },
                    None => CheckpointMoments {
                        t,
                        n_surviving: states.len(),
                        mean: vec![],
                        variance: vec![],
                        mean_norm_sq: f64::NAN,
                    },
                }
            })
            .collect();
        RunSummary {
            seed,
            lambda,
            horizon,
            n_chains: ensemble.n_chains(),
            d,
            checkpoints: ensemble.checkpoints().to_vec(),
            diverged_chains: ensemble.diverged_count(),
            divergences,
            moments,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("json serialization cannot fail")
}

// ---------------------------------------------------------------------------
// JSON mirrors of the core report types (core stays serde-free)
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct ViolationJson {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Serialize)]
pub struct AssumptionReportJson {
    pub assumption: String,
    pub constants: String,
    pub grid: String,
    pub points_checked: usize,
    pub passed: bool,
    pub violation_count: usize,
    pub violations: Vec<ViolationJson>,
}

impl From<&AssumptionReport> for AssumptionReportJson {
    fn from(r: &AssumptionReport) -> Self {
        AssumptionReportJson {
            assumption: format!("{:?}", r.assumption),
            constants: r.constants.clone(),
            grid: r.grid.clone(),
            points_checked: r.points_checked,
            passed: r.passed(),
            violation_count: r.violation_count,
            violations: r
                .violations
                .iter()
                .map(|v| ViolationJson {
                    theta: v.theta.clone(),
                    y: v.y.clone(),
                    lhs: v.lhs,
                    rhs: v.rhs,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct FittedConstantsJson {
    pub delta: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub beta: f64,
    /// `(|y|, smallest workable b(y))` per data draw.
    pub b_samples: Vec<(f64, f64)>,
}

impl From<&FittedConstants> for FittedConstantsJson {
    fn from(f: &FittedConstants) -> Self {
        FittedConstantsJson {
            delta: f.delta,
            k1: f.k1,
            k2: f.k2,
            k3: f.k3,
            beta: f.beta,
            b_samples: f.b_samples.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct CheckOutput {
    pub seed: u64,
    pub reports: Vec<AssumptionReportJson>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted: Option<FittedConstantsJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_outcome: Option<String>,
}

#[derive(Serialize)]
pub struct DriftCertificateJson {
    pub kind: &'static str,
    pub gamma: f64,
    pub lambda: f64,
    pub step_size_threshold: f64,
    pub delta: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub b: String,
    /// `K(y)` at a unit data point, a convenient scalar fingerprint.
    pub k_at_unit_y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<DriftVerificationJson>,
}

#[derive(Serialize)]
pub struct DriftVerificationJson {
    pub points_checked: usize,
    pub samples_per_point: usize,
    pub passed: bool,
    pub violation_count: usize,
    pub max_relative_excess: f64,
}

pub fn drift_certificate_json(
    cert: &DriftCertificate,
    unit_y: &[f64],
    report: Option<&DriftReport>,
) -> DriftCertificateJson {
    DriftCertificateJson {
        kind: "drift",
        gamma: cert.gamma,
        lambda: cert.lambda,
        step_size_threshold: cert.constants.step_size_threshold(),
        delta: cert.constants.delta,
        k1: cert.constants.k1,
        k2: cert.constants.k2,
        k3: cert.constants.k3,
        beta: cert.constants.beta,
        sigma2: cert.constants.sigma2,
        b: format!("{:?}", cert.constants.b),
        k_at_unit_y: cert.k_of(unit_y),
        verification: report.map(|r| DriftVerificationJson {
            points_checked: r.points_checked(),
            samples_per_point: r.samples_per_point,
            passed: r.passed(),
            violation_count: r.violations().count(),
            max_relative_excess: r.max_relative_excess,
        }),
    }
}

/// `drift_points.csv`: every grid point's MC mean against the drift bound,
/// columns `theta_0..,y_0..,mc_mean,bound,std_error,passed`.
pub fn write_drift_points_csv(
    path: &Path,
    report: &DriftReport,
    d: usize,
    m: usize,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..d {
        write!(w, "theta_{i},")?;
    }
    for j in 0..m {
        write!(w, "y_{j},")?;
    }
    writeln!(w, "mc_mean,bound,std_error,passed")?;
    for p in &report.points {
        for x in &p.theta {
            write!(w, "{},", fmt_f64(*x))?;
        }
        for x in &p.y {
            write!(w, "{},", fmt_f64(*x))?;
        }
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(p.mc_mean),
            fmt_f64(p.bound),
            fmt_f64(p.std_error),
            p.passed
        )?;
    }
    w.flush()
}

#[derive(Serialize)]
pub struct MinorizationCertificateJson {
    pub kind: &'static str,
    pub n: u32,
    pub d: usize,
    pub lambda: f64,
    pub radius: f64,
    pub density_floor: f64,
    pub ln_density_floor: f64,
    pub alpha: f64,
    pub ln_alpha_raw: f64,
    pub clamped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<MinorizeVerificationJson>,
}

#[derive(Serialize)]
pub struct MinorizeVerificationJson {
    pub points_checked: usize,
    pub samples_per_point: usize,
    pub passed: bool,
    pub failures: usize,
}

pub fn minorization_certificate_json(
    cert: &MinorizationCertificate,
    verification: Option<MinorizeVerificationJson>,
) -> MinorizationCertificateJson {
    MinorizationCertificateJson {
        kind: "minorization",
        n: cert.n,
        d: cert.d,
        lambda: cert.lambda,
        radius: cert.radius,
        density_floor: cert.density_floor,
        ln_density_floor: cert.ln_density_floor,
        alpha: cert.alpha,
        ln_alpha_raw: cert.ln_alpha_raw,
        clamped: cert.clamped,
        verification,
    }
}

/// `minorize_points.csv`: one row per `(θ, y, subset)` check, columns
/// `theta_0..,y_0..,subset,q_hat,lower_bound,std_error,passed`.
pub fn write_minorize_points_csv(
    path: &Path,
    rows: &[(Vec<f64>, Vec<f64>, String, MinorizationCheck)],
    d: usize,
    m: usize,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..d {
        write!(w, "theta_{i},")?;
    }
    for j in 0..m {
        write!(w, "y_{j},")?;
    }
    writeln!(w, "subset,q_hat,lower_bound,std_error,passed")?;
    for (theta, y, subset, check) in rows {
        for x in theta {
            write!(w, "{},", fmt_f64(*x))?;
        }
        for x in y {
            write!(w, "{},", fmt_f64(*x))?;
        }
        writeln!(
            w,
            "{},{},{},{},{}",
            subset,
            fmt_f64(check.q_hat),
            fmt_f64(check.lower_bound),
            fmt_f64(check.std_error),
            check.passed
        )?;
    }
    w.flush()
}

/// `tv_series.csv`: the decay series with its noise floor.
pub fn write_tv_series_csv(path: &Path, report: &TvDecayReport) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,tv,std_error,noise_floor,n_a,n_b")?;
    for p in &report.points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.t,
            fmt_f64(p.estimate.value),
            fmt_f64(p.estimate.std_error),
            fmt_f64(p.noise_floor),
            p.estimate.n_a,
            p.estimate.n_b
        )?;
    }
    w.flush()
}

#[derive(Serialize)]
pub struct TvSummary {
    pub seed: u64,
    pub n_chains: usize,
    pub bins: usize,
    pub diverged_a: usize,
    pub diverged_b: usize,
    pub diverged_reference: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<Vec<f64>>,
    pub skipped_checkpoints: Vec<usize>,
    pub series: Vec<TvPointJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_tv: Option<f64>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct TvPointJson {
    pub t: usize,
    pub tv: f64,
    pub std_error: f64,
    pub noise_floor: f64,
}
