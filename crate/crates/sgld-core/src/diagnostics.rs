//! Executable drift and minorization certificates.
//!
//! With `V(θ) = |θ|²`, dissipativity (Δ, b) plus growth (K₁, K₂, K₃, β) plus
//! the innovation second moment σ² give the one-step drift bound
//!
//! ```text
//! E V(θ − λH(θ,y) + √λξ) ≤ γ·V(θ) + K(y),
//!     γ    = 1 − 2λΔ + 3λ²K₁²,
//!     K(y) = λ(σ² + 2b(y)) + 3λ²(K₂²|y|^{2β} + K₃²),
//! ```
//!
//! which contracts (γ < 1) precisely when `λ < 2Δ/(3K₁²)`. Composing it over
//! a data realization (`compose_drift`) and taking data moments yields the
//! uniform-in-time second-moment bound of [`MomentBound`], hence tightness
//! via Markov's inequality.
//!
//! The minorization certificate bounds the one-step kernel from below on the
//! ball `B_n`: for `θ, y, z ∈ B_n` the standardized displacement satisfies
//! `|z − θ + λH(θ,y)|/√λ ≤ R(n) = (2n + λ(K₁n + K₂n^β + K₃))/√λ`, so the
//! transition density is at least `C(n) = inf_{B_{R(n)}} f` there and
//!
//! ```text
//! Q(θ, y, A) ≥ α_n·ν_n(A),   α_n = C(n)·Leb(B_n)/λ^{d/2},
//! ```
//!
//! with `ν_n` the uniform law on `B_n`. Both α_n factors under/overflow
//! badly in moderate dimension, so α_n is computed in log space
//! (`Leb(B_n)` via the log-gamma form) and clamped to 1 when the bound is
//! vacuously larger than any probability.
//!
//! Every certificate here is pure closed-form arithmetic; the paired
//! `verify_*_mc` functions check them against independent Monte Carlo
//! estimates with a 3-standard-error slack band (false-failure probability
//! below 0.3% per point).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{BoundFn, UpdateModel};
use crate::noise::NoiseModel;
use crate::rng::{derive_rng, role};
use crate::vecmath;

/// The constants entering the drift bound.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftConstants {
    pub delta: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub beta: f64,
    pub b: BoundFn,
    /// Full-vector innovation second moment `E|ξ|²`.
    pub sigma2: f64,
}

impl DriftConstants {
    /// The largest step size with γ < 1: `2Δ/(3K₁²)`.
    pub fn step_size_threshold(&self) -> f64 {
        2.0 * self.delta / (3.0 * self.k1 * self.k1)
    }
}

/// The one-step Lyapunov contraction `E V(θ') ≤ γ·V(θ) + K(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftCertificate {
    pub gamma: f64,
    pub lambda: f64,
    pub constants: DriftConstants,
}

impl DriftCertificate {
    /// Builds the certificate, enforcing `γ ∈ (0, 1)`.
    ///
    /// A step size at or above `2Δ/(3K₁²)` has γ ≥ 1 and is rejected with
    /// the threshold in the error.
    pub fn new(constants: DriftConstants, lambda: f64) -> Result<Self> {
        assert!(constants.delta > 0.0, "delta must be positive");
        assert!(constants.k1 > 0.0, "k1 must be positive");
        assert!(
            constants.k2 >= 0.0 && constants.k3 >= 0.0,
            "k2, k3 must be nonnegative"
        );
        assert!(constants.beta >= 1.0, "beta must be at least 1");
        assert!(constants.sigma2 >= 0.0, "sigma2 must be nonnegative");
        assert!(
            constants.b.is_valid(),
            "envelope coefficients must be nonnegative"
        );
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "step size must satisfy 0 < lambda <= 1, got {lambda}"
            )));
        }
        let threshold = constants.step_size_threshold();
        if lambda >= threshold {
            return Err(Error::StepSizeTooLarge { lambda, threshold });
        }
        let gamma = 1.0 - 2.0 * lambda * constants.delta
            + 3.0 * lambda * lambda * constants.k1 * constants.k1;
        if !(gamma > 0.0 && gamma < 1.0) {
            // λ < 2Δ/(3K₁²) forces γ < 1; γ ≤ 0 means the constants are
            // mutually inconsistent (Δ > √3·K₁ contradicts the growth bound).
            return Err(Error::Config(alloc::format!(
                "drift factor gamma = {gamma} is not in (0, 1); the constants are inconsistent"
            )));
        }
        Ok(DriftCertificate {
            gamma,
            lambda,
            constants,
        })
    }

    /// `K(y) = λ(σ² + 2b(y)) + 3λ²(K₂²|y|^{2β} + K₃²)`.
    pub fn k_of(&self, y: &[f64]) -> f64 {
        let c = &self.constants;
        let y_2beta = math::powf(vecmath::norm_sq(y), c.beta);
        self.lambda * (c.sigma2 + 2.0 * c.b.eval(y))
            + 3.0 * self.lambda * self.lambda * (c.k2 * c.k2 * y_2beta + c.k3 * c.k3)
    }

    /// The uniform-in-time second-moment bound
    /// `|θ₀|² + γ/(1−γ)·[(σ² + 2·M_b) + 3·(K₂²·M_y + K₃²)]`, where
    /// `M_y ≥ E|Y₀|^{2β}` and `M_b ≥ E b(Y₀)`.
    pub fn moment_bound(&self, theta0: &[f64], m_b: f64, m_y: f64) -> MomentBound {
        assert!(
            m_b >= 0.0 && m_y >= 0.0,
            "moment bounds must be nonnegative"
        );
        let c = &self.constants;
        let value = vecmath::norm_sq(theta0)
            + self.gamma / (1.0 - self.gamma)
                * ((c.sigma2 + 2.0 * m_b) + 3.0 * (c.k2 * c.k2 * m_y + c.k3 * c.k3));
        MomentBound {
            value,
            theta0_norm_sq: vecmath::norm_sq(theta0),
            gamma: self.gamma,
            sigma2: c.sigma2,
            m_b,
            m_y,
            k2: c.k2,
            k3: c.k3,
        }
    }
}

/// Composes the one-step drift bound over a data realization `y_1, …, y_k`:
/// `γ^k·V(θ) + Σ_{i=1..k} γ^{i−1}·K(y_i)` (an empty sequence returns `v0`).
pub fn compose_drift(cert: &DriftCertificate, v0: f64, ys: &[Vec<f64>]) -> f64 {
    let k = ys.len() as i32;
    let mut bound = math::powi(cert.gamma, k) * v0;
    let mut weight = 1.0;
    for y in ys {
        bound += weight * cert.k_of(y);
        weight *= cert.gamma;
    }
    bound
}

/// Uniform-in-time bound on `E|θ_t|²` with its inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentBound {
    pub value: f64,
    pub theta0_norm_sq: f64,
    pub gamma: f64,
    pub sigma2: f64,
    pub m_b: f64,
    pub m_y: f64,
    pub k2: f64,
    pub k3: f64,
}

impl MomentBound {
    /// Tail bound `P(|θ_t| > n) ≤ value/n²` for all t (Markov's inequality),
    /// capped at 1.
    pub fn tail_probability(&self, n: f64) -> f64 {
        assert!(n > 0.0);
        (self.value / (n * n)).min(1.0)
    }
}

/// Monte Carlo check of the drift bound at one grid point. A non-finite
/// `mc_mean` records an update value that blew up there.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftPointCheck {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    pub mc_mean: f64,
    pub bound: f64,
    pub std_error: f64,
    pub passed: bool,
}

/// Result of [`verify_drift_mc`]: every grid point's check.
#[derive(Clone, Debug)]
pub struct DriftReport {
    pub points: Vec<DriftPointCheck>,
    pub samples_per_point: usize,
    /// Largest `(mc_mean − bound)/bound` seen, violations or not.
    pub max_relative_excess: f64,
}

impl DriftReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.passed)
    }

    pub fn points_checked(&self) -> usize {
        self.points.len()
    }

    pub fn violations(&self) -> impl Iterator<Item = &DriftPointCheck> {
        self.points.iter().filter(|p| !p.passed)
    }
}

/// Monte Carlo check of the drift bound: for every `(θ, y)` grid point the
/// sample mean of `|θ − λH(θ,y) + √λξ|²` over `n_samples` innovations must
/// not exceed `γ|θ|² + K(y)` by more than three standard errors.
///
/// Each point draws from its own generator derived from `(seed, point)`, so
/// the verification is deterministic and order-independent. A non-finite
/// update value at a grid point is recorded as a violation there.
pub fn verify_drift_mc<M: UpdateModel + ?Sized>(
    model: &M,
    noise: &NoiseModel,
    cert: &DriftCertificate,
    thetas: &[Vec<f64>],
    ys: &[Vec<f64>],
    n_samples: usize,
    seed: u64,
) -> DriftReport {
    assert!(
        n_samples >= 1000,
        "the drift verifier needs at least 10^3 samples per point"
    );
    let d = model.param_dim();
    assert_eq!(noise.dim(), d, "noise dimension must match the model");

    let mut report = DriftReport {
        points: Vec::with_capacity(thetas.len() * ys.len()),
        samples_per_point: n_samples,
        max_relative_excess: f64::NEG_INFINITY,
    };
    let root_lambda = math::sqrt(cert.lambda);
    let mut h = vec![0.0; d];
    let mut displaced = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut point_index = 0u64;
    for theta in thetas {
        for y in ys {
            let bound = cert.gamma * vecmath::norm_sq(theta) + cert.k_of(y);
            model.eval_into(theta, y, &mut h);
            if !vecmath::all_finite(&h) {
                report.points.push(DriftPointCheck {
                    theta: theta.clone(),
                    y: y.clone(),
                    mc_mean: f64::NAN,
                    bound,
                    std_error: f64::NAN,
                    passed: false,
                });
                point_index += 1;
                continue;
            }
            for i in 0..d {
                displaced[i] = theta[i] - cert.lambda * h[i];
            }
            let mut rng = derive_rng(seed, point_index, role::DRIFT_VERIFY);
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for s in 0..n_samples {
                noise.sample_into(&mut rng, &mut xi);
                let mut v = 0.0;
                for i in 0..d {
                    let coord = displaced[i] + root_lambda * xi[i];
                    v += coord * coord;
                }
                let delta = v - mean;
                mean += delta / (s + 1) as f64;
                m2 += delta * (v - mean);
            }
            let std_error = math::sqrt(m2 / ((n_samples - 1) as f64 * n_samples as f64));
            let excess = (mean - bound) / bound.abs().max(f64::MIN_POSITIVE);
            report.max_relative_excess = report.max_relative_excess.max(excess);
            report.points.push(DriftPointCheck {
                theta: theta.clone(),
                y: y.clone(),
                mc_mean: mean,
                bound,
                std_error,
                passed: mean <= bound + 3.0 * std_error,
            });
            point_index += 1;
        }
    }
    report
}

/// Log of the Lebesgue volume of the d-ball of the given radius,
/// `(d/2)·ln π + d·ln r − ln Γ(d/2 + 1)`; log-gamma keeps it finite up to
/// d ~ 10³.
pub fn ln_ball_volume(d: usize, radius: f64) -> f64 {
    assert!(d >= 1 && radius > 0.0);
    let half_d = d as f64 / 2.0;
    half_d * math::ln(core::f64::consts::PI) + d as f64 * math::ln(radius)
        - math::lgamma(half_d + 1.0)
}

/// The minorization lower bound `Q(θ, y, ·) ≥ α_n·ν_n(·)` on the ball `B_n`,
/// with `ν_n` uniform on `B_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinorizationCertificate {
    /// Ball index n (chain states and data points restricted to `B_n`).
    pub n: u32,
    pub d: usize,
    pub lambda: f64,
    /// Standardized displacement radius `R(n)`.
    pub radius: f64,
    /// Density floor `C(n) = inf of the innovation density over B_{R(n)}`
    /// (may underflow to 0; `ln_density_floor` stays exact).
    pub density_floor: f64,
    pub ln_density_floor: f64,
    /// The reported coefficient, clamped into (0, 1].
    pub alpha: f64,
    /// Log of the unclamped coefficient `C(n)·Leb(B_n)/λ^{d/2}`.
    pub ln_alpha_raw: f64,
    /// True when the raw coefficient exceeded 1 and was capped (a lower
    /// bound larger than any probability is vacuously 1).
    pub clamped: bool,
}

/// Builds the minorization certificate from growth constants
/// `(K₁, K₂, K₃, β)`, the step size, the innovation law and the ball
/// index:
///
/// ```text
/// R(n) = (2n + λ(K₁n + K₂n^β + K₃)) / √λ
/// C(n) = inf { f(x) : |x| ≤ R(n) }
/// α_n  = C(n)·Leb(B_n) / λ^{d/2}
/// ```
///
/// The statement holds for every `λ ∈ (0, 1]`, not just below the drift
/// threshold. Degenerate noise has no density and is rejected.
pub fn minorization_cert(
    k1: f64,
    k2: f64,
    k3: f64,
    beta: f64,
    lambda: f64,
    noise: &NoiseModel,
    n: u32,
) -> Result<MinorizationCertificate> {
    assert!(
        k1 >= 0.0 && k2 >= 0.0 && k3 >= 0.0,
        "growth constants must be nonnegative"
    );
    assert!(beta >= 1.0, "growth exponent must satisfy beta >= 1");
    assert!(n >= 1, "ball index must be at least 1");
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Config(alloc::format!(
            "step size must satisfy 0 < lambda <= 1, got {lambda}"
        )));
    }
    if noise.is_degenerate() {
        return Err(Error::UnsupportedNoise(
            "zero noise has no density, so no minorization holds",
        ));
    }
    let d = noise.dim();
    let nf = n as f64;
    let radius =
        (2.0 * nf + lambda * (k1 * nf + k2 * math::powf(nf, beta) + k3)) / math::sqrt(lambda);
    let ln_density_floor = noise.ln_inf_density_on_ball(radius);
    let ln_alpha_raw =
        ln_density_floor + ln_ball_volume(d, nf) - (d as f64 / 2.0) * math::ln(lambda);
    let clamped = ln_alpha_raw > 0.0;
    let alpha = if clamped {
        1.0
    } else {
        math::exp(ln_alpha_raw)
    };
    Ok(MinorizationCertificate {
        n,
        d,
        lambda,
        radius,
        density_floor: math::exp(ln_density_floor),
        ln_density_floor,
        alpha,
        ln_alpha_raw,
        clamped,
    })
}

/// Test sets `A ⊆ B_n` with a closed-form uniform measure `ν_n(A)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BallSubset {
    /// The full ball, `ν_n = 1`.
    Full,
    /// The half with nonnegative first coordinate, `ν_n = 1/2`.
    UpperHalf,
    /// A centered sub-ball of the given radius, `ν_n = (radius/n)^d`.
    SubBall { radius: f64 },
    /// The empty set, `ν_n = 0`.
    Empty,
}

impl BallSubset {
    /// `ν_n(A) = Leb(A ∩ B_n)/Leb(B_n)`.
    pub fn nu_measure(&self, n: u32, d: usize) -> f64 {
        match *self {
            BallSubset::Full => 1.0,
            BallSubset::UpperHalf => 0.5,
            BallSubset::SubBall { radius } => {
                assert!(
                    radius >= 0.0 && radius <= n as f64,
                    "sub-ball must sit inside B_n"
                );
                math::powi(radius / n as f64, d as i32)
            }
            BallSubset::Empty => 0.0,
        }
    }

    pub fn contains(&self, x: &[f64], n: u32) -> bool {
        let inside = vecmath::norm_sq(x) <= (n as f64) * (n as f64);
        match *self {
            BallSubset::Full => inside,
            BallSubset::UpperHalf => inside && x[0] >= 0.0,
            BallSubset::SubBall { radius } => vecmath::norm_sq(x) <= radius * radius,
            BallSubset::Empty => false,
        }
    }
}

/// Result of [`verify_minorization_mc`] at one `(θ, y, A)` triple.
#[derive(Clone, Debug, PartialEq)]
pub struct MinorizationCheck {
    /// Monte Carlo estimate of `Q(θ, y, A) = P(θ − λH + √λξ ∈ A)`.
    pub q_hat: f64,
    /// Certified lower bound `α_n·ν_n(A)`.
    pub lower_bound: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub passed: bool,
}

/// Monte Carlo check of the minorization bound at one point: estimates
/// `Q(θ, y, A)` and requires `q̂ ≥ α_n·ν_n(A) − 3·SE`.
///
/// Both `θ` and `y` must lie in `B_n`, where the certificate applies.
#[allow(clippy::too_many_arguments)]
pub fn verify_minorization_mc<M: UpdateModel + ?Sized>(
    model: &M,
    noise: &NoiseModel,
    cert: &MinorizationCertificate,
    theta: &[f64],
    y: &[f64],
    subset: &BallSubset,
    n_samples: usize,
    seed: u64,
) -> Result<MinorizationCheck> {
    let d = model.param_dim();
    assert_eq!(noise.dim(), d, "noise dimension must match the model");
    let nf = cert.n as f64;
    if vecmath::norm_sq(theta) > nf * nf {
        return Err(Error::Config(alloc::format!(
            "theta must lie in the certificate ball B_{}",
            cert.n
        )));
    }
    if vecmath::norm_sq(y) > nf * nf {
        return Err(Error::Config(alloc::format!(
            "y must lie in the certificate ball B_{}",
            cert.n
        )));
    }
    assert!(
        n_samples >= 1000,
        "the minorization verifier needs at least 10^3 samples"
    );

    let mut h = vec![0.0; d];
    model.eval_into(theta, y, &mut h);
    if !vecmath::all_finite(&h) {
        return Err(Error::NonFiniteDrift {
            theta: theta.to_vec(),
        });
    }
    let mut displaced = vec![0.0; d];
    for i in 0..d {
        displaced[i] = theta[i] - cert.lambda * h[i];
    }
    let root_lambda = math::sqrt(cert.lambda);
    let mut rng = derive_rng(seed, 0, role::MINORIZE_VERIFY);
    let mut xi = vec![0.0; d];
    let mut next_state = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..n_samples {
        noise.sample_into(&mut rng, &mut xi);
        for i in 0..d {
            next_state[i] = displaced[i] + root_lambda * xi[i];
        }
        if subset.contains(&next_state, cert.n) {
            hits += 1;
        }
    }
    let q_hat = hits as f64 / n_samples as f64;
    let std_error = math::sqrt(q_hat * (1.0 - q_hat) / n_samples as f64);
    let lower_bound = cert.alpha * subset.nu_measure(cert.n, d);
    let passed = q_hat >= lower_bound - 3.0 * std_error;
    Ok(MinorizationCheck {
        q_hat,
        lower_bound,
        std_error,
        n_samples,
        passed,
    })
}
