//! Stationary data processes feeding the chain.
//!
//! Every kind is generated from a stationary initial state, so the marginal
//! law of `Y_t` is the same for all `t ≥ 0` (the two-sided index set of a
//! strictly stationary process is never consumed here, only the one-sided
//! law). Moment oracles for `E|Y₀|^{2β}` are exposed in closed form where
//! the stationary marginal is standard normal; everything else goes through
//! the Monte Carlo estimator.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;
use crate::model;
use crate::vecmath;

/// Specification of a stationary process on `R^m`. Immutable and shareable;
/// the evolving part lives in a per-chain [`StreamState`].
#[derive(Clone, Debug, PartialEq)]
pub enum StreamModel {
    /// I.i.d. standard normal vectors.
    IidGaussian { m: usize },
    /// Per-coordinate AR(1): `Y_{t+1} = ρ·Y_t + √(1−ρ²)·ε_{t+1}` with
    /// standard normal innovations. The innovation scaling makes the
    /// stationary marginal exactly `N(0, I)` for every `|ρ| < 1`.
    Ar1 { m: usize, rho: f64 },
    /// A radial squash of an inner stream into the closed ball of radius
    /// `bound`: `y ↦ bound·tanh(|y|)·y/|y|`. For m = 1 this is
    /// `bound·tanh(y)`. A deterministic image of a stationary process is
    /// stationary, and `|Y_t| ≤ bound` holds on every path.
    Bounded { inner: Box<StreamModel>, bound: f64 },
    /// Labelled pairs `Y_t = (Z_t, L_t)` for regression experiments: the
    /// features `Z_t ∈ R^{d0}` follow per-coordinate AR(1) (stationary
    /// standard normal marginal) and the labels are
    /// `L_t = tanh(W*·Z_t + g*) + sd·ε_t` with i.i.d. normal label noise.
    /// `weights` packs `(W*, g*)` exactly like
    /// [`RegressionModel`](crate::model::RegressionModel) packs its
    /// parameters.
    Regression {
        d0: usize,
        d1: usize,
        weights: Vec<f64>,
        label_noise_sd: f64,
        rho: f64,
    },
    /// The degenerate stationary process `Y_t ≡ value`.
    Constant { value: Vec<f64> },
}

/// Evolving state owned by a single chain. Opaque; its content depends on
/// the stream kind (empty for memoryless kinds).
#[derive(Clone, Debug, PartialEq)]
pub struct StreamState(Vec<f64>);

impl StreamState {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl StreamModel {
    pub fn iid_gaussian(m: usize) -> Self {
        assert!(m >= 1, "stream dimension must be at least 1");
        StreamModel::IidGaussian { m }
    }

    pub fn ar1(m: usize, rho: f64) -> Result<Self> {
        assert!(m >= 1, "stream dimension must be at least 1");
        if !(rho.is_finite() && rho.abs() < 1.0) {
            return Err(Error::Config(alloc::format!(
                "ar1 coefficient must satisfy |rho| < 1, got {rho}"
            )));
        }
        Ok(StreamModel::Ar1 { m, rho })
    }

    pub fn bounded(inner: StreamModel, bound: f64) -> Result<Self> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "bounded-transform bound must be finite and nonnegative, got {bound}"
            )));
        }
        Ok(StreamModel::Bounded {
            inner: Box::new(inner),
            bound,
        })
    }

    pub fn regression(
        d0: usize,
        d1: usize,
        weights: Vec<f64>,
        label_noise_sd: f64,
        rho: f64,
    ) -> Result<Self> {
        assert!(
            d0 >= 1 && d1 >= 1,
            "regression dimensions must be at least 1"
        );
        let expected = d0 * d1 + d1;
        if weights.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "regression stream weights (W*, g*)",
                expected,
                actual: weights.len(),
            });
        }
        if !vecmath::all_finite(&weights) {
            return Err(Error::Config(
                "regression stream weights must be finite".into(),
            ));
        }
        if !(label_noise_sd >= 0.0 && label_noise_sd.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "label_noise_sd must be finite and nonnegative, got {label_noise_sd}"
            )));
        }
        if !(rho.is_finite() && rho.abs() < 1.0) {
            return Err(Error::Config(alloc::format!(
                "regression feature AR(1) coefficient must satisfy |rho| < 1, got {rho}"
            )));
        }
        Ok(StreamModel::Regression {
            d0,
            d1,
            weights,
            label_noise_sd,
            rho,
        })
    }

    pub fn constant(value: Vec<f64>) -> Result<Self> {
        assert!(!value.is_empty(), "stream dimension must be at least 1");
        if !vecmath::all_finite(&value) {
            return Err(Error::Config("constant stream value must be finite".into()));
        }
        Ok(StreamModel::Constant { value })
    }

    /// Dimension m of the emitted vectors.
    pub fn dim(&self) -> usize {
        match self {
            StreamModel::IidGaussian { m } => *m,
            StreamModel::Ar1 { m, .. } => *m,
            StreamModel::Bounded { inner, .. } => inner.dim(),
            StreamModel::Regression { d0, d1, .. } => d0 + d1,
            StreamModel::Constant { value } => value.len(),
        }
    }

    /// Draws the initial state from the stationary law, so the first emitted
    /// value is already a stationary draw.
    pub fn stationary_init<R: Rng + ?Sized>(&self, rng: &mut R) -> StreamState {
        match self {
            StreamModel::IidGaussian { .. } | StreamModel::Constant { .. } => {
                StreamState(Vec::new())
            }
            StreamModel::Ar1 { m, .. } => {
                StreamState((0..*m).map(|_| rng.sample(StandardNormal)).collect())
            }
            StreamModel::Bounded { inner, .. } => inner.stationary_init(rng),
            StreamModel::Regression { d0, .. } => {
                StreamState((0..*d0).map(|_| rng.sample(StandardNormal)).collect())
            }
        }
    }

    /// Emits the next value into `out` and advances the state.
    pub fn next<R: Rng + ?Sized>(&self, state: &mut StreamState, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim(), "next: output length mismatch");
        match self {
            StreamModel::IidGaussian { .. } => {
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
            }
            StreamModel::Ar1 { rho, .. } => {
                out.copy_from_slice(&state.0);
                let c = math::sqrt(1.0 - rho * rho);
                for s in state.0.iter_mut() {
                    let eps: f64 = rng.sample(StandardNormal);
                    *s = rho * *s + c * eps;
                }
            }
            StreamModel::Bounded { inner, bound } => {
                inner.next(state, rng, out);
                squash_into_ball(out, *bound);
            }
            StreamModel::Regression {
                d0,
                d1,
                weights,
                label_noise_sd,
                rho,
            } => {
                let (features, labels) = out.split_at_mut(*d0);
                features.copy_from_slice(&state.0);
                model::one_layer_predict(*d0, *d1, weights, features, labels);
                for l in labels.iter_mut() {
                    let eps: f64 = rng.sample(StandardNormal);
                    *l += label_noise_sd * eps;
                }
                let c = math::sqrt(1.0 - rho * rho);
                for s in state.0.iter_mut() {
                    let eps: f64 = rng.sample(StandardNormal);
                    *s = rho * *s + c * eps;
                }
            }
            StreamModel::Constant { value } => out.copy_from_slice(value),
        }
    }

    /// One independent stationary draw (init + emit).
    pub fn draw_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut state = self.stationary_init(rng);
        let mut out = vec![0.0; self.dim()];
        self.next(&mut state, rng, &mut out);
        out
    }

    /// Closed-form `E|Y₀|^{2β}` where available: the Gaussian-marginal kinds
    /// use `E[(χ²_m)^β] = 2^β·Γ(m/2 + β)/Γ(m/2)`, the constant kind is
    /// deterministic. `None` means "estimate it".
    pub fn exact_moment_2beta(&self, beta: f64) -> Option<f64> {
        match self {
            StreamModel::IidGaussian { m } | StreamModel::Ar1 { m, .. } => {
                Some(gaussian_moment_2beta(*m, beta))
            }
            StreamModel::Constant { value } => Some(math::powf(vecmath::norm_sq(value), beta)),
            StreamModel::Bounded { .. } | StreamModel::Regression { .. } => None,
        }
    }
}

/// Radial squash into the closed ball of radius `bound`.
fn squash_into_ball(y: &mut [f64], bound: f64) {
    let n = vecmath::norm(y);
    if n > 0.0 {
        let scale = bound * math::tanh(n) / n;
        for v in y.iter_mut() {
            *v *= scale;
        }
    }
}

/// `E|Z|^{2β}` for `Z ~ N(0, I_m)`: `2^β · Γ(m/2 + β) / Γ(m/2)`.
pub fn gaussian_moment_2beta(m: usize, beta: f64) -> f64 {
    assert!(m >= 1 && beta >= 0.0);
    let half_m = m as f64 / 2.0;
    math::exp(beta * core::f64::consts::LN_2 + math::lgamma(half_m + beta) - math::lgamma(half_m))
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Estimates `(E|Y₀|^{2β}, E b(Y₀))` from `n` independent stationary draws.
///
/// Errors with the offending sample index if `b` returns a non-finite value.
pub fn estimate_moments<R, F>(
    stream: &StreamModel,
    beta: f64,
    b: F,
    n: usize,
    rng: &mut R,
) -> Result<(MomentEstimate, MomentEstimate)>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    assert!(n >= 1, "moment estimation needs at least one sample");
    assert!(beta >= 1.0, "moment exponent must satisfy beta >= 1");
    let mut y_acc = Accumulator::new();
    let mut b_acc = Accumulator::new();
    for index in 0..n {
        let y = stream.draw_stationary(rng);
        let y_moment = math::powf(vecmath::norm_sq(&y), beta);
        let b_value = b(&y);
        if !b_value.is_finite() {
            return Err(Error::NonFiniteSample { index });
        }
        y_acc.push(y_moment);
        b_acc.push(b_value);
    }
    Ok((y_acc.estimate(), b_acc.estimate()))
}

/// Streaming mean/variance (Welford).
struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn estimate(&self) -> MomentEstimate {
        let std_error = if self.n > 1 {
            math::sqrt(self.m2 / ((self.n - 1) as f64 * self.n as f64))
        } else {
            0.0
        };
        MomentEstimate {
            mean: self.mean,
            std_error,
            n: self.n,
        }
    }
}
