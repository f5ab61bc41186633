//! The chain recursion `θ_{t+1} = θ_t − λ·H(θ_t, Y_t) + √λ·ξ_{t+1}` and its
//! reproducible ensembles.
//!
//! A single chain is strictly sequential. Chains of an ensemble are
//! independent work units: chain `i` derives its generators from
//! `(seed, i, role)`, so results do not depend on execution order and a
//! parallel driver (see the companion crate) produces bit-identical output.
//! Only checkpointed states are stored — horizons up to 10⁶ steps must not
//! hold full trajectories in memory.
//!
//! Divergence is detected, recorded and contained rather than propagated: a
//! state counts as diverged when a coordinate is non-finite or
//! `|θ| > 10¹⁰` ([`DIVERGENCE_RADIUS`]). The chain halts there with
//! `diverged_at` set; in an ensemble this is per-chain and never fatal to
//! the others.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::UpdateModel;
use crate::noise::NoiseModel;
use crate::rng::{derive_rng, role};
use crate::stream::StreamModel;
use crate::vecmath;

/// States with Euclidean norm beyond this are treated as diverged, so that
/// superlinear blow-ups terminate cleanly instead of overflowing.
pub const DIVERGENCE_RADIUS: f64 = 1e10;

/// Immutable description of one chain run.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    lambda: f64,
    horizon: usize,
    theta0: Vec<f64>,
    seed: u64,
    checkpoints: Vec<usize>,
}

impl ChainConfig {
    /// Validates `0 < λ ≤ 1`, a finite initial state, and strictly
    /// increasing checkpoints within `[0, horizon]`.
    pub fn new(
        lambda: f64,
        horizon: usize,
        theta0: Vec<f64>,
        seed: u64,
        checkpoints: Vec<usize>,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "step size must satisfy 0 < lambda <= 1, got {lambda}"
            )));
        }
        if theta0.is_empty() {
            return Err(Error::Config(
                "theta0 must have dimension at least 1".into(),
            ));
        }
        if !vecmath::all_finite(&theta0) {
            return Err(Error::Config("theta0 must be finite".into()));
        }
        if !checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = checkpoints.last() {
            if last > horizon {
                return Err(Error::Config(alloc::format!(
                    "checkpoint {last} exceeds horizon {horizon}"
                )));
            }
        }
        Ok(ChainConfig {
            lambda,
            horizon,
            theta0,
            seed,
            checkpoints,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn checkpoints(&self) -> &[usize] {
        &self.checkpoints
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Checkpointed states of one chain. `states[k]` is the state at time
/// `checkpoints[k]`; on divergence the lists end at the last checkpoint
/// reached and `diverged_at` holds the first diverged time.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub checkpoints: Vec<usize>,
    pub states: Vec<Vec<f64>>,
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    /// State at checkpoint time `t`, if it was recorded and reached.
    pub fn state_at(&self, t: usize) -> Option<&[f64]> {
        self.checkpoints
            .binary_search(&t)
            .ok()
            .map(|k| self.states[k].as_slice())
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// One update `θ − λ·H(θ, y) + √λ·ξ`.
///
/// Dimension mismatches are configuration errors; a non-finite update value
/// is a divergence signal carrying the offending state.
pub fn step<M: UpdateModel + ?Sized>(
    theta: &[f64],
    y: &[f64],
    xi: &[f64],
    lambda: f64,
    model: &M,
) -> Result<Vec<f64>> {
    if theta.len() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            context: "step: theta",
            expected: model.param_dim(),
            actual: theta.len(),
        });
    }
    if xi.len() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            context: "step: xi",
            expected: model.param_dim(),
            actual: xi.len(),
        });
    }
    if y.len() != model.data_dim() {
        return Err(Error::DimensionMismatch {
            context: "step: y",
            expected: model.data_dim(),
            actual: y.len(),
        });
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Config(alloc::format!(
            "step size must satisfy 0 < lambda <= 1, got {lambda}"
        )));
    }
    let mut drift = vec![0.0; theta.len()];
    model.eval_into(theta, y, &mut drift);
    if !vecmath::all_finite(&drift) {
        return Err(Error::NonFiniteDrift {
            theta: theta.to_vec(),
        });
    }
    let root_lambda = math::sqrt(lambda);
    Ok(theta
        .iter()
        .zip(drift.iter().zip(xi))
        .map(|(t, (h, x))| t - lambda * h + root_lambda * x)
        .collect())
}

fn check_setup<M: UpdateModel + ?Sized>(
    model: &M,
    stream: &StreamModel,
    noise: &NoiseModel,
    cfg: &ChainConfig,
) -> Result<()> {
    if cfg.theta0.len() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            context: "theta0 vs model",
            expected: model.param_dim(),
            actual: cfg.theta0.len(),
        });
    }
    if noise.dim() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            context: "noise vs model",
            expected: model.param_dim(),
            actual: noise.dim(),
        });
    }
    if stream.dim() != model.data_dim() {
        return Err(Error::DimensionMismatch {
            context: "stream vs model",
            expected: model.data_dim(),
            actual: stream.dim(),
        });
    }
    Ok(())
}

// NaN counts as diverged.
fn diverged(norm_sq: f64) -> bool {
    norm_sq.is_nan() || norm_sq > DIVERGENCE_RADIUS * DIVERGENCE_RADIUS
}

/// Runs the chain with index 0; see [`run_chain_indexed`].
pub fn run_chain<M: UpdateModel + ?Sized>(
    model: &M,
    stream: &StreamModel,
    noise: &NoiseModel,
    cfg: &ChainConfig,
) -> Result<Trajectory> {
    run_chain_indexed(model, stream, noise, cfg, 0)
}

/// Runs one chain of an ensemble. Generators are derived from
/// `(cfg.seed, chain_index, role)`, with the data stream and the innovation
/// noise on separate roles, so the two processes are independent and the
/// whole run is a pure function of `(cfg, chain_index)`.
pub fn run_chain_indexed<M: UpdateModel + ?Sized>(
    model: &M,
    stream: &StreamModel,
    noise: &NoiseModel,
    cfg: &ChainConfig,
    chain_index: u64,
) -> Result<Trajectory> {
    check_setup(model, stream, noise, cfg)?;
    let d = model.param_dim();
    let m = model.data_dim();

    let mut noise_rng = derive_rng(cfg.seed, chain_index, role::NOISE);
    let mut stream_rng = derive_rng(cfg.seed, chain_index, role::STREAM);
    let mut state = stream.stationary_init(&mut stream_rng);

    let mut theta = cfg.theta0.clone();
    let mut y = vec![0.0; m];
    let mut drift = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let root_lambda = math::sqrt(cfg.lambda);

    let mut trajectory = Trajectory {
        checkpoints: Vec::with_capacity(cfg.checkpoints.len()),
        states: Vec::with_capacity(cfg.checkpoints.len()),
        diverged_at: None,
    };
    let mut next_checkpoint = cfg.checkpoints.iter().copied().peekable();

    if diverged(vecmath::norm_sq(&theta)) {
        trajectory.diverged_at = Some(0);
        return Ok(trajectory);
    }
    if next_checkpoint.peek() == Some(&0) {
        next_checkpoint.next();
        trajectory.checkpoints.push(0);
        trajectory.states.push(theta.clone());
    }

    for t in 0..cfg.horizon {
        stream.next(&mut state, &mut stream_rng, &mut y);
        model.eval_into(&theta, &y, &mut drift);
        if !vecmath::all_finite(&drift) {
            trajectory.diverged_at = Some(t + 1);
            return Ok(trajectory);
        }
        noise.sample_into(&mut noise_rng, &mut xi);
        for i in 0..d {
            theta[i] += -cfg.lambda * drift[i] + root_lambda * xi[i];
        }
        if diverged(vecmath::norm_sq(&theta)) {
            trajectory.diverged_at = Some(t + 1);
            return Ok(trajectory);
        }
        if next_checkpoint.peek() == Some(&(t + 1)) {
            next_checkpoint.next();
            trajectory.checkpoints.push(t + 1);
            trajectory.states.push(theta.clone());
        }
    }
    Ok(trajectory)
}

/// Checkpointed states of `n_chains` mutually independent chains, indexed by
/// chain.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    checkpoints: Vec<usize>,
    trajectories: Vec<Trajectory>,
}

impl EnsembleResult {
    /// Assembles an ensemble from per-chain trajectories (in chain order).
    /// Used by parallel drivers; the merge is deterministic by construction.
    pub fn from_trajectories(checkpoints: Vec<usize>, trajectories: Vec<Trajectory>) -> Self {
        EnsembleResult {
            checkpoints,
            trajectories,
        }
    }

    pub fn checkpoints(&self) -> &[usize] {
        &self.checkpoints
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn n_chains(&self) -> usize {
        self.trajectories.len()
    }

    pub fn diverged_count(&self) -> usize {
        self.trajectories.iter().filter(|t| t.diverged()).count()
    }

    /// States of all chains that reached checkpoint `t`.
    pub fn surviving_states_at(&self, t: usize) -> Vec<&[f64]> {
        self.trajectories
            .iter()
            .filter_map(|traj| traj.state_at(t))
            .collect()
    }
}

/// Runs `n_chains` independent chains sequentially. Chain `i` is exactly
/// [`run_chain_indexed`] with index `i`, so a singleton ensemble equals
/// [`run_chain`] and any parallel driver that merges by index reproduces
/// this result bit-for-bit.
pub fn run_ensemble<M: UpdateModel + ?Sized>(
    model: &M,
    stream: &StreamModel,
    noise: &NoiseModel,
    cfg: &ChainConfig,
    n_chains: usize,
) -> Result<EnsembleResult> {
    if n_chains == 0 {
        return Err(Error::Config("ensemble needs at least one chain".into()));
    }
    check_setup(model, stream, noise, cfg)?;
    let mut trajectories = Vec::with_capacity(n_chains);
    for i in 0..n_chains {
        trajectories.push(run_chain_indexed(model, stream, noise, cfg, i as u64)?);
    }
    Ok(EnsembleResult {
        checkpoints: cfg.checkpoints.clone(),
        trajectories,
    })
}
