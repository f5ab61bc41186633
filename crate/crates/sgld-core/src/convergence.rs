//! Empirical total-variation convergence between chain laws.
//!
//! The distance between two ensembles is estimated as the total variation of
//! their binned empirical marginals, `½·Σ_bins |p̂_i − q̂_i|`, on shared bin
//! edges with explicit under/overflow bins. For d > 1 the TV of 1-D
//! projections (first coordinate and one seeded random direction, reporting
//! the larger) is used: projection TV lower-bounds the true TV, so decay of
//! the report is necessary-condition evidence at desk scale.
//!
//! The binned estimator is positively biased — two finite same-law samples
//! never produce a distance of exactly zero — so every decay report carries
//! a noise floor: the same estimate computed between two *independent
//! same-law* ensembles, which is the resolution limit of the experiment.
//!
//! For the linear benchmark `H(θ, y) = θ − y` with an AR(1) data stream the
//! marginal law of `θ_t` is exactly Gaussian, and [`linear_chain_oracle`]
//! propagates its mean and variance in closed form for cross-checking the
//! simulated ensembles.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::chain::{run_ensemble, ChainConfig, EnsembleResult};
use crate::error::{Error, Result};
use crate::math;
use crate::model::UpdateModel;
use crate::noise::NoiseModel;
use crate::rng::{derive_rng, derive_seed, role};
use crate::stream::StreamModel;
use crate::vecmath;

/// Binned total-variation estimate between two 1-D sample sets.
#[derive(Clone, Debug, PartialEq)]
pub struct TvEstimate {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    /// Histogram counts: `[underflow, bin_0, …, bin_{bins−1}, overflow]`.
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
    /// `½·Σ |p̂_i − q̂_i|` over all entries including the overflow bins.
    pub value: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// First-order (delta method) standard error of `value`; near zero
    /// distance the estimator's positive bias dominates this, which is what
    /// the noise floor is for.
    pub std_error: f64,
}

/// Total variation between the binned empirical laws of `a` and `b` on
/// shared edges over `range`, samples outside the range counted in
/// under/overflow bins.
pub fn histogram_tv(a: &[f64], b: &[f64], bins: usize, range: (f64, f64)) -> TvEstimate {
    assert!(
        !a.is_empty() && !b.is_empty(),
        "histogram_tv needs non-empty samples"
    );
    assert!(bins >= 1, "histogram_tv needs at least one bin");
    let (lo, mut hi) = range;
    assert!(
        lo.is_finite() && hi.is_finite() && lo <= hi,
        "invalid histogram range"
    );
    if lo == hi {
        // degenerate range: one catch-all bin still gives a well-defined TV
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts_a = vec![0u64; bins + 2];
    let mut counts_b = vec![0u64; bins + 2];
    let index = |x: f64| -> usize {
        if x < lo {
            0
        } else if x >= hi {
            bins + 1
        } else {
            let k = ((x - lo) / width) as usize;
            k.min(bins - 1) + 1
        }
    };
    for &x in a {
        counts_a[index(x)] += 1;
    }
    for &x in b {
        counts_b[index(x)] += 1;
    }
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    for (&ca, &cb) in counts_a.iter().zip(&counts_b) {
        let p = ca as f64 / na;
        let q = cb as f64 / nb;
        value += 0.5 * (p - q).abs();
        var += 0.25 * (p * (1.0 - p) / na + q * (1.0 - q) / nb);
    }
    TvEstimate {
        lo,
        hi,
        bins,
        counts_a,
        counts_b,
        value,
        n_a: a.len(),
        n_b: b.len(),
        std_error: math::sqrt(var),
    }
}

/// Projects states onto a direction (inner products).
pub fn project(states: &[&[f64]], direction: &[f64]) -> Vec<f64> {
    states.iter().map(|s| vecmath::dot(s, direction)).collect()
}

/// Default bin count for decay experiments.
pub const DEFAULT_TV_BINS: usize = 50;

/// TV at one checkpoint of a decay experiment.
#[derive(Clone, Debug)]
pub struct TvDecayPoint {
    pub t: usize,
    pub estimate: TvEstimate,
    /// Same-law TV between two independent ensembles started like A — the
    /// resolution limit at this checkpoint.
    pub noise_floor: f64,
}

/// Result of a two-start decay experiment.
#[derive(Clone, Debug)]
pub struct TvDecayReport {
    pub points: Vec<TvDecayPoint>,
    pub diverged_a: usize,
    pub diverged_b: usize,
    pub diverged_reference: usize,
    /// The seeded random projection direction (None in d = 1, where no
    /// projection is needed).
    pub projection: Option<Vec<f64>>,
    /// Checkpoints dropped because fewer than two chains survived in some
    /// ensemble.
    pub skipped_checkpoints: Vec<usize>,
}

impl TvDecayReport {
    pub fn describe(&self) -> String {
        alloc::format!(
            "{} checkpoints, divergences A/B/ref = {}/{}/{}",
            self.points.len(),
            self.diverged_a,
            self.diverged_b,
            self.diverged_reference
        )
    }
}

/// Runs two ensembles from different initializations (plus one reference
/// ensemble sharing A's law for the noise floor) and reports the binned TV
/// between their marginals at every checkpoint.
///
/// The three ensembles use disjoint derived seed spaces, so A and B are
/// independent (not coupled). Monotone decay of the series is *not* part of
/// the contract — only eventual smallness is.
pub fn two_start_decay<M: UpdateModel + ?Sized>(
    model: &M,
    stream: &StreamModel,
    noise: &NoiseModel,
    cfg: &ChainConfig,
    theta0_b: Vec<f64>,
    n_chains: usize,
    bins: usize,
) -> Result<TvDecayReport> {
    let cfg_a = cfg.clone().with_seed(derive_seed(cfg.seed(), 1));
    let cfg_b = ChainConfig::new(
        cfg.lambda(),
        cfg.horizon(),
        theta0_b,
        derive_seed(cfg.seed(), 2),
        cfg.checkpoints().to_vec(),
    )?;
    let cfg_ref = cfg.clone().with_seed(derive_seed(cfg.seed(), 3));

    let ens_a = run_ensemble(model, stream, noise, &cfg_a, n_chains)?;
    let ens_b = run_ensemble(model, stream, noise, &cfg_b, n_chains)?;
    let ens_ref = run_ensemble(model, stream, noise, &cfg_ref, n_chains)?;
    tv_decay_from_ensembles(&ens_a, &ens_b, &ens_ref, bins, cfg.seed())
}

/// Estimates the TV decay series from already-run ensembles (A vs B, with a
/// reference ensemble distributed like A for the noise floor). Split out so
/// a parallel driver can produce the ensembles and still get the identical
/// report.
pub fn tv_decay_from_ensembles(
    ens_a: &EnsembleResult,
    ens_b: &EnsembleResult,
    ens_ref: &EnsembleResult,
    bins: usize,
    seed: u64,
) -> Result<TvDecayReport> {
    if ens_a.checkpoints() != ens_b.checkpoints() || ens_a.checkpoints() != ens_ref.checkpoints() {
        return Err(Error::Config("ensembles have different checkpoints".into()));
    }
    let d = dimension_of(ens_a)
        .or_else(|| dimension_of(ens_b))
        .ok_or_else(|| Error::Config("ensemble A has no recorded states".into()))?;

    // projection directions: first coordinate, plus one seeded random
    // direction in d > 1 (report the larger TV of the two)
    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    directions.push(e1);
    let projection = if d > 1 {
        let mut rng = derive_rng(seed, 0, role::PROJECTION);
        let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = vecmath::norm(&u);
        if n > 0.0 {
            for v in u.iter_mut() {
                *v /= n;
            }
        } else {
            u[0] = 1.0;
        }
        directions.push(u.clone());
        Some(u)
    } else {
        None
    };

    let mut report = TvDecayReport {
        points: Vec::new(),
        diverged_a: ens_a.diverged_count(),
        diverged_b: ens_b.diverged_count(),
        diverged_reference: ens_ref.diverged_count(),
        projection,
        skipped_checkpoints: Vec::new(),
    };

    for &t in ens_a.checkpoints() {
        let states_a = ens_a.surviving_states_at(t);
        let states_b = ens_b.surviving_states_at(t);
        let states_ref = ens_ref.surviving_states_at(t);
        if states_a.len() < 2 || states_b.len() < 2 || states_ref.len() < 2 {
            report.skipped_checkpoints.push(t);
            continue;
        }
        let mut best: Option<(TvEstimate, f64)> = None;
        for dir in &directions {
            let pa = project(&states_a, dir);
            let pb = project(&states_b, dir);
            let pr = project(&states_ref, dir);
            let range_ab = pooled_range(&pa, &pb);
            let estimate = histogram_tv(&pa, &pb, bins, range_ab);
            let range_ar = pooled_range(&pa, &pr);
            let floor = histogram_tv(&pa, &pr, bins, range_ar).value;
            if best.as_ref().is_none_or(|(e, _)| estimate.value > e.value) {
                best = Some((estimate, floor));
            }
        }
        let (estimate, noise_floor) = best.expect("at least one direction");
        report.points.push(TvDecayPoint {
            t,
            estimate,
            noise_floor,
        });
    }
    Ok(report)
}

fn dimension_of(ens: &EnsembleResult) -> Option<usize> {
    ens.trajectories()
        .iter()
        .find_map(|t| t.states.first().map(|s| s.len()))
}

/// Binning range `[μ̂ − 6σ̂, μ̂ + 6σ̂]` of the pooled sample.
fn pooled_range(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = (a.len() + b.len()) as f64;
    let mean = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / n;
    let ss: f64 = a.iter().chain(b).map(|x| (x - mean) * (x - mean)).sum();
    let sd = math::sqrt(ss / n);
    (mean - 6.0 * sd, mean + 6.0 * sd)
}

/// Exact Gaussian marginal of the scalar linear chain
/// `θ_{t+1} = (1−λ)θ_t + λY_t + √λ·ξ_{t+1}` with standard normal `ξ`,
/// stationary AR(1) data `Y_{t+1} = ρY_t + √(1−ρ²)ε` (standard normal
/// marginal), all independent of each other and of the deterministic θ₀.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianLaw {
    pub mean: f64,
    pub var: f64,
}

/// Propagates the joint second moments of `(θ_t, Y_t)` and returns the law
/// of `θ_t` for `t = 0..=horizon`:
///
/// ```text
/// mean_{t+1} = (1−λ)·mean_t
/// cov_{t+1}  = ρ(1−λ)·cov_t + ρλ                (cov of θ with current Y)
/// var_{t+1}  = (1−λ)²·var_t + 2λ(1−λ)·cov_t + λ² + λ
/// ```
pub fn linear_chain_oracle(lambda: f64, rho: f64, horizon: usize, theta0: f64) -> Vec<GaussianLaw> {
    assert!(
        lambda > 0.0 && lambda <= 1.0,
        "oracle needs 0 < lambda <= 1"
    );
    assert!(rho.abs() < 1.0, "oracle needs |rho| < 1");
    assert!(theta0.is_finite());
    let mut laws = Vec::with_capacity(horizon + 1);
    let mut mean = theta0;
    let mut var = 0.0;
    let mut cov = 0.0;
    laws.push(GaussianLaw { mean, var });
    let one_minus = 1.0 - lambda;
    for _ in 0..horizon {
        let next_var =
            one_minus * one_minus * var + 2.0 * lambda * one_minus * cov + lambda * lambda + lambda;
        let next_cov = rho * one_minus * cov + rho * lambda;
        mean *= one_minus;
        var = next_var;
        cov = next_cov;
        laws.push(GaussianLaw { mean, var });
    }
    laws
}

/// Unbiased sample mean and covariance of a set of states.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    /// Row-major d×d unbiased covariance.
    pub cov: Vec<Vec<f64>>,
    pub n: usize,
}

impl Moments {
    pub fn variance(&self, coord: usize) -> f64 {
        self.cov[coord][coord]
    }

    /// Mean of `|θ|²` over the states: `|mean|² + trace(cov)·(n−1)/n`.
    pub fn mean_norm_sq(&self) -> f64 {
        let trace: f64 = (0..self.mean.len()).map(|i| self.cov[i][i]).sum();
        vecmath::norm_sq(&self.mean) + trace * (self.n - 1) as f64 / self.n as f64
    }
}

/// Sample moments of the given states; `None` with fewer than two states
/// (all chains diverged, or nearly so).
pub fn ensemble_moments(states: &[&[f64]]) -> Option<Moments> {
    if states.len() < 2 {
        return None;
    }
    let n = states.len();
    let d = states[0].len();
    let mut mean = vec![0.0; d];
    for s in states {
        for i in 0..d {
            mean[i] += s[i];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for s in states {
        for i in 0..d {
            let di = s[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (s[j] - mean[j]);
            }
        }
    }
    // symmetric fill needs both indices; the range loop is the clearer form
    #[allow(clippy::needless_range_loop)]
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    Some(Moments { mean, cov, n })
}
