//! Empirical checkers and constant estimators for the dissipativity and
//! growth conditions.
//!
//! Both conditions quantify over all of `R^d × R^m`, so no sampled check can
//! prove them. What these checkers produce are *pointwise certificates*: a
//! pass means "no violation found on this grid", and reports say exactly
//! which points were tried. The grids therefore favour decade coverage in
//! `|θ|` (the conditions bite asymptotically) over local density.
//!
//! - [`check_dissipativity`]: `⟨H(θ,y), θ⟩ ≥ Δ|θ|² − b(y)` pointwise, exact
//!   arithmetic, zero tolerance.
//! - [`check_growth`]: `|H(θ,y)| ≤ K₁|θ| + K₂|y|^β + K₃` pointwise.
//! - [`fit_constants`]: estimates the largest Δ compatible with a candidate
//!   envelope `b` on the grid, plus growth constants by a dominating
//!   least-squares envelope. Fitted constants are re-verified through the
//!   checkers before being reported; infeasibility yields an explicit
//!   "no certificate" result rather than an error.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::math;
use crate::model::{BoundFn, UpdateModel};
use crate::stream::StreamModel;
use crate::vecmath;

/// Default radius decades for the θ grid.
pub const DEFAULT_RADII: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];

/// Number of sphere directions per radius in the standard plan (for d > 1).
pub const DEFAULT_DIRECTIONS: usize = 32;

/// Number of stationary data draws in the standard plan.
pub const DEFAULT_DATA_SAMPLES: usize = 1000;

/// The points at which an assumption is tested: every pair from
/// `thetas × ys`.
#[derive(Clone, Debug)]
pub struct SamplingPlan {
    pub thetas: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub label: String,
}

impl SamplingPlan {
    pub fn from_points(thetas: Vec<Vec<f64>>, ys: Vec<Vec<f64>>) -> Self {
        let label = format!("explicit {}x{} grid", thetas.len(), ys.len());
        SamplingPlan { thetas, ys, label }
    }

    /// The standard plan: the origin plus sphere directions scaled to the
    /// radius decades [`DEFAULT_RADII`], crossed with stationary draws from
    /// the data stream.
    pub fn standard<R: Rng + ?Sized>(d: usize, stream: &StreamModel, rng: &mut R) -> Self {
        let directions: Vec<Vec<f64>> = if d == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            (0..DEFAULT_DIRECTIONS)
                .map(|_| {
                    let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    let n = vecmath::norm(&u);
                    if n > 0.0 {
                        for v in u.iter_mut() {
                            *v /= n;
                        }
                    } else {
                        u[0] = 1.0;
                    }
                    u
                })
                .collect()
        };
        let mut thetas = vec![vec![0.0; d]];
        for &radius in DEFAULT_RADII.iter() {
            for dir in &directions {
                thetas.push(dir.iter().map(|v| v * radius).collect());
            }
        }
        let ys = (0..DEFAULT_DATA_SAMPLES)
            .map(|_| stream.draw_stationary(rng))
            .collect();
        let label = format!(
            "standard plan: radii {:?} x {} directions, {} stationary data draws",
            DEFAULT_RADII,
            directions.len(),
            DEFAULT_DATA_SAMPLES
        );
        SamplingPlan { thetas, ys, label }
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty() || self.ys.is_empty()
    }
}

/// Which assumption a report is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssumptionId {
    Dissipativity,
    Growth,
}

/// A grid point where the tested inequality failed. For dissipativity the
/// inequality is `lhs = ⟨H,θ⟩ ≥ rhs = Δ|θ|² − b(y)`; for growth it is
/// `lhs = |H| ≤ rhs = K₁|θ| + K₂|y|^β + K₃`. A non-finite `lhs` records a
/// blown-up update value.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a pointwise check. At most [`AssumptionReport::MAX_RECORDED`]
/// violations are kept verbatim; `violation_count` is the full count.
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub assumption: AssumptionId,
    pub constants: String,
    pub grid: String,
    pub points_checked: usize,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
}

impl AssumptionReport {
    pub const MAX_RECORDED: usize = 100;

    /// Pass means "no violation found on the grid" — nothing stronger.
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, theta: &[f64], y: &[f64], lhs: f64, rhs: f64) {
        self.violation_count += 1;
        if self.violations.len() < Self::MAX_RECORDED {
            self.violations.push(Violation {
                theta: theta.to_vec(),
                y: y.to_vec(),
                lhs,
                rhs,
            });
        }
    }
}

/// Checks `⟨H(θ,y), θ⟩ ≥ Δ|θ|² − b(y)` at every plan point, comparing with
/// tolerance zero (the inequality is closed-form, no Monte Carlo is
/// involved).
pub fn check_dissipativity<M: UpdateModel + ?Sized>(
    model: &M,
    delta: f64,
    b: &BoundFn,
    plan: &SamplingPlan,
) -> AssumptionReport {
    assert!(delta > 0.0, "dissipativity constant must be positive");
    assert!(b.is_valid(), "envelope coefficients must be nonnegative");
    let mut report = AssumptionReport {
        assumption: AssumptionId::Dissipativity,
        constants: format!("delta={delta}, b={b:?}"),
        grid: plan.label.clone(),
        points_checked: plan.len(),
        violations: Vec::new(),
        violation_count: 0,
    };
    let mut h = vec![0.0; model.param_dim()];
    for theta in &plan.thetas {
        let theta_sq = vecmath::norm_sq(theta);
        for y in &plan.ys {
            model.eval_into(theta, y, &mut h);
            let rhs = delta * theta_sq - b.eval(y);
            if !vecmath::all_finite(&h) {
                // blown-up update: diagnostic violation with lhs = NaN
                report.record(theta, y, f64::NAN, rhs);
                continue;
            }
            let lhs = vecmath::dot(&h, theta);
            if lhs < rhs {
                report.record(theta, y, lhs, rhs);
            }
        }
    }
    report
}

/// Checks `|H(θ,y)| ≤ K₁|θ| + K₂|y|^β + K₃` at every plan point.
pub fn check_growth<M: UpdateModel + ?Sized>(
    model: &M,
    k1: f64,
    k2: f64,
    k3: f64,
    beta: f64,
    plan: &SamplingPlan,
) -> AssumptionReport {
    assert!(beta >= 1.0, "growth exponent must satisfy beta >= 1");
    assert!(
        k1 >= 0.0 && k2 >= 0.0 && k3 >= 0.0,
        "growth constants must be nonnegative"
    );
    let mut report = AssumptionReport {
        assumption: AssumptionId::Growth,
        constants: format!("k1={k1}, k2={k2}, k3={k3}, beta={beta}"),
        grid: plan.label.clone(),
        points_checked: plan.len(),
        violations: Vec::new(),
        violation_count: 0,
    };
    let mut h = vec![0.0; model.param_dim()];
    for theta in &plan.thetas {
        let theta_norm = vecmath::norm(theta);
        for y in &plan.ys {
            model.eval_into(theta, y, &mut h);
            let rhs = k1 * theta_norm + k2 * math::powf(vecmath::norm(y), beta) + k3;
            if !vecmath::all_finite(&h) {
                report.record(theta, y, f64::NAN, rhs);
                continue;
            }
            let lhs = vecmath::norm(&h);
            if lhs > rhs {
                report.record(theta, y, lhs, rhs);
            }
        }
    }
    report
}

/// Constants estimated by [`fit_constants`], already re-verified on the
/// fitting grid.
#[derive(Clone, Debug)]
pub struct FittedConstants {
    /// Largest grid-feasible dissipativity constant (snapped down to a log
    /// grid with ~6% spacing).
    pub delta: f64,
    /// Per data draw: `(|y|, smallest b(y) that works at the fitted Δ)`.
    /// Always pointwise below the candidate envelope.
    pub b_samples: Vec<(f64, f64)>,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub beta: f64,
}

const BETA_CANDIDATES: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];
// log-grid spacing for the fitted delta: 10^(1/40) ≈ 1.059
const DELTA_GRID_STEPS_PER_DECADE: f64 = 40.0;

/// Estimates `(Δ̂, b-samples, K̂₁, K̂₂, K̂₃, β̂)` on the plan, relative to the
/// candidate envelope `b`.
///
/// `Δ̂` is the largest value on a log grid such that
/// `⟨H(θ,y), θ⟩ ≥ Δ̂|θ|² − b(y)` holds at every plan point. The growth
/// constants are fitted in stages, each where it dominates: `β̂` and `K̂₂` by
/// least squares of `|H|` against `(|y|^β, 1)` on the smallest-`|θ|` row
/// (picking the candidate β with the smallest residual), `K̂₁` by least
/// squares of the remainder against `|θ|` over the whole grid, and `K̂₃`
/// inflated until the envelope dominates every sample. Everything is
/// re-verified through [`check_dissipativity`] / [`check_growth`] before
/// being returned.
///
/// Returns `None` — no certificate found — when no positive Δ is feasible on
/// the grid (e.g. anti-dissipative updates) or the update blows up at a grid
/// point.
pub fn fit_constants<M: UpdateModel + ?Sized>(
    model: &M,
    b: &BoundFn,
    plan: &SamplingPlan,
) -> Option<FittedConstants> {
    assert!(!plan.is_empty(), "fitting needs a non-empty plan");
    assert!(b.is_valid(), "envelope coefficients must be nonnegative");
    let n_theta = plan.thetas.len();
    let n_y = plan.ys.len();

    // single evaluation pass: ⟨H,θ⟩ and |H| per pair
    let mut h = vec![0.0; model.param_dim()];
    let mut h_dot = vec![0.0; n_theta * n_y];
    let mut h_norm = vec![0.0; n_theta * n_y];
    for (i, theta) in plan.thetas.iter().enumerate() {
        for (j, y) in plan.ys.iter().enumerate() {
            model.eval_into(theta, y, &mut h);
            if !vecmath::all_finite(&h) {
                return None;
            }
            h_dot[i * n_y + j] = vecmath::dot(&h, theta);
            h_norm[i * n_y + j] = vecmath::norm(&h);
        }
    }
    let theta_sq: Vec<f64> = plan.thetas.iter().map(|t| vecmath::norm_sq(t)).collect();
    let b_vals: Vec<f64> = plan.ys.iter().map(|y| b.eval(y)).collect();

    // largest feasible delta given the envelope: the infimum over the grid
    // of (⟨H,θ⟩ + b(y)) / |θ|²
    let mut delta_sup = f64::INFINITY;
    for i in 0..n_theta {
        if theta_sq[i] == 0.0 {
            continue;
        }
        for j in 0..n_y {
            let ratio = (h_dot[i * n_y + j] + b_vals[j]) / theta_sq[i];
            if ratio < delta_sup {
                delta_sup = ratio;
            }
        }
    }
    if !delta_sup.is_finite() || delta_sup <= 0.0 {
        return None;
    }
    let delta = snap_down_log(delta_sup);

    // smallest per-sample envelope that works at the fitted delta
    let b_samples: Vec<(f64, f64)> = plan
        .ys
        .iter()
        .enumerate()
        .map(|(j, y)| {
            let mut required: f64 = 0.0;
            for i in 0..n_theta {
                required = required.max(delta * theta_sq[i] - h_dot[i * n_y + j]);
            }
            (vecmath::norm(y), required)
        })
        .collect();

    // growth constants, staged so each one is identified where it dominates:
    // beta and k2 on the smallest-|θ| row (the θ term is absent there), k1 on
    // the full grid given k2, then k3 inflated until the envelope dominates
    let theta_norm: Vec<f64> = theta_sq.iter().map(|s| math::sqrt(*s)).collect();
    let y_norm: Vec<f64> = plan.ys.iter().map(|y| vecmath::norm(y)).collect();
    let star = theta_norm
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(core::cmp::Ordering::Equal))
        .map(|(i, _)| i)?;

    let mut beta = BETA_CANDIDATES[0];
    let mut k2 = 0.0;
    let mut best_rms = f64::INFINITY;
    for &candidate in BETA_CANDIDATES.iter() {
        let pairs: Vec<(f64, f64)> = (0..n_y)
            .map(|j| (math::powf(y_norm[j], candidate), h_norm[star * n_y + j]))
            .collect();
        let (slope, intercept) = lls2(&pairs);
        let slope = slope.max(0.0);
        let rms = math::sqrt(
            pairs
                .iter()
                .map(|&(x, t)| {
                    let r = t - slope * x - intercept;
                    r * r
                })
                .sum::<f64>()
                / n_y as f64,
        );
        // strict improvement required, so ties resolve to the smallest beta
        if rms < best_rms - 1e-12 {
            best_rms = rms;
            beta = candidate;
            k2 = slope;
        }
    }
    let y_pow: Vec<f64> = y_norm.iter().map(|n| math::powf(*n, beta)).collect();

    let pairs: Vec<(f64, f64)> = (0..n_theta)
        .flat_map(|i| (0..n_y).map(move |j| (i, j)))
        .map(|(i, j)| (theta_norm[i], h_norm[i * n_y + j] - k2 * y_pow[j]))
        .collect();
    let (k1, _) = lls2(&pairs);
    let k1 = k1.max(0.0);

    let mut k3: f64 = 0.0;
    for i in 0..n_theta {
        for j in 0..n_y {
            k3 = k3.max(h_norm[i * n_y + j] - k1 * theta_norm[i] - k2 * y_pow[j]);
        }
    }

    // fitted constants must pass their own checks before being reported
    if !check_dissipativity(model, delta, b, plan).passed() {
        return None;
    }
    if !check_growth(model, k1, k2, k3, beta, plan).passed() {
        return None;
    }
    Some(FittedConstants {
        delta,
        b_samples,
        k1,
        k2,
        k3,
        beta,
    })
}

/// Largest 10^(k/40) not exceeding `x`.
fn snap_down_log(x: f64) -> f64 {
    let k = math::floor(DELTA_GRID_STEPS_PER_DECADE * math::log10(x));
    let mut snapped = math::powf(10.0, k / DELTA_GRID_STEPS_PER_DECADE);
    // guard the floor against rounding in powf
    while snapped > x {
        snapped = math::powf(10.0, (k - 1.0) / DELTA_GRID_STEPS_PER_DECADE);
    }
    snapped
}

/// Ordinary least squares for `t ≈ slope·x + intercept`. Falls back to a
/// flat fit through the mean when the x column is (numerically) constant.
fn lls2(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_t = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxt = 0.0;
    for &(x, t) in pairs {
        sxx += (x - mean_x) * (x - mean_x);
        sxt += (x - mean_x) * (t - mean_t);
    }
    if sxx <= 1e-300 {
        return (0.0, mean_t);
    }
    let slope = sxt / sxx;
    (slope, mean_t - slope * mean_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnModel, LinearModel};

    fn scalar_plan(thetas: &[f64], ys: &[f64]) -> SamplingPlan {
        SamplingPlan::from_points(
            thetas.iter().map(|&t| vec![t]).collect(),
            ys.iter().map(|&y| vec![y]).collect(),
        )
    }

    #[test]
    fn linear_dissipativity_passes_with_exact_constants() {
        // Young's inequality makes Δ = 1/2 with b = |y|²/2 exact for θ − y.
        let model = LinearModel::new(1);
        let b = BoundFn::Quadratic { c0: 0.0, c2: 0.5 };
        let plan = scalar_plan(
            &[-1000.0, -10.0, -1.0, -0.1, 0.0, 0.1, 1.0, 10.0, 1000.0],
            &[-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0],
        );
        let report = check_dissipativity(&model, 0.5, &b, &plan);
        assert!(report.passed(), "violations: {:?}", report.violations);
    }

    #[test]
    fn linear_dissipativity_fails_above_supremum() {
        // At θ = y = 1: lhs = ⟨θ−y, θ⟩ = 0, rhs = 0.9 − 0.5 = 0.4.
        let model = LinearModel::new(1);
        let b = BoundFn::Quadratic { c0: 0.0, c2: 0.5 };
        let plan = scalar_plan(&[1.0], &[1.0]);
        let report = check_dissipativity(&model, 0.9, &b, &plan);
        assert_eq!(report.violation_count, 1);
        let v = &report.violations[0];
        assert_eq!(v.lhs, 0.0);
        assert!((v.rhs - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_update_is_not_dissipative() {
        let model = FnModel::new(1, 1, |_, _, out: &mut [f64]| out.fill(0.0));
        let b = BoundFn::Quadratic { c0: 0.0, c2: 0.0 };
        let plan = scalar_plan(&[1.0], &[0.0]);
        let report = check_dissipativity(&model, 0.1, &b, &plan);
        assert!(!report.passed());
    }

    #[test]
    fn linear_growth_triangle_inequality() {
        let model = LinearModel::new(1);
        let plan = scalar_plan(&[-5.0, 0.0, 2.0, 100.0], &[-3.0, 0.0, 1.0]);
        assert!(check_growth(&model, 1.0, 1.0, 0.0, 1.0, &plan).passed());
    }

    #[test]
    fn linear_growth_fails_with_small_k1() {
        // θ = 4, y = 0: |H| = 4 > 0.5·4 = 2
        let model = LinearModel::new(1);
        let plan = scalar_plan(&[4.0], &[0.0]);
        let report = check_growth(&model, 0.5, 1.0, 0.0, 1.0, &plan);
        assert_eq!(report.violation_count, 1);
        assert_eq!(report.violations[0].lhs, 4.0);
        assert_eq!(report.violations[0].rhs, 2.0);
    }

    #[test]
    fn non_finite_update_is_recorded_as_violation() {
        let model = FnModel::new(1, 1, |_, _, out: &mut [f64]| out[0] = f64::INFINITY);
        let plan = scalar_plan(&[1.0], &[0.0]);
        let b = BoundFn::Quadratic { c0: 1.0, c2: 0.0 };
        assert!(!check_dissipativity(&model, 0.1, &b, &plan).passed());
        assert!(!check_growth(&model, 1.0, 1.0, 1.0, 1.0, &plan).passed());
    }

    #[test]
    fn monotonicity_in_delta() {
        // if (Δ, b) passes then every Δ' ≤ Δ passes
        let model = LinearModel::new(1);
        let b = BoundFn::Quadratic { c0: 0.0, c2: 0.5 };
        let plan = scalar_plan(&[-2.0, -1.0, 1.0, 2.0, 5.0], &[-1.0, 0.0, 1.0]);
        assert!(check_dissipativity(&model, 0.5, &b, &plan).passed());
        for delta in [0.4, 0.25, 0.1, 0.01] {
            assert!(check_dissipativity(&model, delta, &b, &plan).passed());
        }
    }

    #[test]
    fn anti_dissipative_model_has_no_certificate() {
        // H(θ, y) = −θ: ⟨H, θ⟩ = −|θ|² < 0 for large |θ|, no Δ > 0 works.
        let model = FnModel::new(1, 1, |t: &[f64], _: &[f64], out: &mut [f64]| out[0] = -t[0]);
        let b = BoundFn::Quadratic { c0: 1.0, c2: 1.0 };
        let plan = scalar_plan(&[-1000.0, -1.0, 1.0, 1000.0], &[-1.0, 0.0, 1.0]);
        assert!(fit_constants(&model, &b, &plan).is_none());
    }

    #[test]
    fn snap_down_stays_below() {
        for x in [0.500001, 0.73, 1.0, 17.3, 0.003] {
            let s = snap_down_log(x);
            assert!(s <= x && s > 0.8 * x, "snap({x}) = {s}");
        }
    }

    #[test]
    fn lls2_recovers_line_and_handles_constant_column() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 3.0)).collect();
        let (slope, intercept) = lls2(&pairs);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 3.0).abs() < 1e-12);
        let flat = vec![(1.0, 5.0), (1.0, 7.0)];
        assert_eq!(lls2(&flat), (0.0, 6.0));
    }
}
