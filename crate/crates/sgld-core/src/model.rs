//! Concrete update functions `H(θ, y)`.
//!
//! Three families are built in:
//!
//! - [`LinearModel`]: `H(θ, y) = θ − y`, a closed-form benchmark whose
//!   dissipativity and growth constants are known exactly
//!   (Δ = 1/2, b(y) = |y|²/2, K₁ = K₂ = 1, K₃ = 0, β = 1 by Young's and the
//!   triangle inequality).
//! - [`RegressionModel`]: the gradient of the regularized one-layer
//!   regression loss `U(θ, y) = |tanh(Wz + g) − l|² + κ|θ|²`.
//! - [`MlpSpec`] with [`TamedMlp`] / [`UntamedMlp`]: the gradient of a
//!   bias-free multilayer perceptron loss with polynomial regularization
//!   `|h(z, θ) − l|² + η/(2(r+1))·|θ|^{2(r+1)}`, optionally divided by the
//!   taming factor `1 + √λ·|θ|^{2r}`. The raw gradient grows like
//!   `|θ|^{2r+1}`, which the plain recursion cannot absorb; taming caps the
//!   effective drift at `(η/√λ)·|θ|` and restores stability.
//!
//! Gradients are reverse-mode accumulated by hand for these fixed
//! architectures and checked against [`finite_diff_grad`] in the tests.
//!
//! The activation everywhere is `tanh`, which is bounded together with its
//! derivative by [`ACTIVATION_BOUND`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::vecmath;

/// Bound on `|tanh|` and `|tanh′|`.
pub const ACTIVATION_BOUND: f64 = 1.0;

fn activation(x: f64) -> f64 {
    math::tanh(x)
}

/// An update function `H: R^d × R^m → R^d` together with its metadata.
pub trait UpdateModel {
    /// Dimension d of the chain state.
    fn param_dim(&self) -> usize;

    /// Dimension m of the data points.
    fn data_dim(&self) -> usize;

    /// Writes `H(θ, y)` into `out`. Panics if slice lengths don't match the
    /// declared dimensions; dimension errors on user input are raised at
    /// configuration time instead.
    fn eval_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]);

    /// Convenience allocating form of [`Self::eval_into`].
    fn eval(&self, theta: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.param_dim()];
        self.eval_into(theta, y, &mut out);
        out
    }

    /// Dissipativity/growth constants this model is known to satisfy, if any.
    fn declared_constants(&self) -> Option<DeclaredConstants> {
        None
    }

    /// True when `H` itself depends on the step size (the tamed scheme), in
    /// which case the model must be rebuilt for a different λ.
    fn lambda_dependent(&self) -> bool {
        false
    }
}

impl<M: UpdateModel + ?Sized> UpdateModel for &M {
    fn param_dim(&self) -> usize {
        (**self).param_dim()
    }
    fn data_dim(&self) -> usize {
        (**self).data_dim()
    }
    fn eval_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]) {
        (**self).eval_into(theta, y, out)
    }
    fn declared_constants(&self) -> Option<DeclaredConstants> {
        (**self).declared_constants()
    }
    fn lambda_dependent(&self) -> bool {
        (**self).lambda_dependent()
    }
}

impl<M: UpdateModel + ?Sized> UpdateModel for alloc::boxed::Box<M> {
    fn param_dim(&self) -> usize {
        (**self).param_dim()
    }
    fn data_dim(&self) -> usize {
        (**self).data_dim()
    }
    fn eval_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]) {
        (**self).eval_into(theta, y, out)
    }
    fn declared_constants(&self) -> Option<DeclaredConstants> {
        (**self).declared_constants()
    }
    fn lambda_dependent(&self) -> bool {
        (**self).lambda_dependent()
    }
}

/// A candidate envelope `b(y) ≥ 0` for the dissipativity condition. The two
/// shapes are the ones the built-in models produce: quadratic in `|y|` for
/// the linear and tamed models, quartic for the one-layer regression.
/// Coefficients must be nonnegative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundFn {
    /// `b(y) = c0 + c2·|y|²`
    Quadratic { c0: f64, c2: f64 },
    /// `b(y) = c0 + c4·|y|⁴`
    Quartic { c0: f64, c4: f64 },
}

impl BoundFn {
    pub fn eval(&self, y: &[f64]) -> f64 {
        let ns = vecmath::norm_sq(y);
        match *self {
            BoundFn::Quadratic { c0, c2 } => c0 + c2 * ns,
            BoundFn::Quartic { c0, c4 } => c0 + c4 * ns * ns,
        }
    }

    /// `E b(Y)` when `Y ~ N(0, I_m)`, using `E|Y|² = m` and
    /// `E|Y|⁴ = m(m+2)`.
    pub fn mean_under_std_gaussian(&self, m: usize) -> f64 {
        let m = m as f64;
        match *self {
            BoundFn::Quadratic { c0, c2 } => c0 + c2 * m,
            BoundFn::Quartic { c0, c4 } => c0 + c4 * m * (m + 2.0),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            BoundFn::Quadratic { c0, c2 } => c0 >= 0.0 && c2 >= 0.0,
            BoundFn::Quartic { c0, c4 } => c0 >= 0.0 && c4 >= 0.0,
        }
    }
}

/// Constants for the dissipativity condition
/// `⟨H(θ,y), θ⟩ ≥ delta·|θ|² − b(y)` and the growth condition
/// `|H(θ,y)| ≤ k1·|θ| + k2·|y|^beta + k3`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeclaredConstants {
    pub delta: f64,
    pub b: BoundFn,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub beta: f64,
}

/// `H(θ, y) = θ − y` (requires m = d).
#[derive(Clone, Debug)]
pub struct LinearModel {
    d: usize,
}

impl LinearModel {
    pub fn new(d: usize) -> Self {
        assert!(d >= 1, "model dimension must be at least 1");
        LinearModel { d }
    }
}

impl UpdateModel for LinearModel {
    fn param_dim(&self) -> usize {
        self.d
    }

    fn data_dim(&self) -> usize {
        self.d
    }

    fn eval_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]) {
        assert_eq!(theta.len(), self.d);
        assert_eq!(y.len(), self.d);
        assert_eq!(out.len(), self.d);
        for i in 0..self.d {
            out[i] = theta[i] - y[i];
        }
    }

    fn declared_constants(&self) -> Option<DeclaredConstants> {
        Some(DeclaredConstants {
            delta: 0.5,
            b: BoundFn::Quadratic { c0: 0.0, c2: 0.5 },
            k1: 1.0,
            k2: 1.0,
            k3: 0.0,
            beta: 1.0,
        })
    }
}

/// Shared one-layer prediction `out_j = tanh(⟨W_j, z⟩ + g_j)`, with `(W, g)`
/// packed row-major: `W[j][i]` at `j·d0 + i`, then `g[j]` at `d0·d1 + j`.
/// Also used by the regression data stream for its ground-truth labels.
pub(crate) fn one_layer_predict(d0: usize, d1: usize, weights: &[f64], z: &[f64], out: &mut [f64]) {
    debug_assert_eq!(weights.len(), d0 * d1 + d1);
    debug_assert_eq!(z.len(), d0);
    debug_assert_eq!(out.len(), d1);
    let (w, g) = weights.split_at(d0 * d1);
    for j in 0..d1 {
        let row = &w[j * d0..(j + 1) * d0];
        out[j] = activation(vecmath::dot(row, z) + g[j]);
    }
}

/// Gradient of the regularized one-layer regression loss
/// `U(θ, y) = |tanh(Wz + g) − l|² + κ|θ|²` with `θ = (W, g)` of length
/// `d0·d1 + d1` and `y = (z, l)` of length `d0 + d1`.
///
/// Parameter packing is row-major `W` followed by `g` (the convention shared
/// with the regression data stream's ground-truth weights); the bias enters
/// the chain rule as a constant input `z_{d0+1} = 1`.
#[derive(Clone, Debug)]
pub struct RegressionModel {
    d0: usize,
    d1: usize,
    kappa: f64,
}

impl RegressionModel {
    pub fn new(d0: usize, d1: usize, kappa: f64) -> Result<Self> {
        assert!(
            d0 >= 1 && d1 >= 1,
            "regression dimensions must be at least 1"
        );
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "regression regularization kappa must be finite and nonnegative, got {kappa}"
            )));
        }
        Ok(RegressionModel { d0, d1, kappa })
    }

    pub fn feature_dim(&self) -> usize {
        self.d0
    }

    pub fn label_dim(&self) -> usize {
        self.d1
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Prediction `h(z, θ) = tanh(Wz + g)`.
    pub fn predict(&self, theta: &[f64], z: &[f64], out: &mut [f64]) {
        assert_eq!(theta.len(), self.param_dim());
        one_layer_predict(self.d0, self.d1, theta, z, out);
    }

    /// Loss value `U(θ, y)`.
    pub fn loss(&self, theta: &[f64], y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.data_dim());
        let (z, l) = y.split_at(self.d0);
        let mut h = vec![0.0; self.d1];
        self.predict(theta, z, &mut h);
        let residual_sq: f64 = h.iter().zip(l).map(|(hj, lj)| (hj - lj) * (hj - lj)).sum();
        residual_sq + self.kappa * vecmath::norm_sq(theta)
    }
}

impl UpdateModel for RegressionModel {
    fn param_dim(&self) -> usize {
        self.d0 * self.d1 + self.d1
    }

    fn data_dim(&self) -> usize {
        self.d0 + self.d1
    }

    fn eval_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]) {
        assert_eq!(theta.len(), self.param_dim());
        assert_eq!(y.len(), self.data_dim());
        assert_eq!(out.len(), self.param_dim());
        let (z, l) = y.split_at(self.d0);
        let (w, g) = theta.split_at(self.d0 * self.d1);
        let (out_w, out_g) = out.split_at_mut(self.d0 * self.d1);
        for j in 0..self.d1 {
            let row = &w[j * self.d0..(j + 1) * self.d0];
            let pre = vecmath::dot(row, z) + g[j];
            let h = activation(pre);
            // d/dpre of |h_j − l_j|², with tanh′ = 1 − tanh²
            let r = 2.0 * (h - l[j]) * (1.0 - h * h);
            for i in 0..self.d0 {
                out_w[j * self.d0 + i] = r * z[i] + 2.0 * self.kappa * row[i];
            }
            out_g[j] = r + 2.0 * self.kappa * g[j];
        }
    }
}

/// Architecture of a bias-free multilayer perceptron
/// `h(z, θ) = tanh(W_n · tanh(W_{n−1} · … · tanh(W_1 z)))` with layer
/// dimensions `dims = [d_0, …, d_n]` and loss
/// `U(θ, y) = |h(z, θ) − l|² + η/(2(r+1))·|θ|^{2(r+1)}`.
///
/// Parameters pack layer-major, row-major within each layer: the entry of
/// `W_i ∈ R^{d_i × d_{i−1}}` mapping input `k` to output `j` sits at
/// `offset(i) + j·d_{i−1} + k` with `offset(i) = Σ_{v<i} d_{v−1}·d_v`.
///
/// The default regularization exponent is `r = (n+2)/2`, the weakest taming
/// with a full stability guarantee; smaller exponents down to `(n+1)/2`
/// (sufficient if quartic envelopes `b` are acceptable) or any `r ≥ 0` can
/// be set with [`Self::with_exponent`], without any claim attached.
#[derive(Clone, Debug)]
pub struct MlpSpec {
    dims: Vec<usize>,
    eta: f64,
    r: f64,
}

impl MlpSpec {
    pub fn new(dims: Vec<usize>, eta: f64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config(
                "mlp needs at least an input and an output layer".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::Config(
                "mlp layer dimensions must be at least 1".into(),
            ));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "mlp regularization eta must be positive and finite, got {eta}"
            )));
        }
        let n = dims.len() - 1;
        let r = (n as f64 + 2.0) / 2.0;
        Ok(MlpSpec { dims, eta, r })
    }

    /// Overrides the regularization/taming exponent.
    pub fn with_exponent(mut self, r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "mlp exponent r must be finite and nonnegative, got {r}"
            )));
        }
        self.r = r;
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of weight layers n.
    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn exponent(&self) -> f64 {
        self.r
    }

    /// Total parameter count `Σ d_{i−1}·d_i`.
    pub fn param_dim(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1]).sum()
    }

    /// Data dimension `d_0 + d_n`.
    pub fn data_dim(&self) -> usize {
        self.dims[0] + self.dims[self.dims.len() - 1]
    }

    /// Packing offset of layer `i` (1-indexed): `Σ_{v<i} d_{v−1}·d_v`.
    pub fn weight_offset(&self, layer: usize) -> usize {
        assert!(layer >= 1 && layer <= self.depth());
        self.dims[..layer].windows(2).map(|w| w[0] * w[1]).sum()
    }

    /// Forward pass `h(z, θ)`.
    pub fn predict(&self, theta: &[f64], z: &[f64], out: &mut [f64]) {
        assert_eq!(theta.len(), self.param_dim());
        assert_eq!(z.len(), self.dims[0]);
        assert_eq!(out.len(), *self.dims.last().unwrap());
        let acts = self.forward(theta, z);
        out.copy_from_slice(&acts[acts.len() - 1]);
    }

    /// Loss value `U(θ, y)` with `y = (z, l)`.
    pub fn loss(&self, theta: &[f64], y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.data_dim());
        let (z, l) = y.split_at(self.dims[0]);
        let acts = self.forward(theta, z);
        let h = &acts[acts.len() - 1];
        let residual_sq: f64 = h.iter().zip(l).map(|(hj, lj)| (hj - lj) * (hj - lj)).sum();
        let ns = vecmath::norm_sq(theta);
        residual_sq + self.eta / (2.0 * (self.r + 1.0)) * math::powf(ns, self.r + 1.0)
    }

    /// Post-activation values `x_1, …, x_n` (inputs excluded).
    fn forward(&self, theta: &[f64], z: &[f64]) -> Vec<Vec<f64>> {
        let n = self.depth();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut offset = 0;
        for i in 1..=n {
            let (rows, cols) = (self.dims[i], self.dims[i - 1]);
            let w = &theta[offset..offset + rows * cols];
            offset += rows * cols;
            let input: &[f64] = if i == 1 { z } else { &acts[i - 2] };
            let mut x = vec![0.0; rows];
            for j in 0..rows {
                x[j] = activation(vecmath::dot(&w[j * cols..(j + 1) * cols], input));
            }
            acts.push(x);
        }
        acts
    }

    /// Raw loss gradient `G(θ, y) = ∇_θ U(θ, y)` by reverse accumulation.
    pub fn raw_gradient_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]) {
        assert_eq!(theta.len(), self.param_dim());
        assert_eq!(y.len(), self.data_dim());
        assert_eq!(out.len(), self.param_dim());
        let (z, l) = y.split_at(self.dims[0]);
        let n = self.depth();
        let acts = self.forward(theta, z);

        // delta at the output layer: 2(h − l) ⊙ tanh′, with tanh′ = 1 − x²
        let h = &acts[n - 1];
        let mut delta: Vec<f64> = h
            .iter()
            .zip(l)
            .map(|(hj, lj)| 2.0 * (hj - lj) * (1.0 - hj * hj))
            .collect();

        let mut offset_end = self.param_dim();
        for i in (1..=n).rev() {
            let (rows, cols) = (self.dims[i], self.dims[i - 1]);
            let offset = offset_end - rows * cols;
            let w = &theta[offset..offset_end];
            let input: &[f64] = if i == 1 { z } else { &acts[i - 2] };
            for j in 0..rows {
                for k in 0..cols {
                    out[offset + j * cols + k] = delta[j] * input[k];
                }
            }
            if i > 1 {
                let mut next_delta = vec![0.0; cols];
                for (k, nd) in next_delta.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j in 0..rows {
                        acc += w[j * cols + k] * delta[j];
                    }
                    *nd = acc * (1.0 - input[k] * input[k]);
                }
                delta = next_delta;
            }
            offset_end = offset;
        }

        // regularizer gradient η·|θ|^{2r}·θ
        let reg = self.eta * math::powf(vecmath::norm_sq(theta), self.r);
        for (o, t) in out.iter_mut().zip(theta) {
            *o += reg * t;
        }
    }
}

/// The tamed update `H(θ, y) = G(θ, y) / (1 + √λ·|θ|^{2r})`. Depends on the
/// step size it is built with.
#[derive(Clone, Debug)]
pub struct TamedMlp {
    spec: MlpSpec,
    lambda: f64,
}

impl TamedMlp {
    pub fn new(spec: MlpSpec, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "taming step size must satisfy 0 < lambda <= 1, got {lambda}"
            )));
        }
        Ok(TamedMlp { spec, lambda })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The growth slope the taming guarantees: `K₁ = η/√λ`.
    pub fn k1(&self) -> f64 {
        self.spec.eta() / math::sqrt(self.lambda)
    }
}

impl UpdateModel for TamedMlp {
    fn param_dim(&self) -> usize {
        self.spec.param_dim()
    }

    fn data_dim(&self) -> usize {
        self.spec.data_dim()
    }

    fn eval_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]) {
        self.spec.raw_gradient_into(theta, y, out);
        let denom =
            1.0 + math::sqrt(self.lambda) * math::powf(vecmath::norm_sq(theta), self.spec.r);
        for o in out.iter_mut() {
            *o /= denom;
        }
    }

    fn lambda_dependent(&self) -> bool {
        true
    }
}

/// The raw update `H(θ, y) = G(θ, y)` — superlinear in `θ`, kept as the
/// divergence demonstration.
#[derive(Clone, Debug)]
pub struct UntamedMlp {
    spec: MlpSpec,
}

impl UntamedMlp {
    pub fn new(spec: MlpSpec) -> Self {
        UntamedMlp { spec }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }
}

impl UpdateModel for UntamedMlp {
    fn param_dim(&self) -> usize {
        self.spec.param_dim()
    }

    fn data_dim(&self) -> usize {
        self.spec.data_dim()
    }

    fn eval_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]) {
        self.spec.raw_gradient_into(theta, y, out);
    }
}

/// An update function given by a closure; mostly for tests and custom
/// experiments.
pub struct FnModel<F> {
    d: usize,
    m: usize,
    f: F,
    constants: Option<DeclaredConstants>,
}

impl<F: Fn(&[f64], &[f64], &mut [f64])> FnModel<F> {
    pub fn new(d: usize, m: usize, f: F) -> Self {
        FnModel {
            d,
            m,
            f,
            constants: None,
        }
    }

    pub fn with_constants(mut self, constants: DeclaredConstants) -> Self {
        self.constants = Some(constants);
        self
    }
}

impl<F: Fn(&[f64], &[f64], &mut [f64])> UpdateModel for FnModel<F> {
    fn param_dim(&self) -> usize {
        self.d
    }

    fn data_dim(&self) -> usize {
        self.m
    }

    fn eval_into(&self, theta: &[f64], y: &[f64], out: &mut [f64]) {
        assert_eq!(theta.len(), self.d);
        assert_eq!(y.len(), self.m);
        assert_eq!(out.len(), self.d);
        (self.f)(theta, y, out)
    }

    fn declared_constants(&self) -> Option<DeclaredConstants> {
        self.constants.clone()
    }
}

/// Central finite differences `(U(θ + h·e_i, y) − U(θ − h·e_i, y)) / (2h)`,
/// the oracle the analytic gradients are checked against.
pub fn finite_diff_grad<F>(u: F, theta: &[f64], y: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut probe = theta.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let up = u(&probe, y);
        probe[i] = orig - step;
        let down = u(&probe, y);
        probe[i] = orig;
        grad[i] = (up - down) / (2.0 * step);
    }
    grad
}
