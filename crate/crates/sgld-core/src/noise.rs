//! Innovation distributions for the chain noise ξ.
//!
//! Coordinates are independent with mean zero. The supported laws all have a
//! density that is strictly positive on every compact set, which is what the
//! minorization certificate needs; a law without that property (uniform on a
//! box, say) cannot be constructed here. The degenerate [`NoiseModel::zero`]
//! kind exists for deterministic experiments only — it has no density and is
//! rejected wherever one is required.
//!
//! Throughout the crate `sigma2` denotes the second moment of the *full
//! vector*, `σ² = E|ξ|² = d · Var(ξ_i)`: the drift bound spends `λ·E|ξ₁|²`
//! on the whole d-dimensional innovation, so storing the per-coordinate
//! variance would silently weaken every certificate by a factor of d.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::math;
use crate::vecmath;

#[derive(Clone, Copy, Debug, PartialEq)]
enum NoiseKind {
    /// Standard normal per coordinate.
    GaussianUnit,
    /// Normal with per-coordinate variance 2. With the √λ step scaling this
    /// realizes the √(2λ)·N(0, I) scheme used for Langevin sampling.
    GaussianVar2,
    /// Laplace per coordinate with the given scale (variance 2·scale²).
    Laplace { scale: f64 },
    /// Deterministic ξ ≡ 0. No density; for fixed-point and contraction
    /// experiments only.
    Zero,
}

/// An innovation law on `R^d` with independent, mean-zero coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    d: usize,
    kind: NoiseKind,
    sigma2: f64,
}

impl NoiseModel {
    /// Standard Gaussian noise, unit variance per coordinate (`σ² = d`).
    pub fn gaussian(d: usize) -> Self {
        assert!(d >= 1, "noise dimension must be at least 1");
        NoiseModel {
            d,
            kind: NoiseKind::GaussianUnit,
            sigma2: d as f64,
        }
    }

    /// Gaussian noise with per-coordinate variance 2 (`σ² = 2d`).
    pub fn gaussian_var2(d: usize) -> Self {
        assert!(d >= 1, "noise dimension must be at least 1");
        NoiseModel {
            d,
            kind: NoiseKind::GaussianVar2,
            sigma2: 2.0 * d as f64,
        }
    }

    /// Laplace noise with the given per-coordinate scale (`σ² = 2·d·scale²`).
    pub fn laplace(d: usize, scale: f64) -> Result<Self> {
        assert!(d >= 1, "noise dimension must be at least 1");
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "laplace scale must be positive and finite, got {scale}"
            )));
        }
        Ok(NoiseModel {
            d,
            kind: NoiseKind::Laplace { scale },
            sigma2: 2.0 * d as f64 * scale * scale,
        })
    }

    /// Deterministic zero noise (`σ² = 0`). Has no density: [`Self::density`]
    /// and [`Self::ln_inf_density_on_ball`] panic for this kind, and the
    /// minorization certificate rejects it.
    pub fn zero(d: usize) -> Self {
        assert!(d >= 1, "noise dimension must be at least 1");
        NoiseModel {
            d,
            kind: NoiseKind::Zero,
            sigma2: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Full-vector second moment `E|ξ|²`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// True for the degenerate zero kind.
    pub fn is_degenerate(&self) -> bool {
        self.kind == NoiseKind::Zero
    }

    /// Draws one innovation into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.d, "sample_into: output length mismatch");
        match self.kind {
            NoiseKind::GaussianUnit => {
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
            }
            NoiseKind::GaussianVar2 => {
                for o in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = SQRT_2 * z;
                }
            }
            NoiseKind::Laplace { scale } => {
                for o in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *o = if rng.random::<bool>() {
                        scale * e
                    } else {
                        -scale * e
                    };
                }
            }
            NoiseKind::Zero => out.fill(0.0),
        }
    }

    /// Draws one innovation as a fresh vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        self.sample_into(rng, &mut out);
        out
    }

    /// Log of the density at `x` (product of the per-coordinate densities).
    ///
    /// Panics for the zero kind, which has no density.
    pub fn ln_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d, "ln_density: input length mismatch");
        let d = self.d as f64;
        match self.kind {
            NoiseKind::GaussianUnit => -0.5 * vecmath::norm_sq(x) - 0.5 * d * math::ln(2.0 * PI),
            NoiseKind::GaussianVar2 => -0.25 * vecmath::norm_sq(x) - 0.5 * d * math::ln(4.0 * PI),
            NoiseKind::Laplace { scale } => {
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                -l1 / scale - d * math::ln(2.0 * scale)
            }
            NoiseKind::Zero => panic!("zero noise has no density"),
        }
    }

    /// Density at `x`.
    pub fn density(&self, x: &[f64]) -> f64 {
        math::exp(self.ln_density(x))
    }

    /// Log of `inf { f(x) : |x| ≤ r }`, in closed form.
    ///
    /// The Gaussian kinds are radially decreasing, so the infimum is the
    /// density at any point of norm `r`. The product Laplace density
    /// decreases in the ℓ¹ norm, whose maximum over the Euclidean ball is
    /// `r·√d`, so its infimum sits at a diagonal corner instead.
    pub fn ln_inf_density_on_ball(&self, r: f64) -> f64 {
        assert!(
            r >= 0.0 && r.is_finite(),
            "ball radius must be finite and nonnegative"
        );
        let d = self.d as f64;
        match self.kind {
            NoiseKind::GaussianUnit => -0.5 * r * r - 0.5 * d * math::ln(2.0 * PI),
            NoiseKind::GaussianVar2 => -0.25 * r * r - 0.5 * d * math::ln(4.0 * PI),
            NoiseKind::Laplace { scale } => -math::sqrt(d) * r / scale - d * math::ln(2.0 * scale),
            NoiseKind::Zero => panic!("zero noise has no density"),
        }
    }

    /// `inf { f(x) : |x| ≤ r }`. Positive for every finite `r`, though the
    /// returned `f64` may underflow to zero for very large radii; use
    /// [`Self::ln_inf_density_on_ball`] when that matters.
    pub fn inf_density_on_ball(&self, r: f64) -> f64 {
        math::exp(self.ln_inf_density_on_ball(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_SQRT_2PI: f64 = 0.3989422804014327;

    #[test]
    fn sigma2_accounts_for_dimension() {
        assert_eq!(NoiseModel::gaussian(3).sigma2(), 3.0);
        assert_eq!(NoiseModel::gaussian_var2(3).sigma2(), 6.0);
        assert_eq!(NoiseModel::laplace(1, 1.0).unwrap().sigma2(), 2.0);
        assert_eq!(NoiseModel::laplace(2, 0.5).unwrap().sigma2(), 1.0);
        assert_eq!(NoiseModel::zero(4).sigma2(), 0.0);
    }

    #[test]
    fn laplace_rejects_bad_scale() {
        assert!(NoiseModel::laplace(1, 0.0).is_err());
        assert!(NoiseModel::laplace(1, -1.0).is_err());
        assert!(NoiseModel::laplace(1, f64::INFINITY).is_err());
    }

    #[test]
    fn gaussian_density_values() {
        let n = NoiseModel::gaussian(1);
        assert!((n.density(&[0.0]) - INV_SQRT_2PI).abs() < 1e-15);
        // e^{-12.5}/√(2π)
        assert!((n.density(&[5.0]) - 1.4867195147342979e-6).abs() < 1e-18);
    }

    #[test]
    fn laplace_density_mode() {
        let n = NoiseModel::laplace(1, 1.0).unwrap();
        assert!((n.density(&[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ball_infimum_closed_forms() {
        let n1 = NoiseModel::gaussian(1);
        // ball of radius 0 is a point
        assert!((n1.inf_density_on_ball(0.0) - INV_SQRT_2PI).abs() < 1e-15);
        // infimum attained on the boundary
        assert!((n1.inf_density_on_ball(5.0) - n1.density(&[5.0])).abs() < 1e-20);

        // bivariate normal at radius 1: e^{-1/2}/(2π)
        let n2 = NoiseModel::gaussian(2);
        let expected = (-0.5f64).exp() / (2.0 * PI);
        assert!((n2.inf_density_on_ball(1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn laplace_infimum_uses_l1_corner() {
        // In d = 2 the density at the diagonal point (r/√2, r/√2) is smaller
        // than at the axis point (r, 0); the infimum must use the former.
        let n = NoiseModel::laplace(2, 1.0).unwrap();
        let r = 3.0;
        let corner = n.density(&[r / SQRT_2, r / SQRT_2]);
        let axis = n.density(&[r, 0.0]);
        assert!(corner < axis);
        assert!((n.inf_density_on_ball(r) - corner).abs() / corner < 1e-12);
    }

    #[test]
    fn zero_noise_samples_zero() {
        let n = NoiseModel::zero(3);
        let mut rng = crate::rng::derive_rng(1, 0, 0);
        assert_eq!(n.sample(&mut rng), alloc::vec![0.0, 0.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "no density")]
    fn zero_noise_has_no_density() {
        NoiseModel::zero(1).density(&[0.0]);
    }
}
