//! Float math routed through libm.
//!
//! `f64`'s transcendental methods live in `std`, not `core`, so a `no_std`
//! crate needs its own entry points. Going through libm unconditionally also
//! pins the arithmetic: results cannot drift between build configurations
//! the way they could if method resolution picked the platform libm in some
//! builds and a fallback in others.

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub(crate) fn powf(x: f64, p: f64) -> f64 {
    libm::pow(x, p)
}

pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

pub(crate) fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Integer power by repeated squaring (the usual `powi` lowering).
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut exp = n.unsigned_abs();
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}
