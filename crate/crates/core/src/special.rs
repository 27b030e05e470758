//! Normalized Hermite and Laguerre functions by forward recurrence.
//!
//! Both recurrences carry the Gaussian factor from the first term, so no
//! factorial or bare polynomial value is ever formed and the sequences stay
//! finite up to a few hundred levels.

use crate::Real;

/// Oscillator eigenfunctions `psi_0(x) ..= psi_n_max(x)` in the convention
/// where `|psi_0|^2` is a Gaussian of variance 1/4:
/// `psi_n(x) = (2/pi)^(1/4) (2^n n!)^(-1/2) H_n(sqrt(2) x) exp(-x^2)`.
pub fn hermite_functions<T: Real>(n_max: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(n_max + 1);
    let two = T::lit(2.0);
    let u = two.sqrt() * x;
    // 2^(1/4) * pi^(-1/4) * exp(-u^2/2)
    let psi0 = (two / T::PI()).sqrt().sqrt() * (-x * x).exp();
    out.push(psi0);
    if n_max == 0 {
        return out;
    }
    out.push(two.sqrt() * u * psi0);
    for n in 1..n_max {
        let nf = T::from_count(n);
        let next = (two / (nf + T::one())).sqrt() * u * out[n] - (nf / (nf + T::one())).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Laguerre functions `L_n(y) exp(-y/2)` for `n = 0 ..= n_max`.
///
/// Each value is bounded by one in magnitude for `y >= 0`.
pub fn laguerre_functions<T: Real>(n_max: usize, y: T) -> Vec<T> {
    let mut out = Vec::with_capacity(n_max + 1);
    let damp = (-y / T::lit(2.0)).exp();
    out.push(damp);
    if n_max == 0 {
        return out;
    }
    out.push((T::one() - y) * damp);
    for n in 1..n_max {
        let nf = T::from_count(n);
        let next = ((T::lit(2.0) * nf + T::one() - y) * out[n] - nf * out[n - 1]) / (nf + T::one());
        out.push(next);
    }
    out
}
