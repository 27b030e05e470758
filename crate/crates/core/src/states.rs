//! Analytic models of Fock-diagonal single-mode states.
//!
//! A [`FockDiagonalState`] is a probability vector over photon numbers. Its
//! quadrature statistics do not depend on the local-oscillator phase, so the
//! marginal, Wigner and characteristic functions below are all one-parameter
//! radial functions. Photon/vacuum mixtures and the geometric (Diósi) mixture
//! carry a [`Profile`] tag that routes evaluation to their closed forms.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::special::{hermite_functions, laguerre_functions};
use crate::Real;

/// Truncation depth from which the geometric mixture is treated as
/// untruncated (discarded mass `2^-30 < 1e-9`).
pub const DIOSI_CLOSED_FORM_MIN_NMAX: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum Profile<T> {
    /// `eta |1><1| + (1 - eta) |0><0|`.
    Mixture {
        eta: T,
    },
    /// Weights proportional to `2^-n` for `n >= 1`.
    Diosi,
    Generic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockDiagonalState<T> {
    weights: Vec<T>,
    profile: Profile<T>,
}

fn check_probability<T: Real>(what: &str, p: T) -> Result<()> {
    if !(p >= T::zero() && p <= T::one()) {
        return domain(format!("{what} must lie in [0, 1], got {p}"));
    }
    Ok(())
}

fn check_finite<T: Real>(what: &str, v: T) -> Result<()> {
    if !v.is_finite() {
        return domain(format!("{what} must be finite, got {v}"));
    }
    Ok(())
}

/// Vacuum characteristic function `exp(-nu^2/8)`, the classical bound.
pub fn vacuum_char_fn<T: Real>(nu: T) -> T {
    (-nu * nu / T::lit(8.0)).exp()
}

/// Frequency `sqrt(8 (1 + eta) / eta)` at which the photon/vacuum mixture's
/// characteristic-function magnitude most exceeds the vacuum's.
pub fn nu_opt<T: Real>(eta: T) -> Result<T> {
    if !(eta > T::zero() && eta <= T::one()) {
        return domain(format!("nu_opt requires 0 < eta <= 1, got {eta}"));
    }
    Ok((T::lit(8.0) * (T::one() + eta) / eta).sqrt())
}

/// Largest excess `|F_eta(nu)| - exp(-nu^2/8)`, equal to
/// `2 eta exp(-(1 + eta) / eta)`.
///
/// The mixture's characteristic function is negative at the optimum; the gap
/// is taken between magnitudes.
pub fn vogel_gap<T: Real>(eta: T) -> Result<T> {
    if !(eta > T::zero() && eta <= T::one()) {
        return domain(format!("vogel_gap requires 0 < eta <= 1, got {eta}"));
    }
    Ok(T::lit(2.0) * eta * (-(T::one() + eta) / eta).exp())
}

impl<T: Real> FockDiagonalState<T> {
    /// Arbitrary diagonal state. Weights must be non-negative and sum to one.
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return domain("a state needs at least one Fock weight");
        }
        for (n, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return domain(format!("weight {n} must be finite and non-negative, got {w}"));
            }
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::normalization_tol() {
            return domain(format!("weights must sum to 1, got {total}"));
        }
        Ok(Self { weights, profile: Profile::Generic })
    }

    pub fn vacuum() -> Self {
        Self { weights: vec![T::one(), T::zero()], profile: Profile::Mixture { eta: T::zero() } }
    }

    pub fn photon_vacuum_mixture(eta: T) -> Result<Self> {
        check_probability("eta", eta)?;
        Ok(Self { weights: vec![T::one() - eta, eta], profile: Profile::Mixture { eta } })
    }

    /// Geometric mixture `sum_{n>=1} 2^-n |n><n|`, truncated at `n_max` and
    /// renormalized by `1 - 2^-n_max`.
    pub fn diosi(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return domain("diosi state needs n_max >= 1");
        }
        let half = T::lit(0.5);
        let norm = T::one() - half.powi(n_max as i32);
        let mut weights = vec![T::zero(); n_max + 1];
        let mut p = T::one();
        for w in weights.iter_mut().skip(1) {
            p *= half;
            *w = p / norm;
        }
        Ok(Self { weights, profile: Profile::Diosi })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, n: usize) -> T {
        self.weights.get(n).copied().unwrap_or_else(T::zero)
    }

    pub fn n_max(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn profile(&self) -> Profile<T> {
        self.profile
    }

    /// Short text form, `mix:<eta>`, `diosi:<n_max>` or `fock:<w0,w1,...>`.
    pub fn label(&self) -> String {
        match self.profile {
            Profile::Mixture { eta } => format!("mix:{eta}"),
            Profile::Diosi => format!("diosi:{}", self.n_max()),
            Profile::Generic => {
                let ws: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
                format!("fock:{}", ws.join(","))
            }
        }
    }

    fn diosi_closed_form(&self) -> bool {
        self.profile == Profile::Diosi && self.n_max() >= DIOSI_CLOSED_FORM_MIN_NMAX
    }

    /// Quadrature probability density, identical at every phase.
    pub fn marginal_pdf(&self, x: T) -> Result<T> {
        check_finite("x", x)?;
        Ok(match self.profile {
            Profile::Mixture { eta } => {
                let x2 = x * x;
                (T::lit(2.0) / T::PI()).sqrt() * (T::one() - eta + T::lit(4.0) * eta * x2) * (T::lit(-2.0) * x2).exp()
            }
            _ => self.marginal_series(x),
        })
    }

    /// `sum_n rho_nn |psi_n(x)|^2`, regardless of profile.
    pub fn marginal_series(&self, x: T) -> T {
        let psi = hermite_functions(self.n_max(), x);
        self.weights.iter().zip(&psi).map(|(&w, &v)| w * v * v).sum()
    }

    /// Wigner function. Closed forms for mixtures and for the geometric
    /// mixture at `n_max >= 30`, the Laguerre series otherwise.
    pub fn wigner(&self, x: T, p: T) -> Result<T> {
        check_finite("x", x)?;
        check_finite("p", p)?;
        let r2 = x * x + p * p;
        let two = T::lit(2.0);
        Ok(match self.profile {
            Profile::Mixture { eta } => {
                two / T::PI() * (T::lit(4.0) * eta * r2 + T::one() - two * eta) * (-two * r2).exp()
            }
            Profile::Diosi if self.diosi_closed_form() => {
                T::lit(4.0) / (T::lit(3.0) * T::PI()) * (-two * r2 / T::lit(3.0)).exp()
                    - two / T::PI() * (-two * r2).exp()
            }
            _ => self.wigner_series(x, p),
        })
    }

    /// `(2/pi) sum_n rho_nn (-1)^n L_n(4 r^2) exp(-2 r^2)`.
    pub fn wigner_series(&self, x: T, p: T) -> T {
        let r2 = x * x + p * p;
        let l = laguerre_functions(self.n_max(), T::lit(4.0) * r2);
        let s: T =
            self.weights.iter().zip(&l).enumerate().map(|(n, (&w, &v))| if n % 2 == 0 { w * v } else { -w * v }).sum();
        T::lit(2.0) / T::PI() * s
    }

    /// Fourier transform of the marginal, `int pr(x) exp(i nu x) dx`. Real
    /// for every state here since the marginals are even.
    pub fn char_fn(&self, nu: T) -> Result<Complex<T>> {
        check_finite("nu", nu)?;
        if nu == T::zero() {
            return Ok(Complex::new(T::one(), T::zero()));
        }
        let re = match self.profile {
            Profile::Mixture { eta } => (T::one() - eta * nu * nu / T::lit(4.0)) * vacuum_char_fn(nu),
            _ => self.char_fn_series(nu),
        };
        Ok(Complex::new(re, T::zero()))
    }

    /// `sum_n rho_nn L_n(nu^2/4) exp(-nu^2/8)`.
    pub fn char_fn_series(&self, nu: T) -> T {
        let l = laguerre_functions(self.n_max(), nu * nu / T::lit(4.0));
        self.weights.iter().zip(&l).map(|(&w, &v)| w * v).sum()
    }

    /// Quadrature variance, `sum_n rho_nn (2n + 1) / 4`.
    pub fn variance(&self) -> T {
        match self.profile {
            Profile::Mixture { eta } => T::lit(0.25) + eta / T::lit(2.0),
            _ => self.weights.iter().enumerate().map(|(n, &w)| w * T::from_count(2 * n + 1) / T::lit(4.0)).sum(),
        }
    }

    /// Binomial loss channel with the given transmission. Each photon survives
    /// independently; `n_max` is kept.
    pub fn apply_loss(&self, transmission: T) -> Result<Self> {
        check_probability("transmission", transmission)?;
        if let Profile::Mixture { eta } = self.profile {
            return Self::photon_vacuum_mixture(eta * transmission);
        }
        let len = self.weights.len();
        let t = transmission;
        let r = T::one() - t;
        let mut out = vec![T::zero(); len];
        // row[k] = C(m, k) t^k (1-t)^(m-k), built one Bernoulli trial at a time
        let mut row = vec![T::zero(); len];
        row[0] = T::one();
        for m in 0..len {
            if m > 0 {
                for k in (1..=m).rev() {
                    row[k] = r * row[k] + t * row[k - 1];
                }
                row[0] *= r;
            }
            let w = self.weights[m];
            if w != T::zero() {
                for k in 0..=m {
                    out[k] += w * row[k];
                }
            }
        }
        let total: T = out.iter().copied().sum();
        for w in &mut out {
            *w /= total;
        }
        Ok(Self { weights: out, profile: Profile::Generic })
    }
}
