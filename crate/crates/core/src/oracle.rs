//! Brute-force reference integrals.
//!
//! Plain trapezoidal sums over uniform grids, kept free of the closed forms
//! and of the pairwise reduction so they can check both. The integrands are
//! smooth and decay like Gaussians, for which the trapezoidal rule converges
//! faster than any power of the step.

use num_complex::Complex;

use crate::error::{domain, Result};
use crate::states::FockDiagonalState;
use crate::Real;

pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
pub const DEFAULT_STEP: f64 = 1.0 / 512.0;
pub const MAX_MOMENT_ORDER: u32 = 8;

/// A density sampled on `[-L, L]` with uniform spacing.
#[derive(Clone, Debug)]
pub struct TabulatedDensity<T> {
    pub grid: Vec<T>,
    pub values: Vec<T>,
    pub step: T,
}

fn uniform_grid<T: Real>(half_width: T, step: T) -> Result<Vec<T>> {
    if !(half_width > T::zero() && step > T::zero() && step < half_width) {
        return domain(format!("bad grid: half width {half_width}, step {step}"));
    }
    let intervals = (T::lit(2.0) * half_width / step).round().to_usize().expect("grid size");
    let h = T::lit(2.0) * half_width / T::from_count(intervals);
    Ok((0..=intervals).map(|i| -half_width + T::from_count(i) * h).collect())
}

fn trapezoid<T: Real>(values: impl ExactSizeIterator<Item = T>, step: T) -> T {
    let last = values.len().saturating_sub(1);
    let mut acc = T::zero();
    for (i, v) in values.enumerate() {
        acc += if i == 0 || i == last { v / T::lit(2.0) } else { v };
    }
    acc * step
}

impl<T: Real> TabulatedDensity<T> {
    pub fn from_fn(half_width: T, step: T, f: impl Fn(T) -> T) -> Result<Self> {
        let grid = uniform_grid(half_width, step)?;
        let values: Vec<T> = grid.iter().map(|&x| f(x)).collect();
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero())) {
            return domain(format!("density value {v} is negative or NaN"));
        }
        let step = grid[1] - grid[0];
        Ok(Self { grid, values, step })
    }

    /// The state's marginal on `[-8, 8]` with step 1/512.
    pub fn from_state(state: &FockDiagonalState<T>) -> Result<Self> {
        Self::from_state_with(state, T::lit(DEFAULT_HALF_WIDTH), T::lit(DEFAULT_STEP))
    }

    pub fn from_state_with(state: &FockDiagonalState<T>, half_width: T, step: T) -> Result<Self> {
        Self::from_fn(half_width, step, |x| state.marginal_pdf(x).expect("finite grid point"))
    }

    pub fn integral(&self) -> T {
        trapezoid(self.values.iter().copied(), self.step)
    }

    /// `int density(x) exp(i nu x) dx`.
    pub fn numeric_char_fn(&self, nu: T) -> Complex<T> {
        let re = trapezoid(self.grid.iter().zip(&self.values).map(|(&x, &v)| v * (nu * x).cos()), self.step);
        let im = trapezoid(self.grid.iter().zip(&self.values).map(|(&x, &v)| v * (nu * x).sin()), self.step);
        Complex::new(re, im)
    }

    /// `int x^order density(x) dx` for `order <= 8`.
    pub fn numeric_moment(&self, order: u32) -> Result<T> {
        if order > MAX_MOMENT_ORDER {
            return domain(format!("moment order {order} unsupported (max {MAX_MOMENT_ORDER})"));
        }
        Ok(trapezoid(self.grid.iter().zip(&self.values).map(|(&x, &v)| x.powi(order as i32) * v), self.step))
    }
}

/// `int W(x, p) dp` over `p in [-8, 8]` with step 1/512.
pub fn numeric_marginal_from_wigner<T: Real>(state: &FockDiagonalState<T>, x: T) -> T {
    numeric_marginal_from_wigner_with(state, x, T::lit(DEFAULT_HALF_WIDTH), T::lit(DEFAULT_STEP))
}

pub fn numeric_marginal_from_wigner_with<T: Real>(state: &FockDiagonalState<T>, x: T, half_width: T, step: T) -> T {
    let grid = uniform_grid(half_width, step).expect("valid oracle grid");
    let h = grid[1] - grid[0];
    trapezoid(grid.iter().map(|&p| state.wigner(x, p).expect("finite point")), h)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> T {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let (na, nb) = (T::from_count(a.len()), T::from_count(b.len()));
    let (mut i, mut j) = (0, 0);
    let mut d = T::zero();
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((T::from_count(i) / na - T::from_count(j) / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`,
/// `sqrt(-ln(alpha/2) / 2) * sqrt((n + m) / (n m))`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
