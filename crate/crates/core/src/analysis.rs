//! Statistics on quadrature records.
//!
//! The central estimator is the empirical characteristic function
//! `F(nu) = mean_j exp(i nu X_j)`, whose mean-square error is
//! `(1 - |F|^2) / n`. A record violates the classical bound when
//! `|F(nu)| > exp(-nu^2 / 8)` at some `nu`; [`vogel_test`] scans a grid for the
//! most significant excess.
//!
//! `|F|` is biased upward: `E|F|^2 = |F_true|^2 + (1 - |F_true|^2) / n`.
//! Estimates are reported uncorrected.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{QuadratureDataset, Units};
use crate::error::{domain, Result};
use crate::states::{nu_opt, vacuum_char_fn, vogel_gap, FockDiagonalState};
use crate::summation::pairwise_sum_map;
use crate::Real;

pub const DEFAULT_NU_MAX: f64 = 12.0;
pub const DEFAULT_NU_STEP: f64 = 0.05;
/// Default significance for verdicts.
pub const DEFAULT_TEST_K: f64 = 3.0;
/// Default significance for sample-size planning.
pub const DEFAULT_PLAN_K: f64 = 1.0;

/// `0, step, 2 step, ...` up to `nu_max` inclusive.
pub fn nu_grid<T: Real>(nu_max: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero() && step.is_finite()) || !(nu_max >= T::zero() && nu_max.is_finite()) {
        return domain(format!("bad nu grid: max {nu_max}, step {step}"));
    }
    let count = (nu_max / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    // snap to 12 decimals so 146 * 0.05 reads 7.3
    let snap = T::lit(1e12);
    Ok((0..count).map(|i| (T::from_count(i) * step * snap).round() / snap).collect())
}

pub fn default_nu_grid<T: Real>() -> Vec<T> {
    nu_grid(T::lit(DEFAULT_NU_MAX), T::lit(DEFAULT_NU_STEP)).expect("default grid is valid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicCurve<T> {
    pub nu_grid: Vec<T>,
    pub estimates: Vec<Complex<T>>,
    pub std_errors: Vec<T>,
    pub n: usize,
}

impl<T: Real> CharacteristicCurve<T> {
    pub fn len(&self) -> usize {
        self.nu_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu_grid.is_empty()
    }

    /// `|F(nu_i)| - exp(-nu_i^2/8)`.
    pub fn excess(&self, i: usize) -> T {
        self.estimates[i].norm() - vacuum_char_fn(self.nu_grid[i])
    }

    pub fn significance(&self, i: usize) -> T {
        let excess = self.excess(i);
        let sigma = self.std_errors[i];
        if sigma > T::zero() {
            excess / sigma
        } else if excess > T::zero() {
            T::infinity()
        } else if excess < T::zero() {
            T::neg_infinity()
        } else {
            T::zero()
        }
    }
}

/// Root-mean-square error of the empirical characteristic function,
/// `sqrt((1 - magnitude^2) / n)`.
pub fn estimation_error<T: Real>(magnitude: T, n: usize) -> Result<T> {
    if !(magnitude >= T::zero() && magnitude <= T::one()) {
        return domain(format!("magnitude must lie in [0, 1], got {magnitude}"));
    }
    if n == 0 {
        return domain("estimation_error needs n >= 1");
    }
    Ok(((T::one() - magnitude * magnitude) / T::from_count(n)).sqrt())
}

/// Empirical characteristic function on `nu_grid`, with plug-in error bars.
///
/// Each grid point is an independent pairwise-summed average, so estimates
/// at a given `nu` do not depend on the rest of the grid.
pub fn empirical_char_fn<T: Real>(data: &QuadratureDataset<T>, nu_grid: &[T]) -> Result<CharacteristicCurve<T>> {
    data.require_units(Units::Normalized)?;
    if data.count() < 2 {
        return domain(format!("need at least 2 samples, got {}", data.count()));
    }
    if nu_grid.is_empty() {
        return domain("empty nu grid");
    }
    if let Some(bad) = nu_grid.iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
        return domain(format!("grid values must be finite and >= 0, got {bad}"));
    }
    let n = data.count();
    let nf = T::from_count(n);
    let xs = data.samples();
    let estimates: Vec<Complex<T>> = nu_grid
        .par_iter()
        .map(|&nu| {
            let s = pairwise_sum_map(xs, |&x| {
                let (sin, cos) = (nu * x).sin_cos();
                Complex::new(cos, sin)
            });
            s / nf
        })
        .collect();
    let std_errors = estimates.iter().map(|f| ((T::one() - f.norm_sqr()).max(T::zero()) / nf).sqrt()).collect();
    Ok(CharacteristicCurve { nu_grid: nu_grid.to_vec(), estimates, std_errors, n })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VogelVerdict<T> {
    pub nonclassical: bool,
    pub best_nu: T,
    pub excess: T,
    pub significance: T,
    pub k_required: T,
}

/// Scans the curve for the largest `excess / sigma` and compares it with `k`.
/// Ties go to the smaller `nu`.
pub fn vogel_test<T: Real>(curve: &CharacteristicCurve<T>, k: T) -> Result<VogelVerdict<T>> {
    if !(k > T::zero() && k.is_finite()) {
        return domain(format!("k must be positive, got {k}"));
    }
    if curve.is_empty() {
        return domain("empty curve");
    }
    let mut best: Option<(usize, T)> = None;
    for i in 0..curve.len() {
        let sig = curve.significance(i);
        if sig.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if sig <= b => {}
            _ => best = Some((i, sig)),
        }
    }
    let Some((i, significance)) = best else {
        return domain("curve has no usable points");
    };
    let excess = curve.excess(i);
    Ok(VogelVerdict {
        nonclassical: significance >= k && excess > T::zero(),
        best_nu: curve.nu_grid[i],
        excess,
        significance,
        k_required: k,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleSizePlan<T> {
    pub eta: T,
    pub k: T,
    pub nu_opt: T,
    pub gap: T,
    pub n_min: u64,
}

/// Smallest record length for which `k` standard errors at the optimal
/// frequency fit inside the gap of a photon/vacuum mixture.
pub fn min_samples<T: Real>(eta: T, k: T) -> Result<SampleSizePlan<T>> {
    if !(k > T::zero() && k.is_finite()) {
        return domain(format!("k must be positive, got {k}"));
    }
    let nu = nu_opt(eta)?;
    let gap = vogel_gap(eta)?;
    let f = FockDiagonalState::photon_vacuum_mixture(eta)?.char_fn(nu)?.norm();
    let n = (k * k * (T::one() - f * f) / (gap * gap)).ceil();
    let n_min = n
        .to_u64()
        .filter(|_| n.is_finite())
        .ok_or_else(|| crate::Error::Domain(format!("required sample count for eta = {eta} is not representable")))?;
    Ok(SampleSizePlan { eta, k, nu_opt: nu, gap, n_min: n_min.max(1) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram<T> {
    pub range: T,
    pub bin_width: T,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub n: usize,
    pub mean: T,
    pub variance: T,
}

impl<T: Real> Histogram<T> {
    pub fn bin_center(&self, i: usize) -> T {
        -self.range + (T::from_count(i) + T::lit(0.5)) * self.bin_width
    }
}

/// Equal-width histogram over `[-range, range]` plus mean and variance.
pub fn summarize<T: Real>(data: &QuadratureDataset<T>, bins: usize, range: T) -> Result<Histogram<T>> {
    data.require_units(Units::Normalized)?;
    if bins < 2 {
        return domain(format!("need at least 2 bins, got {bins}"));
    }
    if !(range > T::zero() && range.is_finite()) {
        return domain(format!("range must be positive, got {range}"));
    }
    let width = T::lit(2.0) * range / T::from_count(bins);
    let mut counts = vec![0u64; bins];
    let (mut underflow, mut overflow) = (0, 0);
    for &x in data.samples() {
        if x < -range {
            underflow += 1;
        } else if x > range {
            overflow += 1;
        } else {
            let i = ((x + range) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
            counts[i] += 1;
        }
    }
    let m = Moments::of(data.samples());
    Ok(Histogram {
        range,
        bin_width: width,
        counts,
        underflow,
        overflow,
        n: data.count(),
        mean: m.mean,
        variance: m.sample_variance(),
    })
}

/// Central moments with divisor `n`.
#[derive(Clone, Copy, Debug)]
pub struct Moments<T> {
    pub n: usize,
    pub mean: T,
    pub m2: T,
    pub m4: T,
}

impl<T: Real> Moments<T> {
    pub fn of(xs: &[T]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { n, mean: T::nan(), m2: T::nan(), m4: T::nan() };
        }
        let nf = T::from_count(n);
        let mean = pairwise_sum_map(xs, |&x| x) / nf;
        let m2 = pairwise_sum_map(xs, |&x| (x - mean).powi(2)) / nf;
        let m4 = pairwise_sum_map(xs, |&x| (x - mean).powi(4)) / nf;
        Self { n, mean, m2, m4 }
    }

    /// Unbiased variance, divisor `n - 1`.
    pub fn sample_variance(&self) -> T {
        if self.n < 2 {
            return T::nan();
        }
        self.m2 * T::from_count(self.n) / T::from_count(self.n - 1)
    }

    /// Large-sample standard error of the variance, `sqrt((m4 - m2^2) / n)`.
    pub fn variance_std_error(&self) -> T {
        ((self.m4 - self.m2 * self.m2).max(T::zero()) / T::from_count(self.n)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceCheck<T> {
    pub eta_hypothesis: T,
    pub expected_variance: T,
    pub sample_variance: T,
    pub std_error: T,
    pub z: T,
    /// Set when the record has zero spread; `z` is then a signed sentinel.
    pub degenerate: bool,
}

const MIN_VARIANCE_SAMPLES: usize = 100;

fn check_variance_input<T: Real>(data: &QuadratureDataset<T>) -> Result<()> {
    data.require_units(Units::Normalized)?;
    if data.count() < MIN_VARIANCE_SAMPLES {
        return domain(format!("need at least {MIN_VARIANCE_SAMPLES} samples, got {}", data.count()));
    }
    Ok(())
}

/// z-score of the sample variance against `1/4 + eta/2`.
pub fn variance_check<T: Real>(data: &QuadratureDataset<T>, eta_hypothesis: T) -> Result<VarianceCheck<T>> {
    check_variance_input(data)?;
    if !(eta_hypothesis >= T::zero() && eta_hypothesis <= T::one()) {
        return domain(format!("eta hypothesis must lie in [0, 1], got {eta_hypothesis}"));
    }
    let m = Moments::of(data.samples());
    let expected = T::lit(0.25) + eta_hypothesis / T::lit(2.0);
    let var = m.sample_variance();
    let se = m.variance_std_error();
    let diff = var - expected;
    let (z, degenerate) = if se > T::zero() {
        (diff / se, false)
    } else if diff < T::zero() {
        (-T::max_value(), true)
    } else if diff > T::zero() {
        (T::max_value(), true)
    } else {
        (T::zero(), true)
    };
    Ok(VarianceCheck {
        eta_hypothesis,
        expected_variance: expected,
        sample_variance: var,
        std_error: se,
        z,
        degenerate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaEstimate<T> {
    pub eta: T,
    /// Twice the standard error of the sample variance.
    pub std_error: T,
}

/// Photon fraction implied by the record's variance, clamped to `[0, 1]`.
pub fn estimate_eta<T: Real>(data: &QuadratureDataset<T>) -> Result<T> {
    Ok(estimate_eta_with_error(data)?.eta)
}

pub fn estimate_eta_with_error<T: Real>(data: &QuadratureDataset<T>) -> Result<EtaEstimate<T>> {
    check_variance_input(data)?;
    let m = Moments::of(data.samples());
    let two = T::lit(2.0);
    let eta = (two * (m.sample_variance() - T::lit(0.25))).max(T::zero()).min(T::one());
    Ok(EtaEstimate { eta, std_error: two * m.variance_std_error() })
}

/// Three-way reading of a test result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Nonclassical,
    /// No significant violation, but the record is significantly noisier
    /// than vacuum: a photon admixture is likely and the run is underpowered.
    Inconclusive,
    ClassicalConsistent,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Nonclassical => "nonclassical",
            Outcome::Inconclusive => "inconclusive",
            Outcome::ClassicalConsistent => "classical-consistent",
        })
    }
}

/// Excess evaluated at a single frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointExcess<T> {
    pub nu: T,
    pub abs: T,
    pub vacuum: T,
    pub excess: T,
    pub std_error: T,
    pub significance: T,
}

pub fn point_excess<T: Real>(data: &QuadratureDataset<T>, nu: T) -> Result<PointExcess<T>> {
    let c = empirical_char_fn(data, &[nu])?;
    Ok(PointExcess {
        nu,
        abs: c.estimates[0].norm(),
        vacuum: vacuum_char_fn(nu),
        excess: c.excess(0),
        std_error: c.std_errors[0],
        significance: c.significance(0),
    })
}

/// Everything the report needs from one (possibly pooled) record.
#[derive(Clone, Debug)]
pub struct Assessment<T> {
    pub n: usize,
    pub eta: EtaEstimate<T>,
    pub vacuum_variance: VarianceCheck<T>,
    pub curve: CharacteristicCurve<T>,
    pub verdict: VogelVerdict<T>,
    pub outcome: Outcome,
    /// Single-frequency evaluation at `nu_opt` of the estimated photon
    /// fraction, when that estimate is positive.
    pub at_nu_opt: Option<PointExcess<T>>,
    /// Samples a mixture at the estimated photon fraction would need for a
    /// `k`-sigma result; present unless the record is already nonclassical.
    pub plan: Option<SampleSizePlan<T>>,
}

pub fn assess<T: Real>(data: &QuadratureDataset<T>, nu_grid: &[T], k: T) -> Result<Assessment<T>> {
    let eta = estimate_eta_with_error(data)?;
    let vacuum_variance = variance_check(data, T::zero())?;
    let curve = empirical_char_fn(data, nu_grid)?;
    let verdict = vogel_test(&curve, k)?;
    let outcome = if verdict.nonclassical {
        Outcome::Nonclassical
    } else if !vacuum_variance.degenerate && vacuum_variance.z >= k {
        Outcome::Inconclusive
    } else {
        Outcome::ClassicalConsistent
    };
    let at_nu_opt = if eta.eta > T::zero() { Some(point_excess(data, nu_opt(eta.eta)?)?) } else { None };
    let plan =
        if outcome != Outcome::Nonclassical && eta.eta > T::zero() { min_samples(eta.eta, k).ok() } else { None };
    Ok(Assessment { n: data.count(), eta, vacuum_variance, curve, verdict, outcome, at_nu_opt, plan })
}
