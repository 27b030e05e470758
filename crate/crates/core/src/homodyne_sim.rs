//! Monte Carlo balanced-homodyne records.
//!
//! A record is drawn in two stages: a photon number from the state's
//! weights, then a quadrature from that Fock level's marginal `|psi_n(x)|^2`.
//! Level 0 is a Gaussian of variance 1/4, level 1 is `+-sqrt(y)` with
//! `y ~ Gamma(3/2, rate 2)`, and higher levels use a tabulated inverse CDF.
//!
//! Output is generated in chunks of [`CHUNK`] samples, each with its own
//! ChaCha20 stream derived from the seed and the chunk index, so the result
//! depends only on the seed and never on the number of worker threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Gamma, Normal};
use rayon::prelude::*;

use crate::dataset::{QuadratureDataset, Units};
use crate::error::{domain, Error, Result};
use crate::special::hermite_functions;
use crate::states::FockDiagonalState;
use crate::summation::pairwise_sum_map;
use crate::Real;

pub const CHUNK: usize = 4096;
/// Grid points in each tabulated inverse CDF.
pub const TABLE_POINTS: usize = 1 << 14;
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha 0.9), one stream per 4096-sample chunk";
pub const PHASE_POLICY: &str = "unstabilized/irrelevant (phase-symmetric state)";

const NOISE_STREAM_BIT: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    /// Overall detection efficiency.
    pub efficiency: f64,
    /// Additive Gaussian amplifier noise, in normalized quadrature units.
    /// A detector with `e` electrons of rms noise against `N0` shot-noise
    /// electrons corresponds to roughly `e / sqrt(N0) / 2`.
    pub electronic_noise_sigma: f64,
    /// Mean photoelectrons per local-oscillator pulse, `N0`. Only used for
    /// raw output.
    pub lo_mean_count: f64,
    pub seed: u64,
    pub units: Units,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { efficiency: 1.0, electronic_noise_sigma: 0.0, lo_mean_count: 1e6, seed: 0, units: Units::Normalized }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return domain(format!("efficiency must lie in [0, 1], got {}", self.efficiency));
        }
        if !(self.electronic_noise_sigma >= 0.0 && self.electronic_noise_sigma.is_finite()) {
            return domain(format!("electronic noise must be finite and >= 0, got {}", self.electronic_noise_sigma));
        }
        if !(self.lo_mean_count > 0.0 && self.lo_mean_count.is_finite()) {
            return domain(format!("LO mean count must be positive, got {}", self.lo_mean_count));
        }
        Ok(())
    }

    fn canonical(&self) -> String {
        format!(
            "efficiency={:e};electronic_noise_sigma={:e};lo_mean_count={:e};seed={};units={}",
            self.efficiency, self.electronic_noise_sigma, self.lo_mean_count, self.seed, self.units
        )
    }

    /// FNV-1a over the canonical text form, for provenance tagging.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Inverse CDF of one Fock level's marginal, tabulated on a uniform grid.
struct InverseCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        if c1 > c0 {
            x0 + (x1 - x0) * (u - c0) / (c1 - c0)
        } else {
            x0
        }
    }
}

/// Half-width of the tabulation support for levels up to `n_max`: at least
/// 8, and wide enough to clear the classical turning point `sqrt(n + 1/2)`.
pub fn table_half_width(n_max: usize) -> f64 {
    8f64.max((n_max as f64 + 0.5).sqrt() + 6.0)
}

struct LevelSampler {
    levels: WeightedIndex<f64>,
    ground: Normal<f64>,
    first: Gamma<f64>,
    tables: Vec<Option<InverseCdf>>,
}

impl LevelSampler {
    fn new<T: Real>(state: &FockDiagonalState<T>) -> Result<Self> {
        let weights: Vec<f64> = state.weights().iter().map(|w| w.as_f64()).collect();
        let levels = WeightedIndex::new(&weights).map_err(|e| Error::Domain(format!("bad state weights: {e}")))?;
        let n_max = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        let mut tables: Vec<Option<InverseCdf>> = (0..=n_max).map(|_| None).collect();
        if n_max >= 2 {
            let half = table_half_width(n_max);
            let step = 2.0 * half / (TABLE_POINTS - 1) as f64;
            let xs: Vec<f64> = (0..TABLE_POINTS).map(|i| -half + i as f64 * step).collect();
            let dens: Vec<Vec<f64>> =
                xs.iter().map(|&x| hermite_functions::<f64>(n_max, x).into_iter().map(|p| p * p).collect()).collect();
            for (n, slot) in tables.iter_mut().enumerate().skip(2) {
                if weights[n] == 0.0 {
                    continue;
                }
                let mut cdf = Vec::with_capacity(TABLE_POINTS);
                let mut acc = 0.0;
                cdf.push(0.0);
                for i in 1..TABLE_POINTS {
                    acc += 0.5 * step * (dens[i - 1][n] + dens[i][n]);
                    cdf.push(acc);
                }
                for c in &mut cdf {
                    *c /= acc;
                }
                *slot = Some(InverseCdf { xs: xs.clone(), cdf });
            }
        }
        Ok(Self {
            levels,
            ground: Normal::new(0.0, 0.5).expect("valid normal"),
            first: Gamma::new(1.5, 0.5).expect("valid gamma"),
            tables,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.levels.sample(rng) {
            0 => self.ground.sample(rng),
            1 => {
                let r = self.first.sample(rng).sqrt();
                if rng.random::<bool>() {
                    r
                } else {
                    -r
                }
            }
            n => self.tables[n].as_ref().expect("table for populated level").sample(rng.random::<f64>()),
        }
    }
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_f64<T: Real>(state: &FockDiagonalState<T>, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return domain("sample count must be at least 1");
    }
    let sampler = LevelSampler::new(state)?;
    let mut out = vec![0.0f64; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(i, chunk)| {
        let mut rng = chunk_rng(seed, i as u64);
        for x in chunk {
            *x = sampler.draw(&mut rng);
        }
    });
    Ok(out)
}

/// `n` i.i.d. quadratures from the state's marginal, normalized units.
pub fn sample_quadratures<T: Real>(state: &FockDiagonalState<T>, n: usize, seed: u64) -> Result<QuadratureDataset<T>> {
    let xs = draw_f64(state, n, seed)?;
    let ds = QuadratureDataset::new(xs.into_iter().map(T::lit).collect(), Units::Normalized)?;
    Ok(ds
        .with_meta("state", state.label())
        .with_meta("seed", seed)
        .with_meta("phase_policy", PHASE_POLICY)
        .with_meta("rng", RNG_NAME)
        .with_meta("generator", format!("vogellab {}", crate::VERSION)))
}

/// Full detector model: loss, then shot-noise-limited quadrature sampling,
/// then additive electronic noise, then optional scaling to photoelectron
/// counts (`x -> 2 sqrt(N0) x`, so the vacuum has mean square `N0`).
pub fn simulate_homodyne<T: Real>(
    state: &FockDiagonalState<T>,
    det: &DetectorConfig,
    n: usize,
) -> Result<QuadratureDataset<T>> {
    det.validate()?;
    let lossy = state.apply_loss(T::lit(det.efficiency))?;
    let mut xs = draw_f64(&lossy, n, det.seed)?;
    if det.electronic_noise_sigma > 0.0 {
        let noise = Normal::new(0.0, det.electronic_noise_sigma).expect("validated sigma");
        xs.par_chunks_mut(CHUNK).enumerate().for_each(|(i, chunk)| {
            let mut rng = chunk_rng(det.seed, NOISE_STREAM_BIT | i as u64);
            for x in chunk {
                *x += noise.sample(&mut rng);
            }
        });
    }
    if det.units == Units::RawPhotoelectrons {
        let scale = 2.0 * det.lo_mean_count.sqrt();
        for x in &mut xs {
            *x *= scale;
        }
    }
    let ds = QuadratureDataset::new(xs.into_iter().map(T::lit).collect(), det.units)?;
    Ok(ds
        .with_meta("state", state.label())
        .with_meta("seed", det.seed)
        .with_meta("efficiency", det.efficiency)
        .with_meta("electronic_noise_sigma", det.electronic_noise_sigma)
        .with_meta("lo_mean_count", det.lo_mean_count)
        .with_meta("detector_fingerprint", det.fingerprint())
        .with_meta("phase_policy", PHASE_POLICY)
        .with_meta("rng", RNG_NAME)
        .with_meta("generator", format!("vogellab {}", crate::VERSION)))
}

/// Minimum vacuum-reference length accepted by [`calibrate`].
pub const MIN_VACUUM_REFERENCE: usize = 1000;

/// Rescales a raw photoelectron record so that the vacuum reference maps to
/// variance 1/4. The signal's own mean is not removed; it is reported in the
/// `raw_mean` metadata field.
pub fn calibrate<T: Real>(
    raw: &QuadratureDataset<T>,
    vacuum_ref: &QuadratureDataset<T>,
) -> Result<QuadratureDataset<T>> {
    raw.require_units(Units::RawPhotoelectrons)?;
    vacuum_ref.require_units(Units::RawPhotoelectrons)?;
    if vacuum_ref.count() < MIN_VACUUM_REFERENCE {
        return domain(format!(
            "vacuum reference needs at least {MIN_VACUUM_REFERENCE} samples, got {}",
            vacuum_ref.count()
        ));
    }
    let (_, vac_var) = mean_and_population_variance(vacuum_ref.samples());
    if !(vac_var > T::zero()) {
        return Err(Error::Calibration("vacuum reference has zero variance".into()));
    }
    let scale = T::one() / (T::lit(2.0) * vac_var.sqrt());
    let (raw_mean, _) = mean_and_population_variance(raw.samples());
    let samples = raw.samples().iter().map(|&x| x * scale).collect();
    let mut out = QuadratureDataset::new(samples, Units::Normalized)?;
    for (k, v) in raw.meta() {
        out = out.with_meta(k.clone(), v);
    }
    Ok(out
        .with_meta("calibration_scale", format!("{:.16e}", scale.as_f64()))
        .with_meta("raw_mean", format!("{:.16e}", raw_mean.as_f64()))
        .with_meta("vacuum_ref_count", vacuum_ref.count())
        .with_meta("vacuum_ref_variance", format!("{:.16e}", vac_var.as_f64())))
}

/// Mean and mean-square deviation about the mean (divisor `n`).
pub fn mean_and_population_variance<T: Real>(xs: &[T]) -> (T, T) {
    if xs.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = T::from_count(xs.len());
    let mean = pairwise_sum_map(xs, |&x| x) / n;
    let var = pairwise_sum_map(xs, |&x| (x - mean) * (x - mean)) / n;
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    type S = FockDiagonalState<f64>;

    #[test]
    fn rejects_zero_samples_and_bad_config() {
        assert!(sample_quadratures(&S::vacuum(), 0, 1).is_err());
        let bad = DetectorConfig { efficiency: 1.2, ..Default::default() };
        assert!(simulate_homodyne(&S::vacuum(), &bad, 10).is_err());
        let bad = DetectorConfig { electronic_noise_sigma: -1.0, ..Default::default() };
        assert!(simulate_homodyne(&S::vacuum(), &bad, 10).is_err());
        let bad = DetectorConfig { lo_mean_count: 0.0, ..Default::default() };
        assert!(simulate_homodyne(&S::vacuum(), &bad, 10).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let s = S::diosi(10).unwrap();
        let a = sample_quadratures(&s, 10_000, 99).unwrap();
        let b = sample_quadratures(&s, 10_000, 99).unwrap();
        let c = sample_quadratures(&s, 10_000, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples(), c.samples());
        // a prefix of a longer run is the shorter run
        let long = sample_quadratures(&s, 3 * CHUNK + 5, 99).unwrap();
        assert_eq!(&long.samples()[..CHUNK], &a.samples()[..CHUNK]);
    }

    #[test]
    fn inverse_cdf_tables_are_accurate() {
        // Compare the tabulated CDF with a much finer Simpson integration.
        let s = S::new(vec![0.0, 0.0, 0.5, 0.0, 0.0, 0.5]).unwrap();
        let sampler = LevelSampler::new(&s).unwrap();
        for n in [2usize, 5] {
            let t = sampler.tables[n].as_ref().unwrap();
            for &x in &[-1.5, -0.4, 0.0, 0.9, 2.0] {
                let i = t.xs.partition_point(|&g| g < x);
                let lo = t.xs[0];
                let m = 200_000usize;
                let h = (t.xs[i] - lo) / m as f64;
                let dens = |z: f64| hermite_functions::<f64>(n, z)[n].powi(2);
                let mut simpson = dens(lo) + dens(t.xs[i]);
                for k in 1..m {
                    simpson += if k % 2 == 1 { 4.0 } else { 2.0 } * dens(lo + k as f64 * h);
                }
                simpson *= h / 3.0;
                assert!((t.cdf[i] - simpson).abs() < 1e-6, "n={n} x={x}: {} vs {simpson}", t.cdf[i]);
            }
        }
    }

    #[test]
    fn table_support_holds_the_mass() {
        for n in [2usize, 10, 50, 200] {
            let half = table_half_width(n);
            let edge = hermite_functions::<f64>(n, half)[n].powi(2);
            assert!(edge < 1e-12, "level {n} density at edge {edge}");
        }
    }

    #[test]
    fn calibration_contract() {
        let det = DetectorConfig { units: Units::RawPhotoelectrons, lo_mean_count: 1e6, seed: 5, ..Default::default() };
        let vac = simulate_homodyne(&S::vacuum(), &det, 20_000).unwrap();
        let self_cal = calibrate(&vac, &vac).unwrap();
        let (_, v) = mean_and_population_variance(self_cal.samples());
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-14);
        assert_eq!(self_cal.units(), Units::Normalized);

        let offset = QuadratureDataset::new(vec![300.0; 10], Units::RawPhotoelectrons).unwrap();
        let cal = calibrate(&offset, &vac).unwrap();
        let scale: f64 = cal.meta()["calibration_scale"].parse().unwrap();
        assert_abs_diff_eq!(cal.samples()[0], 300.0 * scale, epsilon = 1e-12);
        let raw_mean: f64 = cal.meta()["raw_mean"].parse().unwrap();
        assert_eq!(raw_mean, 300.0);

        let flat = QuadratureDataset::new(vec![1.0; 2000], Units::RawPhotoelectrons).unwrap();
        assert!(matches!(calibrate(&vac, &flat), Err(Error::Calibration(_))));
        let short = QuadratureDataset::new(vec![1.0, 2.0], Units::RawPhotoelectrons).unwrap();
        assert!(matches!(calibrate(&vac, &short), Err(Error::Domain(_))));
        assert!(matches!(calibrate(&self_cal, &vac), Err(Error::Units { .. })));
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = DetectorConfig::default();
        let b = DetectorConfig { seed: 1, ..a };
        assert_eq!(a.fingerprint(), DetectorConfig::default().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
