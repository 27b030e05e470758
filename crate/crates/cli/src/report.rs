//! Analysis report: the JSON document written by `analyze --report`.
//!
//! Field names match `schemas/analysis-report.schema.json`. Floats are
//! written as `{:.16e}` (17 significant digits) so every value round-trips.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use vogellab::analysis::{Assessment, Histogram, PointExcess, VarianceCheck};
use vogellab::{Outcome, SampleSizePlan};

use crate::manifest::RunManifest;

#[derive(Serialize)]
pub struct Report {
    pub tool: Tool,
    pub manifest: RunManifest,
    pub inputs: Vec<InputInfo>,
    pub n: usize,
    pub estimated_eta: EtaBlock,
    pub variance: VarianceBlock,
    pub curve: Vec<CurvePoint>,
    pub at_nu_opt: Option<PointBlock>,
    pub verdict: VerdictBlock,
    pub plan: Option<PlanBlock>,
    pub histogram: Option<HistogramBlock>,
    pub notes: Notes,
}

#[derive(Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Tool {
    pub fn current() -> Self {
        Self { name: "vogellab", version: vogellab::VERSION }
    }
}

#[derive(Serialize)]
pub struct InputInfo {
    pub path: String,
    pub count: usize,
    pub units: String,
    pub meta: std::collections::BTreeMap<String, String>,
}

#[derive(Serialize)]
pub struct EtaBlock {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Serialize)]
pub struct ZScore {
    pub eta_hypothesis: f64,
    pub expected_variance: f64,
    pub z: f64,
}

impl From<&VarianceCheck<f64>> for ZScore {
    fn from(c: &VarianceCheck<f64>) -> Self {
        Self { eta_hypothesis: c.eta_hypothesis, expected_variance: c.expected_variance, z: c.z }
    }
}

#[derive(Serialize)]
pub struct VarianceBlock {
    pub sample_variance: f64,
    pub std_error: f64,
    pub degenerate: bool,
    pub z_scores: Vec<ZScore>,
}

#[derive(Serialize)]
pub struct CurvePoint {
    pub nu: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub std_error: f64,
    pub vacuum: f64,
    pub excess: f64,
}

#[derive(Serialize)]
pub struct PointBlock {
    pub nu: f64,
    pub abs: f64,
    pub vacuum: f64,
    pub excess: f64,
    pub std_error: f64,
    pub significance: f64,
}

impl From<&PointExcess<f64>> for PointBlock {
    fn from(p: &PointExcess<f64>) -> Self {
        Self {
            nu: p.nu,
            abs: p.abs,
            vacuum: p.vacuum,
            excess: p.excess,
            std_error: p.std_error,
            significance: p.significance,
        }
    }
}

#[derive(Serialize)]
pub struct VerdictBlock {
    pub nonclassical: bool,
    pub outcome: Outcome,
    pub best_nu: f64,
    pub excess: f64,
    pub significance: f64,
    pub k: f64,
}

#[derive(Serialize)]
pub struct PlanBlock {
    pub eta: f64,
    pub k: f64,
    pub nu_opt: f64,
    pub gap: f64,
    pub n_min: u64,
}

impl From<&SampleSizePlan<f64>> for PlanBlock {
    fn from(p: &SampleSizePlan<f64>) -> Self {
        Self { eta: p.eta, k: p.k, nu_opt: p.nu_opt, gap: p.gap, n_min: p.n_min }
    }
}

#[derive(Serialize)]
pub struct HistogramBlock {
    pub bins: usize,
    pub range: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub mean: f64,
    pub variance: f64,
}

impl From<&Histogram<f64>> for HistogramBlock {
    fn from(h: &Histogram<f64>) -> Self {
        Self {
            bins: h.counts.len(),
            range: h.range,
            bin_width: h.bin_width,
            counts: h.counts.clone(),
            underflow: h.underflow,
            overflow: h.overflow,
            mean: h.mean,
            variance: h.variance,
        }
    }
}

#[derive(Serialize)]
pub struct Notes {
    pub abs_bias: &'static str,
    /// `(1 - |F|^2) / n` at the best frequency.
    pub abs_squared_bias_at_best_nu: f64,
    pub multiple_comparisons: &'static str,
}

const ABS_BIAS: &str =
    "|F| estimates are uncorrected: E|F_hat|^2 = |F|^2 + (1 - |F|^2)/n, so |F_hat| is biased upward by O(1/n)";
const MULTIPLE_COMPARISONS: &str =
    "the verdict scans every grid point; the false-positive rate exceeds that of a single-frequency test";

impl Report {
    pub fn build(
        manifest: RunManifest,
        inputs: Vec<InputInfo>,
        a: &Assessment<f64>,
        hypothesis: Option<&VarianceCheck<f64>>,
        histogram: Option<&Histogram<f64>>,
    ) -> Self {
        let c = &a.curve;
        let curve = (0..c.len())
            .map(|i| CurvePoint {
                nu: c.nu_grid[i],
                re: c.estimates[i].re,
                im: c.estimates[i].im,
                abs: c.estimates[i].norm(),
                std_error: c.std_errors[i],
                vacuum: vogellab::states::vacuum_char_fn(c.nu_grid[i]),
                excess: c.excess(i),
            })
            .collect();
        let mut z_scores = vec![ZScore::from(&a.vacuum_variance)];
        z_scores.extend(hypothesis.map(ZScore::from));
        let best = c.nu_grid.iter().position(|&nu| nu == a.verdict.best_nu).unwrap_or(0);
        let best_abs = c.estimates[best].norm().min(1.0);
        Self {
            tool: Tool::current(),
            manifest,
            inputs,
            n: a.n,
            estimated_eta: EtaBlock { value: a.eta.eta, std_error: a.eta.std_error },
            variance: VarianceBlock {
                sample_variance: a.vacuum_variance.sample_variance,
                std_error: a.vacuum_variance.std_error,
                degenerate: a.vacuum_variance.degenerate,
                z_scores,
            },
            curve,
            at_nu_opt: a.at_nu_opt.as_ref().map(PointBlock::from),
            verdict: VerdictBlock {
                nonclassical: a.verdict.nonclassical,
                outcome: a.outcome,
                best_nu: a.verdict.best_nu,
                excess: a.verdict.excess,
                significance: a.verdict.significance,
                k: a.verdict.k_required,
            },
            plan: a.plan.as_ref().map(PlanBlock::from),
            histogram: histogram.map(HistogramBlock::from),
            notes: Notes {
                abs_bias: ABS_BIAS,
                abs_squared_bias_at_best_nu: (1.0 - best_abs * best_abs) / a.n as f64,
                multiple_comparisons: MULTIPLE_COMPARISONS,
            },
        }
    }
}

/// Pretty-printed JSON with every float at 17 significant digits.
/// Non-finite values (an infinite significance) become `null`.
pub fn write_json<W: Write, S: Serialize>(w: W, value: &S) -> serde_json::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(w, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)
}

pub fn to_json_string<S: Serialize>(value: &S) -> String {
    let mut buf = Vec::new();
    write_json(&mut buf, value).expect("in-memory write");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8 json")
}

struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = to_json_string(&vec![0.1f64, -2.5e-300, f64::INFINITY]);
        let v: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(v, vec![Some(0.1), Some(-2.5e-300), None]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
    }
}
