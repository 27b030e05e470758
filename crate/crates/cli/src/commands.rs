use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use vogellab::analysis::{assess, estimate_eta_with_error, min_samples, nu_grid, summarize, variance_check, Histogram};
use vogellab::homodyne_sim::{calibrate, mean_and_population_variance, simulate_homodyne};
use vogellab::states::vacuum_char_fn;
use vogellab::{DetectorConfig, QuadratureDataset, Units};

use crate::report::{self, InputInfo, Report};
use crate::{usage, AnalyzeArgs, Ctx, CurvesArgs, PlanArgs, SimulateArgs};

/// CSV goes to `path` when given, else to `out`. LF line endings.
fn write_csv(path: Option<&Path>, out: &mut dyn Write, header: &str, rows: &[String]) -> anyhow::Result<()> {
    let mut text = String::with_capacity(rows.len() * 48);
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

pub fn simulate(a: &SimulateArgs, ctx: &Ctx, out: &mut dyn Write) -> anyhow::Result<()> {
    let det = DetectorConfig {
        efficiency: a.efficiency,
        electronic_noise_sigma: a.electronic_noise,
        lo_mean_count: a.lo_mean_count,
        seed: a.seed,
        units: if a.raw { Units::RawPhotoelectrons } else { Units::Normalized },
    };
    if let Err(e) = det.validate() {
        return usage(e.to_string());
    }
    let n = usize::try_from(a.n).context("sample count does not fit in memory")?;
    let data = simulate_homodyne(&a.state.state, &det, n)?.with_meta("state_spec", &a.state.text);
    data.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;

    let (mean, var) = mean_and_population_variance(data.samples());
    writeln!(out, "wrote {} samples to {}", data.count(), a.out.display())?;
    writeln!(out, "units = {}", data.units())?;
    writeln!(out, "mean = {mean}")?;
    writeln!(out, "variance = {var}")?;
    if data.units() == Units::Normalized && data.count() >= 100 {
        let eta = estimate_eta_with_error(&data)?;
        writeln!(out, "estimated_eta = {} +/- {}", eta.eta, eta.std_error)?;
    }
    let m = ctx.manifest("simulate", a, vec![], vec![a.out.clone()], Some(a.seed));
    ctx.finish(&m)
}

fn load(path: &Path) -> anyhow::Result<QuadratureDataset> {
    QuadratureDataset::load(path).with_context(|| format!("reading {}", path.display()))
}

pub fn analyze(a: &AnalyzeArgs, ctx: &Ctx, out: &mut dyn Write) -> anyhow::Result<()> {
    if !(a.k > 0.0 && a.k.is_finite()) {
        return usage(format!("--k must be positive, got {}", a.k));
    }
    let grid = match nu_grid(a.nu_max, a.nu_step) {
        Ok(g) => g,
        Err(e) => return usage(e.to_string()),
    };
    if a.bins < 2 || !(a.range > 0.0 && a.range.is_finite()) {
        return usage(format!("histogram needs at least 2 bins and a positive range, got {} and {}", a.bins, a.range));
    }
    if let Some(h) = a.eta_hypothesis {
        if !(0.0..=1.0).contains(&h) {
            return usage(format!("--eta-hypothesis must lie in [0, 1], got {h}"));
        }
    }

    let parts = a.inputs.iter().map(|p| load(p)).collect::<anyhow::Result<Vec<_>>>()?;
    let any_raw = parts.iter().any(|d| d.units() == Units::RawPhotoelectrons);
    let vacuum = match &a.vacuum_ref {
        Some(p) => {
            let v = load(p)?;
            if v.units() != Units::RawPhotoelectrons {
                return usage(format!("vacuum reference {} must hold raw photoelectron samples", p.display()));
            }
            Some(v)
        }
        None if any_raw => return usage("raw input needs a vacuum reference (--vacuum-ref)"),
        None => None,
    };

    let mut inputs = Vec::with_capacity(parts.len());
    let mut normalized = Vec::with_capacity(parts.len());
    for (path, d) in a.inputs.iter().zip(parts) {
        let d = match (&vacuum, d.units()) {
            (Some(v), Units::RawPhotoelectrons) => calibrate(&d, v)?,
            _ => d,
        };
        inputs.push(InputInfo {
            path: path.display().to_string(),
            count: d.count(),
            units: d.units().to_string(),
            meta: d.meta().clone(),
        });
        normalized.push(d);
    }
    let pooled = QuadratureDataset::concat(&normalized)?;

    let assessment = assess(&pooled, &grid, a.k)?;
    let hypothesis = a.eta_hypothesis.map(|h| variance_check(&pooled, h)).transpose()?;
    let histogram = summarize(&pooled, a.bins, a.range)?;

    let mut outputs = Vec::new();
    if let Some(p) = &a.histogram {
        write_histogram(p, &histogram)?;
        outputs.push(p.clone());
    }
    outputs.extend(a.report.iter().cloned());
    let mut all_inputs = a.inputs.clone();
    all_inputs.extend(a.vacuum_ref.iter().cloned());
    let m = ctx.manifest("analyze", a, all_inputs, outputs, None);
    if let Some(p) = &a.report {
        let r = Report::build(m.clone(), inputs, &assessment, hypothesis.as_ref(), Some(&histogram));
        let f = File::create(p).with_context(|| format!("writing {}", p.display()))?;
        let mut w = BufWriter::new(f);
        report::write_json(&mut w, &r)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }

    let v = &assessment.verdict;
    writeln!(out, "n = {}", assessment.n)?;
    writeln!(out, "estimated_eta = {} +/- {}", assessment.eta.eta, assessment.eta.std_error)?;
    writeln!(
        out,
        "variance = {} (z vs vacuum = {})",
        assessment.vacuum_variance.sample_variance, assessment.vacuum_variance.z
    )?;
    if let Some(h) = &hypothesis {
        writeln!(out, "z vs eta = {}: {}", h.eta_hypothesis, h.z)?;
    }
    writeln!(
        out,
        "best_nu = {}, excess = {}, significance = {} (k = {})",
        v.best_nu, v.excess, v.significance, v.k_required
    )?;
    if let Some(p) = &assessment.at_nu_opt {
        writeln!(out, "at nu_opt = {}: excess = {}, significance = {}", p.nu, p.excess, p.significance)?;
    }
    if let Some(p) = &assessment.plan {
        writeln!(out, "min_samples(eta = {}, k = {}) = {}", p.eta, p.k, p.n_min)?;
    }
    writeln!(out, "verdict: {}", assessment.outcome)?;
    ctx.finish(&m)
}

fn write_histogram(path: &Path, h: &Histogram<f64>) -> anyhow::Result<()> {
    let rows: Vec<String> = h.counts.iter().enumerate().map(|(i, c)| format!("{},{}", h.bin_center(i), c)).collect();
    let mut sink = std::io::sink();
    write_csv(Some(path), &mut sink, "x,count", &rows)
}

fn plan_etas(a: &PlanArgs) -> anyhow::Result<Vec<f64>> {
    let valid = |e: f64| e > 0.0 && e <= 1.0;
    if let Some(eta) = a.eta {
        if !valid(eta) {
            return usage(format!("--eta must lie in (0, 1], got {eta}"));
        }
        return Ok(vec![eta]);
    }
    let (Some(lo), Some(hi), Some(step)) = (a.eta_min, a.eta_max, a.step) else {
        return usage("give --eta or all of --eta-min, --eta-max, --step");
    };
    if !(valid(lo) && valid(hi) && lo <= hi) {
        return usage(format!("need 0 < eta-min <= eta-max <= 1, got {lo} and {hi}"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return usage(format!("--step must be positive, got {step}"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // round away representation noise so rows read 0.3, not 0.30000000000000004
    Ok((0..count).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).map(|e| e.min(hi)).collect())
}

pub fn plan(a: &PlanArgs, ctx: &Ctx, out: &mut dyn Write) -> anyhow::Result<()> {
    if !(a.k > 0.0 && a.k.is_finite()) {
        return usage(format!("--k must be positive, got {}", a.k));
    }
    let mut rows = Vec::new();
    for eta in plan_etas(a)? {
        let p = match min_samples(eta, a.k) {
            Ok(p) => p,
            Err(e) => return usage(format!("eta = {eta}: {e}")),
        };
        rows.push(format!("{},{},{},{}", p.eta, p.nu_opt, p.gap, p.n_min));
    }
    write_csv(a.out.as_deref(), out, "eta,nu_opt,gap,n_min", &rows)?;
    let m = ctx.manifest("plan", a, vec![], a.out.iter().cloned().collect(), None);
    ctx.finish(&m)
}

pub fn curves(a: &CurvesArgs, ctx: &Ctx, out: &mut dyn Write) -> anyhow::Result<()> {
    let grid = match nu_grid(a.nu_max, a.nu_step) {
        Ok(g) => g,
        Err(e) => return usage(e.to_string()),
    };
    let mut rows = Vec::with_capacity(grid.len());
    for nu in grid {
        let f = a.state.state.char_fn(nu)?;
        rows.push(format!("{},{},{},{}", nu, f.re, f.norm(), vacuum_char_fn(nu)));
    }
    write_csv(a.out.as_deref(), out, "nu,f_state,abs_f_state,f_vacuum", &rows)?;
    let outputs: Vec<PathBuf> = a.out.iter().cloned().collect();
    let m = ctx.manifest("curves", a, vec![], outputs, None);
    ctx.finish(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vogellab::states::{nu_opt, vogel_gap};

    fn range(lo: f64, hi: f64, step: f64) -> PlanArgs {
        PlanArgs { eta: None, eta_min: Some(lo), eta_max: Some(hi), step: Some(step), k: 1.0, out: None }
    }

    #[test]
    fn plan_rows_land_on_clean_values() {
        let e = plan_etas(&range(0.1, 1.0, 0.1)).unwrap();
        assert_eq!(e.len(), 10);
        assert_eq!(e[2], 0.3);
        assert_eq!(*e.last().unwrap(), 1.0);
        assert_eq!(plan_etas(&range(0.5, 0.5, 0.1)).unwrap(), vec![0.5]);
        assert!(plan_etas(&range(0.6, 0.5, 0.1)).is_err());
        assert!(plan_etas(&range(0.0, 0.5, 0.1)).is_err());
    }

    #[test]
    fn gap_and_optimum_agree_with_plan() {
        let p = min_samples(0.5, 1.0).unwrap();
        assert_eq!(p.gap, vogel_gap(0.5).unwrap());
        assert_eq!(p.nu_opt, nu_opt(0.5).unwrap());
    }
}
