//! Quadrature records and their on-disk text form.
//!
//! File layout (UTF-8, LF line endings):
//!
//! ```text
//! # vogellab-dataset v1
//! # units=normalized
//! # count=3
//! # seed=7
//! # state=mix:0.61
//! -2.3016588298392925e-1
//! 4.1163734402725589e-1
//! 1.0000000000000000e0
//! ```
//!
//! Header lines start with `#` and carry `key=value` pairs; `units` and
//! `count` come first, the remaining metadata follows in key order. Samples
//! are written with 17 significant digits, which round-trips every `f64`
//! (and therefore every `f32`) exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::Real;

pub const FILE_SIGNATURE: &str = "vogellab-dataset v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Quadrature values, vacuum variance 1/4.
    Normalized,
    /// Photoelectron-count differences; vacuum mean square equals the
    /// local-oscillator count `N0`.
    RawPhotoelectrons,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Normalized => "normalized",
            Units::RawPhotoelectrons => "raw_photoelectrons",
        })
    }
}

impl FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(Units::Normalized),
            "raw_photoelectrons" => Ok(Units::RawPhotoelectrons),
            other => domain(format!("unknown units '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureDataset<T> {
    samples: Vec<T>,
    units: Units,
    meta: BTreeMap<String, String>,
}

impl<T: Real> QuadratureDataset<T> {
    pub fn new(samples: Vec<T>, units: Units) -> Result<Self> {
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return domain(format!("sample {i} is not finite"));
        }
        Ok(Self { samples, units, meta: BTreeMap::new() })
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.meta.insert(key.into(), value.to_string());
        self
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn require_units(&self, expected: Units) -> Result<()> {
        if self.units != expected {
            return Err(Error::Units { expected, found: self.units });
        }
        Ok(())
    }

    /// Pools several records into one. Samples keep their order, file after
    /// file; each source contributes in proportion to its count.
    pub fn concat(parts: &[Self]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return domain("nothing to concatenate");
        };
        for p in parts {
            p.require_units(first.units)?;
        }
        if parts.len() == 1 {
            return Ok(first.clone());
        }
        let samples = parts.iter().flat_map(|p| p.samples.iter().copied()).collect();
        let mut out = Self::new(samples, first.units)?.with_meta("pooled_sources", parts.len());
        for (i, p) in parts.iter().enumerate() {
            out = out.with_meta(format!("source{i}.count"), p.count());
            if let Some(s) = p.meta.get("state") {
                out = out.with_meta(format!("source{i}.state"), s);
            }
        }
        Ok(out)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {FILE_SIGNATURE}")?;
        writeln!(w, "# units={}", self.units)?;
        writeln!(w, "# count={}", self.count())?;
        for (k, v) in &self.meta {
            if k == "units" || k == "count" {
                continue;
            }
            writeln!(w, "# {k}={}", v.replace('\n', " "))?;
        }
        for x in &self.samples {
            writeln!(w, "{:.16e}", x.as_f64())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut units = Units::Normalized;
        let mut declared_count = None;
        let mut samples = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let body = line.trim();
            if body.is_empty() {
                continue;
            }
            if let Some(comment) = body.strip_prefix('#') {
                let Some((k, v)) = comment.trim().split_once('=') else {
                    continue;
                };
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "units" => {
                        units = v.parse().map_err(|e: Error| Error::Parse { line: lineno, message: e.to_string() })?;
                    }
                    "count" => {
                        let c = v
                            .parse::<usize>()
                            .map_err(|e| Error::Parse { line: lineno, message: format!("bad count '{v}': {e}") })?;
                        declared_count = Some(c);
                    }
                    _ => {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            let x: f64 = body
                .parse()
                .map_err(|e| Error::Parse { line: lineno, message: format!("bad sample '{body}': {e}") })?;
            if !x.is_finite() {
                return Err(Error::Parse { line: lineno, message: format!("non-finite sample '{body}'") });
            }
            samples.push(T::lit(x));
        }
        if let Some(c) = declared_count {
            if c != samples.len() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("header declares {c} samples, file holds {}", samples.len()),
                });
            }
        }
        Ok(Self { samples, units, meta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = File::create(path)?;
        self.write_to(BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = File::open(path)?;
        Self::read_from(BufReader::new(f))
    }
}
