use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

/// Everything needed to rerun a command: the argv it was given and the
/// parameters it resolved them to.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name, `--manifest` removed.
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = crate::report::to_json_string(self);
        std::fs::write(path, text).with_context(|| format!("writing manifest {}", path.display()))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Drops `--manifest PATH` / `--manifest=PATH` so a replay does not
/// overwrite the manifest it was started from.
pub fn strip_manifest_flag(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--manifest" {
            skip = true;
            continue;
        }
        if a.starts_with("--manifest=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}
