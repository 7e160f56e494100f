//! Run manifests: config echo, artifact versions, wall clock and a digest
//! for every emitted file, so a finished run can be re-verified byte by
//! byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub versions: Versions,
    pub wall_clock_ms: u64,
    pub outputs: Vec<OutputFile>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub core: String,
    pub cli: String,
}

impl RunManifest {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects emitted files and their digests under one output directory.
pub struct Emitter {
    dir: PathBuf,
    outputs: Vec<OutputFile>,
}

impl Emitter {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir, outputs: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(OutputFile {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn into_outputs(self) -> Vec<OutputFile> {
        self.outputs
    }
}

/// Minimal SVG polyline for a sampled path, plus an axis-metadata sidecar.
pub fn emit_path_svg(
    emitter: &mut Emitter,
    name: &str,
    path: &noarb_core::Path,
    y_label: &str,
) -> Result<()> {
    let grid = path.grid();
    let y_min = path.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = path.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (y_max - y_min).max(1e-12);
    let mut points = String::new();
    for (i, v) in path.values().iter().enumerate() {
        let x = 1000.0 * grid.time(i) / grid.horizon();
        let y = 600.0 - 600.0 * (v - y_min) / span;
        points.push_str(&format!("{x:.3},{y:.3} "));
    }
    let svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 600\">\n<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"{}\"/>\n</svg>\n",
        points.trim_end()
    );
    emitter.write(name, svg.as_bytes())?;
    #[derive(Serialize)]
    struct Axes<'a> {
        x_label: &'a str,
        y_label: &'a str,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        points: usize,
    }
    emitter.write_json(
        &format!("{}.axes.json", name.trim_end_matches(".svg")),
        &Axes {
            x_label: "t",
            y_label,
            x_min: 0.0,
            x_max: grid.horizon(),
            y_min,
            y_max,
            points: path.len(),
        },
    )
}

/// Re-verify every digest listed in a manifest file. Returns the mismatched
/// file names (empty when the manifest is intact).
pub fn verify_manifest(manifest_path: &Path) -> Result<(RunManifest, Vec<String>)> {
    let text = fs::read_to_string(manifest_path)
        .with_context(|| format!("cannot read {}", manifest_path.display()))?;
    let manifest: RunManifest = serde_json::from_str(&text).context("malformed manifest")?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut mismatched = Vec::new();
    for out in &manifest.outputs {
        let path = base.join(&out.file);
        match fs::read(&path) {
            Ok(bytes) => {
                if sha256_hex(&bytes) != out.sha256 {
                    mismatched.push(out.file.clone());
                }
            }
            Err(_) => mismatched.push(out.file.clone()),
        }
    }
    Ok((manifest, mismatched))
}
