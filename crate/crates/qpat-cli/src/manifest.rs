//! Experiment manifests: a single JSON file describing grid, phantom,
//! illuminations, noise, reconstruction settings, and sweep layout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qpat::forward::{IlluminationSpec, PhantomSpec};
use qpat::grid::Grid;
use qpat::inverse::ReconstructionConfig;
use qpat::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub target_eps: f64,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

/// Sweep layout: for each amplitude and seed, the base phantom is perturbed
/// by a diffusion bump of that amplitude whose center is jittered by the
/// seed, and the data/coefficient gaps are measured.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub amplitudes: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_bump_radius")]
    pub bump_radius: f64,
    /// Uniform jitter half-width applied to the bump center per seed.
    #[serde(default = "default_center_jitter")]
    pub center_jitter: f64,
    /// Fixed scale of the bump shape; negative values probe the
    /// diffusion-lowering direction.
    #[serde(default = "default_bump_scale")]
    pub bump_scale: f64,
}

fn default_bump_radius() -> f64 {
    0.25
}

fn default_center_jitter() -> f64 {
    0.05
}

fn default_bump_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phantom: Option<PhantomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub illumination: Option<IlluminationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A manifest together with the hash of its source bytes.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    pub sha256: String,
}

pub fn load_manifest(path: &Path) -> Result<LoadedManifest> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Parameter(format!("cannot read manifest {}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_slice(&bytes)?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::Parameter(format!(
            "unsupported manifest schema_version {} (expected {SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(LoadedManifest {
        manifest,
        sha256: hex::encode(hasher.finalize()),
    })
}

/// Provenance block attached to every JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub manifest_sha256: String,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(manifest_sha256: &str) -> Provenance {
        Provenance {
            manifest_sha256: manifest_sha256.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}
