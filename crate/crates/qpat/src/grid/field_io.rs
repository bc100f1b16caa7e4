//! Field and trace file formats.
//!
//! A scalar field is stored as a pair of files: `<name>.json` with the header
//! `{"dims": [...], "domain": ..., "dtype": "f64-le", "order": "row-major"}`
//! and `<name>.bin` with the raw little-endian 64-bit nodal values. 2D fields
//! can additionally be exported as CSV, one row per y-line. Boundary traces
//! are small and stored as a single JSON file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, Domain, Grid, ScalarField};

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    dims: Vec<usize>,
    domain: Domain,
    dtype: String,
    order: String,
}

/// Writes `<stem>.json` and `<stem>.bin`. The write is atomic (temp + rename).
pub fn write_field(stem: &Path, field: &ScalarField) -> Result<()> {
    let grid = field.grid();
    let header = FieldHeader {
        dims: vec![grid.n(); grid.dim()],
        domain: grid.domain(),
        dtype: "f64-le".into(),
        order: "row-major".into(),
    };
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(
        &stem.with_extension("json"),
        serde_json::to_string_pretty(&header)?.as_bytes(),
    )?;
    write_atomic(&stem.with_extension("bin"), &bytes)?;
    Ok(())
}

/// Reads a field written by [`write_field`]; `stem` is the path without
/// extension.
pub fn read_field(stem: &Path) -> Result<ScalarField> {
    let header: FieldHeader = serde_json::from_slice(&fs::read(stem.with_extension("json"))?)?;
    let dim = header.dims.len();
    if header.dims.iter().any(|&d| d != header.dims[0]) {
        return Err(Error::Parameter(format!(
            "anisotropic dims {:?} are not supported",
            header.dims
        )));
    }
    if header.dtype != "f64-le" || header.order != "row-major" {
        return Err(Error::Parameter(format!(
            "unsupported field encoding {}/{}",
            header.dtype, header.order
        )));
    }
    let grid = Grid::new(dim, header.dims[0])?;
    if grid.domain() != header.domain {
        return Err(Error::Parameter(format!(
            "domain {:?} does not match {} dims",
            header.domain, dim
        )));
    }
    let bytes = fs::read(stem.with_extension("bin"))?;
    if bytes.len() != 8 * grid.num_nodes() {
        return Err(Error::Parameter(format!(
            "binary payload has {} bytes, expected {}",
            bytes.len(),
            8 * grid.num_nodes()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::from_values(grid, values)
}

/// Exports a 2D field as CSV, one row per y-line.
pub fn write_field_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let grid = field.grid();
    if grid.dim() != 2 {
        return Err(Error::Operation("CSV export is 2D only".into()));
    }
    let n = grid.n();
    let mut out = String::new();
    for iy in 0..n {
        let row: Vec<String> = (0..n)
            .map(|ix| format!("{:.17e}", field.get(iy * n + ix)))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceFile {
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

/// Writes a boundary trace as a single JSON file.
pub fn write_trace(path: &Path, trace: &BoundaryTrace) -> Result<()> {
    let grid = trace.grid();
    let file = TraceFile {
        dim: grid.dim(),
        n: grid.n(),
        values: trace.values().to_vec(),
    };
    write_atomic(path, serde_json::to_string(&file)?.as_bytes())
}

pub fn read_trace(path: &Path) -> Result<BoundaryTrace> {
    let file: TraceFile = serde_json::from_slice(&fs::read(path)?)?;
    let grid = Grid::new(file.dim, file.n)?;
    BoundaryTrace::from_values(grid, file.values)
}

/// Writes bytes to `path` via a temporary file in the same directory followed
/// by a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp: PathBuf = path.to_path_buf();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Parameter(format!("not a file path: {}", path.display())))?;
    tmp.set_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
