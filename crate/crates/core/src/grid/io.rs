//! Raw little-endian `f64` grid files with a JSON sidecar at `<path>.json`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{GridError, GridSpec};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("sidecar not found: {0}")]
    SidecarNotFound(PathBuf),
    #[error("bad sidecar {path}: {source}")]
    BadSidecar { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {len} bytes is not a whole number of f64 values")]
    Truncated { path: PathBuf, len: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

/// Writes `values` row-major as little-endian doubles plus the sidecar.
pub fn write_grid(path: &Path, spec: &GridSpec, values: &[f64]) -> Result<(), IoError> {
    if values.len() != spec.num_nodes() {
        return Err(GridError::SizeMismatch { expected: spec.num_nodes(), got: values.len() }.into());
    }
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(spec).expect("grid spec serializes");
    fs::write(&side, json).map_err(io_err(&side))?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<(GridSpec, Vec<f64>), IoError> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Err(IoError::SidecarNotFound(side));
    }
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    let spec: GridSpec =
        serde_json::from_str(&text).map_err(|source| IoError::BadSidecar { path: side.clone(), source })?;
    spec.validate()?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() % 8 != 0 {
        return Err(IoError::Truncated { path: path.to_path_buf(), len: bytes.len() });
    }
    let values: Vec<f64> =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    if values.len() != spec.num_nodes() {
        return Err(GridError::SizeMismatch { expected: spec.num_nodes(), got: values.len() }.into());
    }
    Ok((spec, values))
}
