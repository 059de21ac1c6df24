//! JSON serialization for packings and result reports.
//!
//! The packing document is the canonical on-disk format:
//!
//! ```json
//! {"dimension": 3, "points": [[1.0, 0.0, 0.0], ...], "phi": 0.55, "eps": 0.0, "meta": {}}
//! ```
//!
//! Every reader validates the full schema before constructing any geometry,
//! and every writer serializes the complete document in memory and moves it
//! into place atomically, so a failed run never leaves a partial file.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::hulls::DeloneComplex;
use crate::recovery::RecoveryResult;
use crate::sphgeo::{GeoError, Packing, UnitVector};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// On-disk form of a [`Packing`]. Unknown top-level keys are rejected;
/// free-form annotations belong under `meta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackingDocument {
    pub dimension: usize,
    pub points: Vec<Vec<f64>>,
    pub phi: f64,
    pub eps: f64,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

impl PackingDocument {
    pub fn from_packing(packing: &Packing) -> Self {
        Self {
            dimension: packing.dim,
            points: packing
                .points
                .iter()
                .map(|p| p.as_slice().to_vec())
                .collect(),
            phi: packing.phi,
            eps: packing.eps,
            meta: serde_json::Map::new(),
        }
    }

    /// Validates the document and builds the in-memory packing. Points must
    /// be finite, of the declared dimension, and unit-length to 1e-6 (they
    /// are renormalized exactly on load).
    pub fn to_packing(&self) -> Result<Packing, IoError> {
        if self.dimension < 2 {
            return Err(IoError::Schema(format!(
                "dimension must be at least 2, got {}",
                self.dimension
            )));
        }
        if self.points.is_empty() {
            return Err(IoError::Schema("points must be non-empty".into()));
        }
        if !self.phi.is_finite() || !self.eps.is_finite() {
            return Err(IoError::Schema(format!(
                "phi and eps must be finite, got phi={}, eps={}",
                self.phi, self.eps
            )));
        }
        let mut points = Vec::with_capacity(self.points.len());
        for (i, coords) in self.points.iter().enumerate() {
            if coords.len() != self.dimension {
                return Err(IoError::Schema(format!(
                    "point {i} has {} coordinates, expected {}",
                    coords.len(),
                    self.dimension
                )));
            }
            if coords.iter().any(|c| !c.is_finite()) {
                return Err(IoError::Schema(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
            let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(IoError::Schema(format!(
                    "point {i} has norm {norm}, expected a unit vector"
                )));
            }
            let v = nalgebra::DVector::from_vec(coords.clone());
            points.push(UnitVector::normalize(v)?);
        }
        Ok(Packing::new(points, self.phi, self.eps)?)
    }
}

/// Serializes a packing to the canonical pretty-printed JSON document.
pub fn packing_to_json(
    packing: &Packing,
    meta: serde_json::Map<String, serde_json::Value>,
) -> Result<String, IoError> {
    let mut doc = PackingDocument::from_packing(packing);
    doc.meta = meta;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Parses and fully validates a packing document from JSON text.
pub fn packing_from_json(text: &str) -> Result<Packing, IoError> {
    let doc: PackingDocument = serde_json::from_str(text)?;
    doc.to_packing()
}

pub fn read_packing(path: &Path) -> Result<Packing, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    packing_from_json(&text)
}

pub fn write_packing(
    path: &Path,
    packing: &Packing,
    meta: serde_json::Map<String, serde_json::Value>,
) -> Result<(), IoError> {
    let text = packing_to_json(packing, meta)?;
    atomic_write(path, &text)
}

static WRITE_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `contents` to `path` via a sibling temp file and an atomic rename,
/// creating parent directories as needed. Either the complete file appears
/// at `path` or nothing does.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), IoError> {
    let wrap = |source: std::io::Error| IoError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(wrap)?;
        }
    }
    let stamp = WRITE_COUNTER.fetch_add(1, Ordering::Relaxed);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp.{}.{stamp}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(|source| {
        let _ = fs::remove_file(&tmp);
        wrap(source)
    })
}

/// On-disk form of a [`RecoveryResult`], tagged with the configuration that
/// produced it. The rotation is stored as row-major nested arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryDocument {
    pub kind: String,
    pub dimension: usize,
    pub eps: f64,
    pub max_deviation: f64,
    pub certified_bound: f64,
    pub pass: bool,
    pub deviations: Vec<f64>,
    pub rotation: Vec<Vec<f64>>,
    pub reference: Vec<Vec<f64>>,
}

impl RecoveryDocument {
    pub fn from_result(kind: &str, result: &RecoveryResult) -> Self {
        let m = &result.rotation.matrix;
        let rotation = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        Self {
            kind: kind.to_string(),
            dimension: m.nrows(),
            eps: result.eps,
            max_deviation: result.max_deviation,
            certified_bound: result.certified_bound,
            pass: result.pass,
            deviations: result.deviations.clone(),
            rotation,
            reference: result
                .reference
                .iter()
                .map(|p| p.as_slice().to_vec())
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// On-disk form of a Delone decomposition: one record per cell plus the
/// complex-wide circumradius maximum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeloneDocument {
    pub dimension: usize,
    pub cell_count: usize,
    pub max_circumradius: f64,
    pub cells: Vec<DeloneCellDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeloneCellDocument {
    pub vertices: Vec<usize>,
    pub circumcenter: Vec<f64>,
    pub circumradius: f64,
}

impl DeloneDocument {
    pub fn from_complex(complex: &DeloneComplex) -> Self {
        Self {
            dimension: complex.dim,
            cell_count: complex.cells.len(),
            max_circumradius: complex.max_circumradius,
            cells: complex
                .cells
                .iter()
                .map(|c| DeloneCellDocument {
                    vertices: c.vertices.clone(),
                    circumcenter: c.circumcenter.as_slice().to_vec(),
                    circumradius: c.circumradius,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}
