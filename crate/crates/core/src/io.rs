//! JSON files for bases, targets, relevant-vector caches and path traces.
//!
//! Scalars are written as reduced `"p/q"` or `"p"` strings so files round-trip
//! bit-exactly. Basis matrices are row-major with the basis vectors as columns.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{LatticeBasis, Target};
use crate::navigation::{PathTrace, Phase};
use crate::rational::{self, Matrix};
use crate::voronoi::VoronoiCellData;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisFile {
    pub n: usize,
    pub basis: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetFile {
    pub t: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VrCacheFile {
    pub basis_hash: String,
    pub n: usize,
    pub vr: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLine {
    pub alpha: String,
    pub edge: Vec<i64>,
    pub phase: Phase,
}

pub fn basis_to_file(basis: &LatticeBasis) -> BasisFile {
    let m = basis.matrix();
    BasisFile {
        n: basis.dim(),
        basis: (0..m.rows())
            .map(|i| m.row(i).iter().map(rational::format_scalar).collect())
            .collect(),
    }
}

pub fn basis_from_file(file: &BasisFile) -> Result<LatticeBasis> {
    if file.basis.len() != file.n || file.basis.iter().any(|r| r.len() != file.n) {
        return Err(Error::Shape(format!("basis must be {0}x{0}", file.n)));
    }
    let rows = file
        .basis
        .iter()
        .map(|r| {
            r.iter()
                .map(|s| rational::parse_scalar(s))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    LatticeBasis::from_matrix(Matrix::from_rows(rows)?)
}

pub fn parse_basis(json: &str) -> Result<LatticeBasis> {
    basis_from_file(&serde_json::from_str(json)?)
}

/// Canonical compact JSON of a basis; the input of [`basis_hash`].
pub fn basis_json(basis: &LatticeBasis) -> String {
    serde_json::to_string(&basis_to_file(basis)).expect("plain data serializes")
}

/// Hex SHA-256 of the canonical basis JSON.
pub fn basis_hash(basis: &LatticeBasis) -> String {
    hex::encode(Sha256::digest(basis_json(basis).as_bytes()))
}

pub fn target_to_file(t: &Target) -> TargetFile {
    TargetFile {
        t: t.coords.iter().map(rational::format_scalar).collect(),
    }
}

pub fn target_from_file(file: &TargetFile) -> Result<Target> {
    let coords = file
        .t
        .iter()
        .map(|s| rational::parse_scalar(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Target::new(coords))
}

pub fn parse_target(json: &str) -> Result<Target> {
    target_from_file(&serde_json::from_str(json)?)
}

pub fn vr_cache(cell: &VoronoiCellData) -> VrCacheFile {
    VrCacheFile {
        basis_hash: basis_hash(cell.basis()),
        n: cell.dim(),
        vr: cell
            .relevant()
            .iter()
            .map(|v| v.coeffs().iter().map(|c| c.to_string()).collect())
            .collect(),
    }
}

/// Rebuilds a cell from a cache, checking it belongs to `basis`.
pub fn cell_from_cache(basis: &LatticeBasis, cache: &VrCacheFile) -> Result<VoronoiCellData> {
    let expected = basis_hash(basis);
    if cache.basis_hash != expected {
        return Err(Error::Cache(format!(
            "cache is for basis {}, not {}",
            cache.basis_hash, expected
        )));
    }
    if cache.n != basis.dim() {
        return Err(Error::Cache(format!(
            "cache has n = {}, basis has {}",
            cache.n,
            basis.dim()
        )));
    }
    let coeffs = cache
        .vr
        .iter()
        .map(|v| {
            if v.len() != cache.n {
                return Err(Error::Cache("coefficient vector of wrong length".into()));
            }
            v.iter()
                .map(|s| {
                    s.trim()
                        .parse::<i64>()
                        .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    VoronoiCellData::from_coeffs(basis.clone(), coeffs)
}

/// One JSON line per crossing event.
pub fn trace_lines(cell: &VoronoiCellData, trace: &PathTrace) -> Vec<TraceLine> {
    trace
        .events
        .iter()
        .map(|e| TraceLine {
            alpha: rational::format_scalar(&e.alpha),
            edge: cell.relevant()[e.edge].coeffs().to_vec(),
            phase: e.phase,
        })
        .collect()
}

pub fn write_trace<W: Write>(mut out: W, cell: &VoronoiCellData, trace: &PathTrace) -> Result<()> {
    for line in trace_lines(cell, trace) {
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
