use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// JSON sidecar of a raw field dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub h: f64,
    pub dt: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// `[levels, z1 points, z2 points]`, row-major.
    pub shape: [usize; 3],
    pub eta: f64,
}

/// Writes `<stem>.f64` (little-endian, row-major) and `<stem>.json`.
pub fn dump_field(dir: &Path, stem: &str, field: &Array3<f64>, grid: &Grid) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("cannot write {stem}: {e}"));
    fs::create_dir_all(dir).map_err(io)?;
    let mut bytes = Vec::with_capacity(field.len() * 8);
    for v in field.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::File::create(dir.join(format!("{stem}.f64"))).and_then(|mut f| f.write_all(&bytes)).map_err(io)?;
    let (a, b, c) = field.dim();
    let meta = FieldMeta { h: grid.h, dt: grid.dt, z: grid.extent, t: grid.t_final(), shape: [a, b, c], eta: grid.eta };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::InvalidInput(e.to_string()))?;
    fs::write(dir.join(format!("{stem}.json")), json).map_err(io)?;
    Ok(())
}

pub fn read_field(dir: &Path, stem: &str) -> Result<(Array3<f64>, FieldMeta)> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("cannot read {stem}: {e}"));
    let meta: FieldMeta = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json"))).map_err(io)?)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let bytes = fs::read(dir.join(format!("{stem}.f64"))).map_err(io)?;
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let field = Array3::from_shape_vec((meta.shape[0], meta.shape[1], meta.shape[2]), vals)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((field, meta))
}
