//! Report files: every JSON and CSV carries the config hash and the grid metadata.

use std::fmt::Write as _;
use std::path::PathBuf;

use ndarray::Array3;
use serde::Serialize;
use sha2::{Digest, Sha256};

use corner_flow::grid::Grid;

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub n: usize,
    pub nt: usize,
    pub h: f64,
    pub dt: f64,
    pub extent: f64,
    pub t_final: f64,
    pub eta: f64,
}

impl From<&Grid> for GridMeta {
    fn from(g: &Grid) -> Self {
        Self { n: g.n, nt: g.nt, h: g.h, dt: g.dt, extent: g.extent, t_final: g.t_final(), eta: g.eta }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_sha256: &'a str,
    grid: GridMeta,
    report: &'a T,
}

pub struct Out {
    pub dir: PathBuf,
    pub config_hash: String,
}

impl Out {
    fn write(&self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
    }

    pub fn json<T: Serialize>(&self, name: &str, grid: &Grid, report: &T) -> Result<(), CliError> {
        let env = Envelope { config_sha256: &self.config_hash, grid: grid.into(), report };
        let body = serde_json::to_string_pretty(&env).expect("reports serialize");
        self.write(name, &(body + "\n"))
    }

    /// CSV preceded by `#` lines with the config hash and grid.
    pub fn csv(&self, name: &str, grid: &Grid, header: &str, rows: &[String]) -> Result<(), CliError> {
        let m = GridMeta::from(grid);
        let mut body = format!(
            "# config_sha256={}\n# grid n={} nt={} h={} dt={} extent={} t_final={}\n{header}\n",
            self.config_hash, m.n, m.nt, m.h, m.dt, m.extent, m.t_final
        );
        for r in rows {
            body.push_str(r);
            body.push('\n');
        }
        self.write(name, &body)
    }

    /// Raw field plus a JSON sidecar (which also records the config hash).
    pub fn field(&self, stem: &str, field: &Array3<f64>, grid: &Grid) -> Result<(), CliError> {
        corner_flow::linear_solver::dump_field(&self.dir, stem, field, grid)?;
        self.json(&format!("{stem}.meta.json"), grid, &serde_json::json!({ "shape": field.shape() }))
    }
}
