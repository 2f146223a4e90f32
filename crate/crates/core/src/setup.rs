//! Per-grid geometric data shared by the jet builder and the Picard iteration.

use ndarray::Array2;
use rayon::prelude::*;

use crate::coefficients::{bbar2_jet, boundary_coeffs, GasState};
use crate::error::{Error, Result};
use crate::geometry::{CornerDomain, MapPoint};
use crate::grid::{Coef, Grid, Layout};

#[derive(Debug, Clone)]
pub struct FlowSetup {
    pub domain: CornerDomain,
    pub gas: GasState,
    pub grid: Grid,
    metric: Vec<MapPoint>,
    /// `bbar1(z2_j)` along `z1 = 0`.
    pub bbar1: Vec<f64>,
    pub bbar2: Vec<f64>,
    /// `bbar2 / bbar1`, the co-normal ghost ratio.
    pub ratio: Vec<f64>,
    pub b2_corner_jet: [f64; 3],
}

impl FlowSetup {
    pub fn new(domain: CornerDomain, gas: GasState, grid: Grid) -> Result<Self> {
        if grid.layout != Layout::Quarter {
            return Err(Error::InvalidInput("flow setup needs a quarter-plane grid".into()));
        }
        let (n1, n2) = grid.shape();
        let metric: Vec<MapPoint> = (0..n1 * n2)
            .into_par_iter()
            .map(|k| domain.map_point_z([grid.z1(k / n2), grid.z2(k % n2)]))
            .collect::<Result<_>>()?;
        let bb: Vec<(f64, f64)> =
            (0..n2).into_par_iter().map(|j| boundary_coeffs(&domain, grid.z2(j))).collect::<Result<_>>()?;
        let bbar1: Vec<f64> = bb.iter().map(|b| b.0).collect();
        let bbar2: Vec<f64> = bb.iter().map(|b| b.1).collect();
        let ratio = bb.iter().map(|b| b.1 / b.0).collect();
        let b2_corner_jet = bbar2_jet(&domain, 0.0)?;
        Ok(Self { domain, gas, grid, metric, bbar1, bbar2, ratio, b2_corner_jet })
    }

    #[inline]
    pub fn map_point(&self, i: usize, j: usize) -> &MapPoint {
        &self.metric[i * self.grid.shape().1 + j]
    }

    /// `(bbar1, bbar2)` as static coefficients over the grid.
    pub fn boundary_coefs(&self) -> (Coef, Coef) {
        let shape = self.grid.shape();
        (
            Coef::Space(Array2::from_shape_fn(shape, |(_, j)| self.bbar1[j])),
            Coef::Space(Array2::from_shape_fn(shape, |(_, j)| self.bbar2[j])),
        )
    }

    /// Evaluates `f(i, j)` over the grid in parallel, stopping at the first error.
    pub fn par_field(&self, f: impl Fn(usize, usize) -> Result<f64> + Sync) -> Result<Array2<f64>> {
        let (n1, n2) = self.grid.shape();
        let v: Vec<f64> = (0..n1 * n2).into_par_iter().map(|k| f(k / n2, k % n2)).collect::<Result<_>>()?;
        Ok(Array2::from_shape_vec((n1, n2), v).expect("shape matches"))
    }
}
