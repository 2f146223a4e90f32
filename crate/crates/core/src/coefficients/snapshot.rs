use ndarray::Array2;
use rayon::prelude::*;

use super::{alpha_from_gradient, boundary_coeffs, CandidatePotential, GasState};
use crate::error::Result;
use crate::geometry::CornerDomain;
use crate::grid::Grid;

/// Transformed coefficients of one time level sampled on a quarter-plane grid.
/// `b1`, `b2` carry the wall-1 values `bbar(z2)` along every `z1` line.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSnapshot {
    pub r01: Array2<f64>,
    pub r02: Array2<f64>,
    pub r11: Array2<f64>,
    pub r12: Array2<f64>,
    pub r22: Array2<f64>,
    pub lower1: Array2<f64>,
    pub lower2: Array2<f64>,
    pub b1: Array2<f64>,
    pub b2: Array2<f64>,
}

impl CoefficientSnapshot {
    pub fn sample(dom: &CornerDomain, gas: &GasState, grid: &Grid, cand: &(dyn CandidatePotential + Sync), t: f64) -> Result<Self> {
        let g = grid.quarter();
        let (n1, n2) = g.shape();
        let bb: Vec<(f64, f64)> = (0..n2).into_par_iter().map(|j| boundary_coeffs(dom, g.z2(j))).collect::<Result<_>>()?;
        let rows: Vec<Vec<[f64; 7]>> = (0..n1)
            .into_par_iter()
            .map(|i| {
                (0..n2)
                    .map(|j| {
                        let mp = dom.map_point_z([g.z1(i), g.z2(j)])?;
                        let d = cand.dphi_hat(t, mp.z)?;
                        let (a, l) = alpha_from_gradient(&mp, gas, d)?;
                        Ok([a.m01, a.m02, a.m11, a.m12, a.m22, l[1], l[2]])
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let field = |c: usize| Array2::from_shape_fn((n1, n2), |(i, j)| rows[i][j][c]);
        Ok(Self {
            r01: field(0),
            r02: field(1),
            r11: field(2),
            r12: field(3),
            r22: field(4),
            lower1: field(5),
            lower2: field(6),
            b1: Array2::from_shape_fn((n1, n2), |(_, j)| bb[j].0),
            b2: Array2::from_shape_fn((n1, n2), |(_, j)| bb[j].1),
        })
    }
}
