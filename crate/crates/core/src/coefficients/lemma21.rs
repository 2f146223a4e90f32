//! Numerical check that the transformed coefficients vanish on `z2 = 0`,
//! are co-normal on `z1 = 0`, and that `bbar2` is flat at the corner.

use serde::{Deserialize, Serialize};

use super::{alpha_from_gradient, bbar2_jet, boundary_coeffs, physical_gradient, GasState};
use crate::data::{BumpSum, ConormalProjection};
use crate::error::{Error, Result};
use crate::geometry::{CornerDomain, Point};

/// A potential in `z` coordinates, queried through its space-time gradient.
pub trait CandidatePotential {
    /// `(d_z0, d_z1, d_z2) Phi_hat` at time `t` and point `z`.
    fn dphi_hat(&self, t: f64, z: Point) -> Result<[f64; 3]>;
}

/// The fluid at rest.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaticPotential;

impl CandidatePotential for StaticPotential {
    fn dphi_hat(&self, _t: f64, _z: Point) -> Result<[f64; 3]> {
        Ok([0.0; 3])
    }
}

/// `cos(omega t)` times a doubly reflected bump sum with the co-normal defect
/// projected off; spatial derivatives by fourth-order central differences.
#[derive(Debug, Clone)]
pub struct ReflectedCandidate {
    pub dom: CornerDomain,
    pub data: BumpSum,
    pub projection_radius: f64,
    pub omega: f64,
    pub h_diff: f64,
}

impl ReflectedCandidate {
    pub fn spatial(&self, z: Point) -> Result<f64> {
        let proj = ConormalProjection { dom: &self.dom, radius: self.projection_radius };
        proj.apply(&self.data, z)
    }
}

pub(crate) fn central4(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    Ok((-f(2.0 * h)? + 8.0 * f(h)? - 8.0 * f(-h)? + f(-2.0 * h)?) / (12.0 * h))
}

impl CandidatePotential for ReflectedCandidate {
    fn dphi_hat(&self, t: f64, z: Point) -> Result<[f64; 3]> {
        let c = (self.omega * t).cos();
        let s = (self.omega * t).sin();
        let h = self.h_diff;
        let d1 = central4(|e| self.spatial([z[0] + e, z[1]]), h)?;
        let d2 = central4(|e| self.spatial([z[0], z[1] + e]), h)?;
        Ok([-self.omega * s * self.spatial(z)?, c * d1, c * d2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Options {
    pub samples: usize,
    pub extent: f64,
    pub times: Vec<f64>,
    pub slip_tol: f64,
    pub h_diff: f64,
}

impl Default for Lemma21Options {
    fn default() -> Self {
        Self { samples: 24, extent: 0.9, times: vec![0.0, 0.4], slip_tol: 1e-6, h_diff: 1e-3 }
    }
}

/// Maximum residuals of the three structural identities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Lemma21Report {
    /// `max |alpha_02|` on `z2 = 0`.
    pub gamma2_alpha02: f64,
    /// `max |alpha_12|` on `z2 = 0`.
    pub gamma2_alpha12: f64,
    /// `max |alpha_12 bbar1 - alpha_11 bbar2|` on `z1 = 0`.
    pub gamma1_conormal: f64,
    /// `max |alpha_12/alpha_11 - bbar2/bbar1|` on `z1 = 0`.
    pub gamma1_ratio: f64,
    /// `max |alpha_01|` on `z1 = 0`.
    pub gamma1_alpha01: f64,
    /// `|d^k bbar2(0,0)|`, k = 0,1,2, by fourth-order differences.
    pub bbar2_corner: [f64; 3],
    /// The same from the closed-form jet.
    pub bbar2_corner_exact: [f64; 3],
    pub slip_wall1: f64,
    pub slip_wall2: f64,
    pub samples: usize,
}

impl Lemma21Report {
    pub fn max_residual(&self) -> f64 {
        [
            self.gamma2_alpha02,
            self.gamma2_alpha12,
            self.gamma1_conormal,
            self.gamma1_alpha01,
            self.bbar2_corner[0],
            self.bbar2_corner[1],
            self.bbar2_corner[2],
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn check_lemma21(
    dom: &CornerDomain,
    gas: &GasState,
    cand: &dyn CandidatePotential,
    opts: &Lemma21Options,
) -> Result<Lemma21Report> {
    let mut rep = Lemma21Report::default();
    let n = opts.samples.max(1);
    for &t in &opts.times {
        for k in 0..=n {
            let s = opts.extent * k as f64 / n as f64;

            let mp = dom.map_point_z([s, 0.0])?;
            let d = cand.dphi_hat(t, mp.z)?;
            let v = physical_gradient(&mp, [d[1], d[2]]);
            let slip = (v[1] - dom.wall2.d(mp.x[0], 1) * v[0]).abs();
            rep.slip_wall2 = rep.slip_wall2.max(slip);
            let (alpha, _) = alpha_from_gradient(&mp, gas, d)?;
            rep.gamma2_alpha02 = rep.gamma2_alpha02.max(alpha.m02.abs());
            rep.gamma2_alpha12 = rep.gamma2_alpha12.max(alpha.m12.abs());

            let mp = dom.map_point_z([0.0, s])?;
            let d = cand.dphi_hat(t, mp.z)?;
            let v = physical_gradient(&mp, [d[1], d[2]]);
            let slip = (v[0] - dom.wall1.d(mp.x[1], 1) * v[1]).abs();
            rep.slip_wall1 = rep.slip_wall1.max(slip);
            let (alpha, _) = alpha_from_gradient(&mp, gas, d)?;
            let (b1, b2) = boundary_coeffs(dom, s)?;
            rep.gamma1_conormal = rep.gamma1_conormal.max((alpha.m12 * b1 - alpha.m11 * b2).abs());
            rep.gamma1_ratio = rep.gamma1_ratio.max((alpha.m12 / alpha.m11 - b2 / b1).abs());
            rep.gamma1_alpha01 = rep.gamma1_alpha01.max(alpha.m01.abs());
        }
    }
    rep.samples = (n + 1) * opts.times.len();
    if rep.slip_wall1 > opts.slip_tol {
        return Err(Error::PreconditionViolated(format!(
            "candidate violates the slip condition on wall 1 (residual {:.3e})",
            rep.slip_wall1
        )));
    }
    if rep.slip_wall2 > opts.slip_tol {
        return Err(Error::PreconditionViolated(format!(
            "candidate violates the slip condition on wall 2 (residual {:.3e})",
            rep.slip_wall2
        )));
    }
    let h = opts.h_diff;
    let f = |s: f64| -> Result<f64> { Ok(boundary_coeffs(dom, s)?.1) };
    let f0 = f(0.0)?;
    let d1 = central4(f, h)?;
    let d2 = (-f(2.0 * h)? + 16.0 * f(h)? - 30.0 * f0 + 16.0 * f(-h)? - f(-2.0 * h)?) / (12.0 * h * h);
    rep.bbar2_corner = [f0.abs(), d1.abs(), d2.abs()];
    let jet = bbar2_jet(dom, 0.0)?;
    rep.bbar2_corner_exact = [jet[0].abs(), jet[1].abs(), jet[2].abs()];
    Ok(rep)
}
