//! Time-derivative jets at `z0 = 0`, boundary compatibility residuals and the
//! cubic Taylor lift.

use ndarray::{Array1, Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::coefficients::{alpha_from_gradient, alpha_rate};
use crate::error::{Error, Result};
use crate::grid::{d1, d2, Grid};
use crate::linear_solver::stencil::Padded;
use crate::setup::FlowSetup;

/// `phi_k = d^k_{z0} Phi_hat` at `z0 = 0`, `k = 0..=3`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialJet {
    pub phi: [Array2<f64>; 4],
    /// Whether each entry came from the equation rather than the data.
    pub derived: [bool; 4],
}

impl InitialJet {
    pub fn zeros(g: &Grid) -> Self {
        Self { phi: std::array::from_fn(|_| g.zeros2()), derived: [false, false, true, true] }
    }

    pub fn is_zero(&self) -> bool {
        self.phi.iter().all(|p| p.iter().all(|&v| v == 0.0))
    }
}

/// `phi2` from the equation at `z0 = 0`, `phi3` from its time derivative, both
/// with the solver's ghost-padded stencils.
pub fn build_jet(setup: &FlowSetup, phi0: &Array2<f64>, phi1: &Array2<f64>) -> Result<InitialJet> {
    let g = &setup.grid;
    if phi0.dim() != g.shape() || phi1.dim() != g.shape() {
        return Err(Error::InvalidInput("initial data do not match the grid".into()));
    }
    let h = g.h;
    let p0 = Padded::from_view(&phi0.view(), &setup.ratio);
    let p1 = Padded::from_view(&phi1.view(), &setup.ratio);
    let gas = &setup.gas;

    let phi2 = setup.par_field(|i, j| {
        let mp = setup.map_point(i, j);
        let g0 = p0.grad(i, j, h);
        let h0 = p0.hess(i, j, h);
        let g1 = p1.grad(i, j, h);
        let (a, l) = alpha_from_gradient(mp, gas, [p1.at(i, j), g0.0, g0.1])?;
        Ok(-(2.0 * a.m01 * g1.0 + 2.0 * a.m02 * g1.1 + a.m11 * h0.0 + 2.0 * a.m12 * h0.1 + a.m22 * h0.2
            + l[1] * g0.0
            + l[2] * g0.1))
    })?;
    let p2 = Padded::from_view(&phi2.view(), &setup.ratio);

    let phi3 = setup.par_field(|i, j| {
        let mp = setup.map_point(i, j);
        let g0 = p0.grad(i, j, h);
        let h0 = p0.hess(i, j, h);
        let g1 = p1.grad(i, j, h);
        let h1 = p1.hess(i, j, h);
        let g2 = p2.grad(i, j, h);
        let d = [p1.at(i, j), g0.0, g0.1];
        let (a, l) = alpha_from_gradient(mp, gas, d)?;
        let (da, dl) = alpha_rate(mp, gas, d, [p2.at(i, j), g1.0, g1.1])?;
        let frozen = 2.0 * a.m01 * g2.0 + 2.0 * a.m02 * g2.1 + a.m11 * h1.0 + 2.0 * a.m12 * h1.1 + a.m22 * h1.2
            + l[1] * g1.0
            + l[2] * g1.1;
        let rate = 2.0 * da.m01 * g1.0 + 2.0 * da.m02 * g1.1 + da.m11 * h0.0 + 2.0 * da.m12 * h0.1 + da.m22 * h0.2
            + dl[1] * g0.0
            + dl[2] * g0.1;
        Ok(-(frozen + rate))
    })?;
    Ok(InitialJet { phi: [phi0.clone(), phi1.clone(), phi2, phi3], derived: [false, false, true, true] })
}

/// Which wall a residual belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Wall {
    /// `z1 = 0`, co-normal condition.
    Wall1,
    /// `z2 = 0`, Neumann condition.
    Wall2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatEntry {
    pub wall: Wall,
    pub time_order: usize,
    pub tangential_order: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub order: usize,
    pub entries: Vec<CompatEntry>,
    pub max_residual: f64,
}

impl CompatibilityReport {
    pub fn residual(&self, wall: Wall, time_order: usize, tangential_order: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.wall == wall && e.time_order == time_order && e.tangential_order == tangential_order)
            .map(|e| e.residual)
    }
}

fn tangential(v: Array1<f64>, k: usize, h: f64) -> Result<Array1<f64>> {
    Ok(match k {
        0 => v,
        1 => d1(&v.view(), 0, h)?,
        2 => d2(&v.view(), 0, h)?,
        _ => return Err(Error::InvalidInput(format!("tangential order {k} exceeds 2"))),
    })
}

fn sup(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residuals of `D^(k0,0,k2)(bbar . grad Phi_hat) = 0` on `z1 = 0` and
/// `D^(k0,k1,0) d2 Phi_hat = 0` on `z2 = 0` for `k0 + k <= order`, with
/// second-order one-sided normal differences.
pub fn check_compatibility(jet: &InitialJet, setup: &FlowSetup, order: usize) -> Result<CompatibilityReport> {
    if order > 2 {
        return Err(Error::InvalidInput(format!("compatibility order {order} exceeds 2")));
    }
    let h = setup.grid.h;
    let mut entries = Vec::new();
    for k0 in 0..=order {
        let phi: ArrayView2<f64> = jet.phi[k0].view();
        let dn2 = d1(&phi, 1, h)?;
        let normal2 = dn2.index_axis(Axis(1), 0).to_owned();
        let dn1 = d1(&phi, 0, h)?;
        let b = Array1::from_shape_fn(phi.len_of(Axis(1)), |j| {
            setup.bbar1[j] * dn1[[0, j]] + setup.bbar2[j] * dn2[[0, j]]
        });
        for k in 0..=order - k0 {
            let r2 = sup(&tangential(normal2.clone(), k, h)?);
            let r1 = sup(&tangential(b.clone(), k, h)?);
            entries.push(CompatEntry { wall: Wall::Wall1, time_order: k0, tangential_order: k, residual: r1 });
            entries.push(CompatEntry { wall: Wall::Wall2, time_order: k0, tangential_order: k, residual: r2 });
        }
    }
    let max_residual = entries.iter().fold(0.0f64, |m, e| m.max(e.residual));
    Ok(CompatibilityReport { order, entries, max_residual })
}

/// `d^k_{z0} psi` at time `t` for `psi = sum_k phi_k z0^k / k!`.
pub fn psi_derivative(jet: &InitialJet, t: f64, k: usize) -> Array2<f64> {
    let mut out = Array2::zeros(jet.phi[0].dim());
    for (m, phi) in jet.phi.iter().enumerate().skip(k) {
        let p = m - k;
        let c = t.powi(p as i32) / (1..=p).product::<usize>() as f64;
        out.scaled_add(c, phi);
    }
    out
}

pub fn psi_level(jet: &InitialJet, t: f64) -> Array2<f64> {
    psi_derivative(jet, t, 0)
}

/// `psi` at every time level of `g`.
pub fn taylor_psi(jet: &InitialJet, g: &Grid) -> Array3<f64> {
    let mut out = g.zeros3();
    for n in 0..=g.nt {
        out.index_axis_mut(Axis(0), n).assign(&psi_level(jet, g.z0(n)));
    }
    out
}
