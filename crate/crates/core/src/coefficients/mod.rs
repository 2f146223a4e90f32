//! Physical coefficients `a_ij`, their `z`-coordinate images `alpha_ij`,
//! `alpha_i`, and the wall-1 boundary coefficients `(bbar1, bbar2)`.

mod lemma21;
mod snapshot;

pub use lemma21::{
    check_lemma21, CandidatePotential, Lemma21Options, Lemma21Report, ReflectedCandidate,
    StaticPotential,
};
pub use snapshot::CoefficientSnapshot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CornerDomain, MapPoint};

/// Isentropic gas: `gamma` and Bernoulli constant `b0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasState {
    pub gamma: f64,
    pub b0: f64,
}

impl GasState {
    pub fn new(gamma: f64, b0: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must exceed 1, got {gamma}")));
        }
        let gas = Self { gamma, b0 };
        let base = gas.base(0.0, [0.0, 0.0]);
        if !(base > 0.0) {
            return Err(Error::VacuumReached { base });
        }
        Ok(gas)
    }

    /// `1 + (gamma-1)(B0 - Phi_t - |grad Phi|^2 / 2)`, which is also `c^2`.
    pub fn base(&self, dt_phi: f64, grad: [f64; 2]) -> f64 {
        1.0 + (self.gamma - 1.0) * (self.b0 - dt_phi - 0.5 * (grad[0] * grad[0] + grad[1] * grad[1]))
    }

    pub fn rho0(&self) -> f64 {
        self.base(0.0, [0.0, 0.0]).powf(1.0 / (self.gamma - 1.0))
    }

    /// Background sound speed squared, `rho0^(gamma-1)`.
    pub fn c0sq(&self) -> f64 {
        self.base(0.0, [0.0, 0.0])
    }

    pub fn sound_speed_sq(&self, dt_phi: f64, grad: [f64; 2]) -> Result<f64> {
        let base = self.base(dt_phi, grad);
        if base > 0.0 {
            Ok(base)
        } else {
            Err(Error::VacuumReached { base })
        }
    }
}

/// Density from Bernoulli's law.
pub fn density(dt_phi: f64, grad: [f64; 2], gas: &GasState) -> Result<f64> {
    Ok(gas.sound_speed_sq(dt_phi, grad)?.powf(1.0 / (gas.gamma - 1.0)))
}

/// Symmetric 3×3 matrix over `(z0, z1, z2)`, stored as one triangle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym3 {
    pub m00: f64,
    pub m01: f64,
    pub m02: f64,
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Sym3 {
    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Self { m00: a, m11: b, m22: c, ..Self::default() }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.m00,
            (0, 1) => self.m01,
            (0, 2) => self.m02,
            (1, 1) => self.m11,
            (1, 2) => self.m12,
            (2, 2) => self.m22,
            _ => panic!("Sym3 index ({i},{j}) out of range"),
        }
    }

    pub fn to_array(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        m
    }

    fn from_fn(f: impl Fn(usize, usize) -> f64) -> Self {
        Self { m00: f(0, 0), m01: f(0, 1), m02: f(0, 2), m11: f(1, 1), m12: f(1, 2), m22: f(2, 2) }
    }

    /// `sum_ij m_ij x_ij` for a (not necessarily symmetric) 3×3 array.
    pub fn contract(&self, x: &[[f64; 3]; 3]) -> f64 {
        let mut acc = 0.0;
        for (i, row) in x.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                acc += self.get(i, j) * v;
            }
        }
        acc
    }
}

/// Coefficients of the quasilinear operator `sum a_ij d_ij Phi` in `(t, x)`.
pub fn a_matrix(dt_phi: f64, grad: [f64; 2], gas: &GasState) -> Result<Sym3> {
    let c2 = gas.sound_speed_sq(dt_phi, grad)?;
    Ok(Sym3 {
        m00: 1.0,
        m01: grad[0],
        m02: grad[1],
        m11: grad[0] * grad[0] - c2,
        m12: grad[0] * grad[1],
        m22: grad[1] * grad[1] - c2,
    })
}

/// Physical velocity `grad_x Phi = G^T grad_z Phi_hat`.
pub fn physical_gradient(mp: &MapPoint, dz: [f64; 2]) -> [f64; 2] {
    let g = &mp.jac;
    [g[0][0] * dz[0] + g[1][0] * dz[1], g[0][1] * dz[0] + g[1][1] * dz[1]]
}

/// Pushes a `(t, x)` coefficient matrix to `z`: `alpha = G3 A G3^T` and
/// `alpha_k = sum_ij a_ij d_ij z_k` (`alpha_0 = 0`).
pub fn transform(mp: &MapPoint, a: &Sym3) -> (Sym3, [f64; 3]) {
    let g = &mp.jac;
    let g3 = |k: usize, i: usize| -> f64 {
        match (k, i) {
            (0, 0) => 1.0,
            (0, _) | (_, 0) => 0.0,
            _ => g[k - 1][i - 1],
        }
    };
    let alpha = Sym3::from_fn(|k, l| {
        let mut acc = 0.0;
        for i in 0..3 {
            let gki = g3(k, i);
            if gki == 0.0 {
                continue;
            }
            for j in 0..3 {
                acc += gki * a.get(i, j) * g3(l, j);
            }
        }
        acc
    });
    let mut lower = [0.0; 3];
    for k in 0..2 {
        let h = &mp.hess[k];
        lower[k + 1] = a.m11 * h[0][0] + 2.0 * a.m12 * h[0][1] + a.m22 * h[1][1];
    }
    (alpha, lower)
}

/// `alpha_ij`, `alpha_i` at a map point from `(d_z0, d_z1, d_z2) Phi_hat`.
pub fn alpha_from_gradient(mp: &MapPoint, gas: &GasState, dphi_hat: [f64; 3]) -> Result<(Sym3, [f64; 3])> {
    let grad = physical_gradient(mp, [dphi_hat[1], dphi_hat[2]]);
    let a = a_matrix(dphi_hat[0], grad, gas)?;
    Ok(transform(mp, &a))
}

/// Time derivative of `(alpha, alpha_lower)` given `D Phi_hat` and its time rate.
pub fn alpha_rate(mp: &MapPoint, gas: &GasState, dphi_hat: [f64; 3], rate: [f64; 3]) -> Result<(Sym3, [f64; 3])> {
    let v = physical_gradient(mp, [dphi_hat[1], dphi_hat[2]]);
    let vt = physical_gradient(mp, [rate[1], rate[2]]);
    gas.sound_speed_sq(dphi_hat[0], v)?;
    let dc2 = -(gas.gamma - 1.0) * (rate[0] + v[0] * vt[0] + v[1] * vt[1]);
    let da = Sym3 {
        m00: 0.0,
        m01: vt[0],
        m02: vt[1],
        m11: 2.0 * v[0] * vt[0] - dc2,
        m12: vt[0] * v[1] + v[0] * vt[1],
        m22: 2.0 * v[1] * vt[1] - dc2,
    };
    Ok(transform(mp, &da))
}

/// Transformed coefficients at a `z` point.
pub fn alpha_coeffs(dom: &CornerDomain, gas: &GasState, z: [f64; 2], dphi_hat: [f64; 3]) -> Result<(Sym3, [f64; 3])> {
    let mp = dom.map_point_z(z)?;
    alpha_from_gradient(&mp, gas, dphi_hat)
}

/// `(bbar1, bbar2)` on `z1 = 0` at height `z2`.
pub fn boundary_coeffs(dom: &CornerDomain, z2: f64) -> Result<(f64, f64)> {
    let bp = dom.boundary_point(z2)?;
    let (sp, _) = dom.sigma_derivs(&bp);
    let w1p = dom.wall1.d(bp.s, 1);
    let x1 = bp.x[0];
    let w2p = dom.wall2.d(x1, 1);
    let p = -1.0 - z2 * dom.wall2.d(x1, 2);
    Ok((p + (w2p + w1p) * sp + w1p * w2p, w1p + w2p))
}

/// `bbar2` and its first two `z2` derivatives along `z1 = 0`, in closed form.
pub fn bbar2_jet(dom: &CornerDomain, z2: f64) -> Result<[f64; 3]> {
    let bp = dom.boundary_point(z2)?;
    let (w1, w2) = (&dom.wall1, &dom.wall2);
    let s = bp.s;
    let x1 = bp.x[0];
    let (a1, a2, a3) = (w1.d(s, 1), w1.d(s, 2), w1.d(s, 3));
    let (c1, c2, c3) = (w2.d(x1, 1), w2.d(x1, 2), w2.d(x1, 3));
    let b = a1 + c1;
    let db = a2 + c2 * a1;
    let ddb = a3 + c3 * a1 * a1 + c2 * a2;
    let dz = 1.0 - c1 * a1;
    let ddz = -c2 * a1 * a1 - c1 * a2;
    Ok([b, db / dz, (ddb * dz - db * ddz) / dz.powi(3)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WallProfile;

    fn perturbed() -> CornerDomain {
        CornerDomain::new(
            WallProfile::new(1e-3, &[1.0, 0.4], 1.0).unwrap(),
            WallProfile::new(1e-3, &[0.8, -0.3], 1.1).unwrap(),
        )
    }

    #[test]
    fn density_closed_forms() {
        let g = GasState::new(1.4, 0.0).unwrap();
        assert_eq!(density(0.0, [0.0, 0.0], &g).unwrap(), 1.0);
        let g = GasState::new(2.0, 0.5).unwrap();
        assert!((density(0.0, [0.0, 0.0], &g).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn density_regression() {
        let g = GasState::new(1.4, 0.2).unwrap();
        let rho = density(0.1, [0.2, 0.0], &g).unwrap();
        // (1 + 0.4 * (0.2 - 0.1 - 0.02))^(2.5) = 1.032^2.5
        let oracle = 1.032_f64.powf(2.5);
        assert!((rho - oracle).abs() < 1e-15);
        assert!((rho - 1.081_930_199_428_055_7).abs() < 1e-14);
    }

    #[test]
    fn vacuum_exactly_at_nonpositive_base() {
        let g = GasState::new(2.0, 0.0).unwrap();
        assert!(matches!(density(1.0, [0.0, 0.0], &g), Err(Error::VacuumReached { .. })));
        assert!(density(0.999, [0.0, 0.0], &g).is_ok());
        assert!(matches!(density(0.5, [1.0, 0.0], &g), Err(Error::VacuumReached { .. })));
    }

    #[test]
    fn a_matrix_static_and_shear() {
        let g = GasState::new(1.4, 0.3).unwrap();
        let a = a_matrix(0.0, [0.0, 0.0], &g).unwrap();
        assert_eq!(a, Sym3::diag(1.0, -g.c0sq(), -g.c0sq()));
        assert!((g.c0sq() - g.rho0().powf(0.4)).abs() < 1e-14);
        let v = 0.2;
        let a = a_matrix(0.0, [v, 0.0], &g).unwrap();
        let c2 = g.base(0.0, [v, 0.0]);
        assert_eq!(a.m01, v);
        assert!((a.m11 - (-c2 + v * v)).abs() < 1e-16);
    }

    /// The operator `sum a_ij d_ij Phi` equals `-(c^2/rho)(rho_t + div(rho grad Phi))`.
    #[test]
    fn a_matrix_matches_mass_conservation() {
        let g = GasState::new(1.4, 0.1).unwrap();
        // Phi = quadratic in (t, x1, x2)
        let c = [0.01, -0.02, 0.03, 0.05, -0.04, 0.02, 0.03, 0.01, -0.06];
        let dphi = |t: f64, x: f64, y: f64| -> [f64; 3] {
            [
                c[0] + 2.0 * c[3] * t + c[6] * x + c[7] * y,
                c[1] + 2.0 * c[4] * x + c[6] * t + c[8] * y,
                c[2] + 2.0 * c[5] * y + c[7] * t + c[8] * x,
            ]
        };
        let hess = [[2.0 * c[3], c[6], c[7]], [c[6], 2.0 * c[4], c[8]], [c[7], c[8], 2.0 * c[5]]];
        let rho = |t: f64, x: f64, y: f64| {
            let d = dphi(t, x, y);
            density(d[0], [d[1], d[2]], &g).unwrap()
        };
        let (t, x, y) = (0.1, 0.2, -0.3);
        let h = 1e-5;
        let flux = |k: usize, t: f64, x: f64, y: f64| rho(t, x, y) * dphi(t, x, y)[k];
        let rho_t = (rho(t + h, x, y) - rho(t - h, x, y)) / (2.0 * h);
        let div = (flux(1, t, x + h, y) - flux(1, t, x - h, y)) / (2.0 * h)
            + (flux(2, t, x, y + h) - flux(2, t, x, y - h)) / (2.0 * h);
        let d = dphi(t, x, y);
        let a = a_matrix(d[0], [d[1], d[2]], &g).unwrap();
        let c2 = g.base(d[0], [d[1], d[2]]);
        let lhs = -(c2 / rho(t, x, y)) * (rho_t + div);
        assert!((lhs - a.contract(&hess)).abs() < 1e-9, "{lhs} vs {}", a.contract(&hess));
    }

    #[test]
    fn flat_alpha_equals_a() {
        let dom = CornerDomain::flat();
        let g = GasState::new(1.4, 0.0).unwrap();
        let d = [0.01, 0.06, -0.02];
        let (alpha, lower) = alpha_coeffs(&dom, &g, [0.3, 0.4], d).unwrap();
        assert_eq!(alpha, a_matrix(d[0], [d[1], d[2]], &g).unwrap());
        assert_eq!(lower, [0.0; 3]);
    }

    #[test]
    fn static_background() {
        let g = GasState::new(1.4, 0.2).unwrap();
        let (alpha, lower) = alpha_coeffs(&CornerDomain::flat(), &g, [0.2, 0.1], [0.0; 3]).unwrap();
        assert_eq!(alpha, Sym3::diag(1.0, -g.c0sq(), -g.c0sq()));
        assert_eq!(lower, [0.0; 3]);
    }

    #[test]
    fn alpha_zero_component_always_zero() {
        let g = GasState::new(1.4, 0.0).unwrap();
        let (_, lower) = alpha_coeffs(&perturbed(), &g, [0.4, 0.3], [0.01, 0.02, 0.03]).unwrap();
        assert_eq!(lower[0], 0.0);
    }

    /// The transformed operator applied to `Phi(x(z))` reproduces `sum a_ij d_ij Phi`.
    #[test]
    fn chain_rule_consistency() {
        let dom = perturbed();
        let g = GasState::new(1.4, 0.0).unwrap();
        // physical potential Phi(x) = 0.03 x1^2 - 0.02 x1 x2 + 0.05 x2^3 (static in t)
        let phi = |x: [f64; 2]| 0.03 * x[0] * x[0] - 0.02 * x[0] * x[1] + 0.05 * x[1].powi(3);
        let z0 = [0.45, 0.35];
        let h = 1e-3;
        let phi_z = |z: [f64; 2]| phi(dom.from_z(z).unwrap());
        let d1 = |f: &dyn Fn([f64; 2]) -> f64, z: [f64; 2], k: usize| {
            let e = |s: f64| {
                let mut zz = z;
                zz[k] += s;
                f(zz)
            };
            (-e(2.0 * h) + 8.0 * e(h) - 8.0 * e(-h) + e(-2.0 * h)) / (12.0 * h)
        };
        let dz = [d1(&phi_z, z0, 0), d1(&phi_z, z0, 1)];
        let mut hz = [[0.0; 3]; 3];
        for i in 0..2 {
            for j in 0..2 {
                let inner = |z: [f64; 2]| d1(&phi_z, z, j);
                hz[i + 1][j + 1] = d1(&inner, z0, i);
            }
        }
        let (alpha, lower) = alpha_coeffs(&dom, &g, z0, [0.0, dz[0], dz[1]]).unwrap();
        let lhs = alpha.contract(&hz) + lower[1] * dz[0] + lower[2] * dz[1];
        let x = dom.from_z(z0).unwrap();
        let grad = [0.06 * x[0] - 0.02 * x[1], -0.02 * x[0] + 0.15 * x[1] * x[1]];
        let hx = [[0.0, 0.0, 0.0], [0.0, 0.06, -0.02], [0.0, -0.02, 0.3 * x[1]]];
        let a = a_matrix(0.0, grad, &g).unwrap();
        let rhs = a.contract(&hx);
        assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
    }

    #[test]
    fn boundary_coeffs_flat_and_corner() {
        assert_eq!(boundary_coeffs(&CornerDomain::flat(), 0.4).unwrap(), (-1.0, 0.0));
        let dom = perturbed();
        assert_eq!(boundary_coeffs(&dom, 0.0).unwrap().1, 0.0);
        assert_eq!(bbar2_jet(&dom, 0.0).unwrap(), [0.0; 3]);
    }

    #[test]
    fn boundary_coeffs_match_composition() {
        let dom = perturbed();
        let z2 = 0.4;
        let (b1, b2) = boundary_coeffs(&dom, z2).unwrap();
        let mp = dom.map_point_z([0.0, z2]).unwrap();
        let w1p = dom.wall1.d(mp.x[1], 1);
        // wall-1 slip in x: Phi_x1 - W1' Phi_x2 = sum_k dz_k Phi (G_k1 - W1' G_k2)
        // equals -(bbar1 d1 + bbar2 d2)
        let g = &mp.jac;
        let c1 = g[0][0] - w1p * g[0][1];
        let c2 = g[1][0] - w1p * g[1][1];
        assert!((c1 + b1).abs() < 1e-12, "{c1} {b1}");
        assert!((c2 + b2).abs() < 1e-12, "{c2} {b2}");
    }

    #[test]
    fn bbar2_jet_matches_differences() {
        let dom = perturbed();
        let h = 1e-4;
        for &z2 in &[0.2, 0.5, 0.7] {
            let j = bbar2_jet(&dom, z2).unwrap();
            let f = |s: f64| boundary_coeffs(&dom, s).unwrap().1;
            assert!((j[0] - f(z2)).abs() < 1e-15);
            let d1 = (f(z2 + h) - f(z2 - h)) / (2.0 * h);
            let d2 = (f(z2 + h) - 2.0 * f(z2) + f(z2 - h)) / (h * h);
            assert!((j[1] - d1).abs() < 1e-7, "z2={z2} {} vs {d1}", j[1]);
            assert!((j[2] - d2).abs() < 1e-6);
        }
    }
}
