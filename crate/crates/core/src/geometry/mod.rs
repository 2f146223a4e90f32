//! Corner domain bounded by `x1 = W1(x2)` and `x2 = W2(x1)`, and the two-stage
//! straightening map `x -> y -> z` onto the exact quarter plane.

mod quadrature;
mod wall;

pub use quadrature::integrate;
pub use wall::{WallProfile, WallSpec, MAX_ORDER};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const QUAD_TOL: f64 = 1e-13;
const NEWTON_MAX: usize = 50;
const NEWTON_TOL: f64 = 1e-12;

/// The perturbed corner: wall 1 is `x1 = W1(x2)`, wall 2 is `x2 = W2(x1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerDomain {
    pub wall1: WallProfile,
    pub wall2: WallProfile,
}

/// Preimage on wall 1 of the line `y2 = const`, parametrised by `s = x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub s: f64,
    pub x: Point,
    /// `sigma(y2)`, the `y1` coordinate of the wall-1 image.
    pub sigma: f64,
}

/// A point with all three coordinate representations and the derivatives of
/// `z` with respect to `x` needed by the coefficient algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub x: Point,
    pub y: Point,
    pub z: Point,
    /// `jac[k][i] = dz_{k+1}/dx_{i+1}`.
    pub jac: [[f64; 2]; 2],
    /// Hessians of `z1` and `z2` with respect to `x`.
    pub hess: [[[f64; 2]; 2]; 2],
    pub sigma: f64,
    pub sigma_prime: f64,
    pub sigma_second: f64,
}

impl MapPoint {
    pub fn det(&self) -> f64 {
        self.jac[0][0] * self.jac[1][1] - self.jac[0][1] * self.jac[1][0]
    }
}

impl CornerDomain {
    pub fn new(wall1: WallProfile, wall2: WallProfile) -> Self {
        Self { wall1, wall2 }
    }

    pub fn flat() -> Self {
        Self::new(WallProfile::flat(), WallProfile::flat())
    }

    pub fn is_flat(&self) -> bool {
        self.wall1.is_flat() && self.wall2.is_flat()
    }

    /// `int_0^{x1} W2'(t)^2 dt`.
    fn slope_integral(&self, x1: f64) -> f64 {
        let w = &self.wall2;
        if w.is_flat() || x1 == 0.0 {
            return 0.0;
        }
        let r = w.cutoff_radius();
        let upper = x1.clamp(-r, r);
        let breaks = [-0.5 * r, 0.5 * r];
        integrate(|t| w.d(t, 1).powi(2), 0.0, upper, &breaks, QUAD_TOL)
    }

    /// First straightening map (flattens wall 2 onto `y2 = 0`).
    pub fn t1_forward(&self, x: Point) -> Point {
        let w2 = &self.wall2;
        let d = x[1] - w2.d(x[0], 0);
        let y1 = -x[0] - self.slope_integral(x[0]) - d * w2.d(x[0], 1);
        [y1, d]
    }

    /// Inverse of [`t1_forward`](Self::t1_forward); returns `(x, u)` with `u = x1`.
    pub fn t1_inverse(&self, y: Point) -> Result<(Point, f64)> {
        let w2 = &self.wall2;
        let g = |u: f64| -u - self.slope_integral(u) - y[1] * w2.d(u, 1) - y[0];
        let mut u = -y[0];
        let mut gu = g(u);
        for _ in 0..NEWTON_MAX {
            if gu == 0.0 {
                break;
            }
            let dg = -1.0 - w2.d(u, 1).powi(2) - y[1] * w2.d(u, 2);
            if dg.abs() < 0.5 {
                return Err(Error::NonConvergence { what: "t1_inverse (|g'| < 1/2)", residual: gu });
            }
            let du = gu / dg;
            u -= du;
            gu = g(u);
            if du.abs() <= 1e-15 * (1.0 + u.abs()) {
                break;
            }
        }
        if gu.abs() > NEWTON_TOL {
            return Err(Error::NonConvergence { what: "t1_inverse", residual: gu });
        }
        Ok(([u, y[1] + w2.d(u, 0)], u))
    }

    /// Solves `s - W2(W1(s)) = y2` and returns the wall-1 point with its `y1` image.
    pub fn boundary_point(&self, y2: f64) -> Result<BoundaryPoint> {
        let (w1, w2) = (&self.wall1, &self.wall2);
        let h = |s: f64| s - w2.d(w1.d(s, 0), 0) - y2;
        let mut s = y2;
        let mut hs = h(s);
        for _ in 0..NEWTON_MAX {
            if hs == 0.0 {
                break;
            }
            let x1 = w1.d(s, 0);
            let dh = 1.0 - w2.d(x1, 1) * w1.d(s, 1);
            if dh.abs() < 0.5 {
                return Err(Error::NonConvergence { what: "sigma (|1 - W1'W2'| < 1/2)", residual: hs });
            }
            let ds = hs / dh;
            s -= ds;
            hs = h(s);
            if ds.abs() <= 1e-15 * (1.0 + s.abs()) {
                break;
            }
        }
        if hs.abs() > NEWTON_TOL {
            return Err(Error::NonConvergence { what: "sigma", residual: hs });
        }
        let x = [w1.d(s, 0), s];
        let sigma = self.t1_forward(x)[0];
        Ok(BoundaryPoint { s, x, sigma })
    }

    /// `sigma(y2)`: the `y1` coordinate of wall 1 at height `y2`.
    pub fn sigma(&self, y2: f64) -> Result<f64> {
        Ok(self.boundary_point(y2)?.sigma)
    }

    /// `(sigma', sigma'')` at a boundary point, in closed form.
    pub fn sigma_derivs(&self, bp: &BoundaryPoint) -> (f64, f64) {
        let (w1, w2) = (&self.wall1, &self.wall2);
        let s = bp.s;
        let x1 = bp.x[0];
        let (a1, a2) = (w1.d(s, 1), w1.d(s, 2));
        let (b0, b1, b2, b3) = (w2.d(x1, 0), w2.d(x1, 1), w2.d(x1, 2), w2.d(x1, 3));
        let d = s - b0;
        let p = -1.0 - d * b2;
        let num = p * a1 - b1;
        let den = 1.0 - a1 * b1;
        let sp = num / den;
        let dp = -(1.0 - b1 * a1) * b2 - d * b3 * a1;
        let dnum = dp * a1 + p * a2 - b2 * a1;
        let dden = -(a2 * b1 + a1 * a1 * b2);
        let spp = (dnum * den - num * dden) / den.powi(3);
        (sp, spp)
    }

    pub fn sigma_prime(&self, y2: f64) -> Result<f64> {
        let bp = self.boundary_point(y2)?;
        Ok(self.sigma_derivs(&bp).0)
    }

    pub fn sigma_second(&self, y2: f64) -> Result<f64> {
        let bp = self.boundary_point(y2)?;
        Ok(self.sigma_derivs(&bp).1)
    }

    pub fn to_z(&self, x: Point) -> Result<Point> {
        let y = self.t1_forward(x);
        let sigma = self.sigma(y[1])?;
        Ok([-y[0] + sigma, y[1]])
    }

    pub fn from_z(&self, z: Point) -> Result<Point> {
        let sigma = self.sigma(z[1])?;
        Ok(self.t1_inverse([sigma - z[0], z[1]])?.0)
    }

    /// Full map data at a point given in `z` coordinates.
    pub fn map_point_z(&self, z: Point) -> Result<MapPoint> {
        let bp = self.boundary_point(z[1])?;
        let y = [bp.sigma - z[0], z[1]];
        let (x, _) = self.t1_inverse(y)?;
        Ok(self.assemble(x, y, z, &bp))
    }

    /// Full map data at a point given in physical coordinates.
    pub fn map_point_x(&self, x: Point) -> Result<MapPoint> {
        let y = self.t1_forward(x);
        let bp = self.boundary_point(y[1])?;
        let z = [-y[0] + bp.sigma, y[1]];
        Ok(self.assemble(x, y, z, &bp))
    }

    fn assemble(&self, x: Point, y: Point, z: Point, bp: &BoundaryPoint) -> MapPoint {
        let w2 = &self.wall2;
        let (sp, spp) = self.sigma_derivs(bp);
        let (b0, b1, b2, b3) = (w2.d(x[0], 0), w2.d(x[0], 1), w2.d(x[0], 2), w2.d(x[0], 3));
        let d = x[1] - b0;
        let grad_z1 = [1.0 + d * b2 - sp * b1, b1 + sp];
        let grad_z2 = [-b1, 1.0];
        // Hess y1 = [[W2'W2'' - d W2''', -W2''], [-W2'', 0]], Hess y2 = [[-W2'', 0], [0, 0]]
        let hy1 = [[b1 * b2 - d * b3, -b2], [-b2, 0.0]];
        let hy2 = [[-b2, 0.0], [0.0, 0.0]];
        let mut hz1 = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                hz1[i][j] = -hy1[i][j] + spp * grad_z2[i] * grad_z2[j] + sp * hy2[i][j];
            }
        }
        MapPoint {
            x,
            y,
            z,
            jac: [grad_z1, grad_z2],
            hess: [hz1, hy2],
            sigma: bp.sigma,
            sigma_prime: sp,
            sigma_second: spp,
        }
    }
}
