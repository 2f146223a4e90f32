//! Uniform space-time grids, coefficient storage and one-sided-at-the-ends
//! difference stencils.

use ndarray::{Array, Array2, Array3, ArrayView, Axis, Dimension};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Quarter`: `[0,Z] x [0,Z]`. `Extended`: `[0,Z] x [-Z,Z]` (no `z2 = 0` boundary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    Quarter,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Intervals along `z1` (and along each half of `z2`).
    pub n: usize,
    /// Spatial extent `Z`.
    pub extent: f64,
    pub h: f64,
    pub nt: usize,
    pub dt: f64,
    pub layout: Layout,
    /// Weight in `exp(-eta z0)`.
    pub eta: f64,
}

impl Grid {
    pub fn new(extent: f64, n: usize, nt: usize, t_final: f64, layout: Layout) -> Result<Self> {
        if n < 4 || nt < 2 || !(extent > 0.0) || !(t_final > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grid needs n >= 4, nt >= 2 and positive extent/time (n={n}, nt={nt}, Z={extent}, T={t_final})"
            )));
        }
        Ok(Self { n, extent, h: extent / n as f64, nt, dt: t_final / nt as f64, layout, eta: 1.0 })
    }

    /// Chooses `nt` so that `dt <= cfl * h / c_max`.
    pub fn with_cfl(extent: f64, n: usize, t_final: f64, cfl: f64, c_max: f64, layout: Layout) -> Result<Self> {
        let h = extent / n as f64;
        let nt = ((t_final * c_max / (cfl * h)) * (1.0 - 1e-12)).ceil().max(2.0) as usize;
        Self::new(extent, n, nt, t_final, layout)
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// `(points along z1, points along z2)`.
    pub fn shape(&self) -> (usize, usize) {
        match self.layout {
            Layout::Quarter => (self.n + 1, self.n + 1),
            Layout::Extended => (self.n + 1, 2 * self.n + 1),
        }
    }

    pub fn shape3(&self) -> (usize, usize, usize) {
        let (a, b) = self.shape();
        (self.nt + 1, a, b)
    }

    /// Index of `z2 = 0` along the second axis.
    pub fn axis_index(&self) -> usize {
        match self.layout {
            Layout::Quarter => 0,
            Layout::Extended => self.n,
        }
    }

    pub fn z1(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn z2(&self, j: usize) -> f64 {
        (j as f64 - self.axis_index() as f64) * self.h
    }

    pub fn z0(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.nt as f64 * self.dt
    }

    pub fn courant(&self, c_max: f64) -> f64 {
        c_max * self.dt / self.h
    }

    /// Same box and final time, spatial and temporal steps halved.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n, h: 0.5 * self.h, nt: 2 * self.nt, dt: 0.5 * self.dt, ..self.clone() }
    }

    /// The quarter-plane grid sharing this one's `z2 >= 0` half.
    pub fn quarter(&self) -> Self {
        Self { layout: Layout::Quarter, ..self.clone() }
    }

    pub fn extended(&self) -> Self {
        Self { layout: Layout::Extended, ..self.clone() }
    }

    pub fn zeros2(&self) -> Array2<f64> {
        Array2::zeros(self.shape())
    }

    pub fn zeros3(&self) -> Array3<f64> {
        Array3::zeros(self.shape3())
    }

    pub fn sample2(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.z1(i), self.z2(j)))
    }

    pub fn sample3(&self, f: impl Fn(f64, f64, f64) -> f64) -> Array3<f64> {
        Array3::from_shape_fn(self.shape3(), |(k, i, j)| f(self.z0(k), self.z1(i), self.z2(j)))
    }
}

/// A coefficient that may be constant, static, or time dependent.
#[derive(Debug, Clone, PartialEq)]
pub enum Coef {
    Const(f64),
    Space(Array2<f64>),
    SpaceTime(Array3<f64>),
}

impl Default for Coef {
    fn default() -> Self {
        Coef::Const(0.0)
    }
}

impl Coef {
    #[inline]
    pub fn at(&self, n: usize, i: usize, j: usize) -> f64 {
        match self {
            Coef::Const(c) => *c,
            Coef::Space(a) => a[[i, j]],
            Coef::SpaceTime(a) => a[[n, i, j]],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coef::Const(c) => *c == 0.0,
            Coef::Space(a) => a.iter().all(|&v| v == 0.0),
            Coef::SpaceTime(a) => a.iter().all(|&v| v == 0.0),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Coef::Const(c) => c.abs(),
            Coef::Space(a) => a.iter().fold(0.0, |m, v| m.max(v.abs())),
            Coef::SpaceTime(a) => a.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Slice at time level `n` as a full spatial array.
    pub fn level(&self, n: usize, shape: (usize, usize)) -> Array2<f64> {
        match self {
            Coef::Const(c) => Array2::from_elem(shape, *c),
            Coef::Space(a) => a.clone(),
            Coef::SpaceTime(a) => a.index_axis(Axis(0), n).to_owned(),
        }
    }
}

fn check_len(len: usize, need: usize, order: usize, axis: usize) -> Result<()> {
    if len < need {
        Err(Error::OrderUnavailable { order, axis, points: len })
    } else {
        Ok(())
    }
}

/// First derivative along `axis`: centred inside, second-order one-sided at the ends.
pub fn d1<D: Dimension>(u: &ArrayView<f64, D>, axis: usize, h: f64) -> Result<Array<f64, D>> {
    let len = u.len_of(Axis(axis));
    check_len(len, 3, 1, axis)?;
    let mut out = Array::zeros(u.raw_dim());
    let r = 0.5 / h;
    for (a, mut b) in u.lanes(Axis(axis)).into_iter().zip(out.lanes_mut(Axis(axis))) {
        let m = len - 1;
        b[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) * r;
        for i in 1..m {
            b[i] = (a[i + 1] - a[i - 1]) * r;
        }
        b[m] = (3.0 * a[m] - 4.0 * a[m - 1] + a[m - 2]) * r;
    }
    Ok(out)
}

/// Second derivative along `axis`: compact centred inside, four-point one-sided at the ends.
pub fn d2<D: Dimension>(u: &ArrayView<f64, D>, axis: usize, h: f64) -> Result<Array<f64, D>> {
    let len = u.len_of(Axis(axis));
    check_len(len, 4, 2, axis)?;
    let mut out = Array::zeros(u.raw_dim());
    let r = 1.0 / (h * h);
    for (a, mut b) in u.lanes(Axis(axis)).into_iter().zip(out.lanes_mut(Axis(axis))) {
        let m = len - 1;
        b[0] = (2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]) * r;
        for i in 1..m {
            b[i] = ((a[i + 1] + a[i - 1]) - 2.0 * a[i]) * r;
        }
        b[m] = (2.0 * a[m] - 5.0 * a[m - 1] + 4.0 * a[m - 2] - a[m - 3]) * r;
    }
    Ok(out)
}

/// Maximum absolute entry.
pub fn max_abs<D: Dimension>(u: &ArrayView<f64, D>) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_exact_on_quadratics() {
        let g = Grid::new(1.0, 8, 4, 1.0, Layout::Quarter).unwrap();
        let u = g.sample2(|a, b| 3.0 * a * a - a * b + 2.0 * b);
        let du = d1(&u.view(), 0, g.h).unwrap();
        let ddu = d2(&u.view(), 1, g.h).unwrap();
        for ((i, j), v) in du.indexed_iter() {
            assert!((v - (6.0 * g.z1(i) - g.z2(j))).abs() < 1e-12);
        }
        assert!(ddu.iter().all(|v| v.abs() < 1e-10));
        let d00 = d2(&u.view(), 0, g.h).unwrap();
        assert!(d00.iter().all(|v| (v - 6.0).abs() < 1e-9));
    }

    #[test]
    fn too_short_axis_reports() {
        let u = Array2::<f64>::zeros((3, 2));
        assert!(matches!(d1(&u.view(), 1, 0.1), Err(Error::OrderUnavailable { .. })));
        assert!(matches!(d2(&u.view(), 0, 0.1), Err(Error::OrderUnavailable { .. })));
    }

    #[test]
    fn cfl_grid_respects_bound() {
        let g = Grid::with_cfl(1.0, 32, 1.0, 0.5, 1.3, Layout::Quarter).unwrap();
        assert!(g.courant(1.3) <= 0.5 + 1e-12);
        assert!((g.t_final() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extended_coordinates_are_symmetric() {
        let g = Grid::new(2.0, 8, 4, 1.0, Layout::Extended).unwrap();
        let (_, m) = g.shape();
        for j in 0..m {
            assert_eq!(g.z2(j), -g.z2(m - 1 - j));
        }
    }
}
