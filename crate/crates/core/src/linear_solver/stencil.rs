//! Ghost-padded levels and the solver's spatial stencils.

use ndarray::{Array2, ArrayView2, Zip};

use crate::grid::Coef;

/// A spatial level with one ghost layer on each side (`index + 1` storage).
#[derive(Debug, Clone, PartialEq)]
pub struct Padded {
    pub a: Array2<f64>,
    pub n1: usize,
    pub n2: usize,
}

impl Padded {
    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self { a: Array2::zeros((n1 + 2, n2 + 2)), n1, n2 }
    }

    pub fn from_view(u: &ArrayView2<f64>, ratio: &[f64]) -> Self {
        let (n1, n2) = u.dim();
        let mut p = Self::zeros(n1, n2);
        p.a.slice_mut(ndarray::s![1..=n1, 1..=n2]).assign(u);
        p.fill_ghosts(ratio);
        p
    }

    pub fn interior(&self) -> ArrayView2<'_, f64> {
        self.a.slice(ndarray::s![1..=self.n1, 1..=self.n2])
    }

    pub fn set_interior(&mut self, u: &ArrayView2<f64>) {
        self.a.slice_mut(ndarray::s![1..=self.n1, 1..=self.n2]).assign(u);
    }

    /// Mirror ghosts on `z1 = Z` and both `z2` edges; on `z1 = 0` the ghost
    /// solves `b1 d1 u + b2 d2 u = 0` with centred differences, i.e.
    /// `u(-1,j) = u(1,j) + (b2/b1)(j) (u(0,j+1) - u(0,j-1))`.
    pub fn fill_ghosts(&mut self, ratio: &[f64]) {
        let (n1, n2) = (self.n1, self.n2);
        let a = &mut self.a;
        for i in 1..=n1 {
            a[[i, 0]] = a[[i, 2]];
            a[[i, n2 + 1]] = a[[i, n2 - 1]];
        }
        for j in 1..=n2 {
            let r = ratio[j - 1];
            let t = if r == 0.0 { 0.0 } else { r * (a[[1, j + 1]] - a[[1, j - 1]]) };
            a[[0, j]] = a[[2, j]] + t;
            a[[n1 + 1, j]] = a[[n1 - 1, j]];
        }
        for i in [0, n1 + 1] {
            a[[i, 0]] = a[[i, 2]];
            a[[i, n2 + 1]] = a[[i, n2 - 1]];
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[[i + 1, j + 1]]
    }

    /// `(d1, d2)` centred.
    #[inline]
    pub fn grad(&self, i: usize, j: usize, h: f64) -> (f64, f64) {
        let a = &self.a;
        let (p, q) = (i + 1, j + 1);
        let r = 0.5 / h;
        ((a[[p + 1, q]] - a[[p - 1, q]]) * r, (a[[p, q + 1]] - a[[p, q - 1]]) * r)
    }

    /// `(d11, d12, d22)`; written so mirror-image points give mirror-image values bit for bit.
    #[inline]
    pub fn hess(&self, i: usize, j: usize, h: f64) -> (f64, f64, f64) {
        let a = &self.a;
        let (p, q) = (i + 1, j + 1);
        let r2 = 1.0 / (h * h);
        let c = a[[p, q]];
        let d11 = ((a[[p + 1, q]] + a[[p - 1, q]]) - 2.0 * c) * r2;
        let d22 = ((a[[p, q + 1]] + a[[p, q - 1]]) - 2.0 * c) * r2;
        let d12 = ((a[[p + 1, q + 1]] - a[[p + 1, q - 1]]) - (a[[p - 1, q + 1]] - a[[p - 1, q - 1]])) * (0.25 * r2);
        (d11, d12, d22)
    }
}

/// Spatial coefficients at one level, borrowed from the problem.
pub struct SpatialOp<'a> {
    pub r11: &'a Coef,
    pub r12: &'a Coef,
    pub r22: &'a Coef,
    pub lower: Option<&'a [Coef; 2]>,
    pub h: f64,
}

impl SpatialOp<'_> {
    /// `r11 d11 u + 2 r12 d12 u + r22 d22 u (+ l1 d1 u + l2 d2 u)` at level `n`.
    #[inline]
    pub fn apply(&self, u: &Padded, n: usize, i: usize, j: usize) -> f64 {
        let (d11, d12, d22) = u.hess(i, j, self.h);
        let mut v = self.r11.at(n, i, j) * d11 + 2.0 * self.r12.at(n, i, j) * d12 + self.r22.at(n, i, j) * d22;
        if let Some(l) = self.lower {
            let (d1, d2) = u.grad(i, j, self.h);
            v += l[0].at(n, i, j) * d1 + l[1].at(n, i, j) * d2;
        }
        v
    }

    pub fn apply_all(&self, u: &Padded, n: usize) -> Array2<f64> {
        let mut out = Array2::zeros((u.n1, u.n2));
        Zip::indexed(&mut out).par_for_each(|(i, j), o| *o = self.apply(u, n, i, j));
        out
    }
}

/// `r01 d1 u + r02 d2 u` at level `n` over the whole grid.
pub fn mixed_time_part(r01: &Coef, r02: &Coef, u: &Padded, n: usize, h: f64) -> Array2<f64> {
    let mut out = Array2::zeros((u.n1, u.n2));
    Zip::indexed(&mut out).par_for_each(|(i, j), o| {
        let (d1, d2) = u.grad(i, j, h);
        *o = r01.at(n, i, j) * d1 + r02.at(n, i, j) * d2;
    });
    out
}
