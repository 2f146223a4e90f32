//! Explicit three-level finite-difference solver for
//! `d00 u + 2 r0j d0j u + rij dij u (+ ri di u) = f` on the quarter plane
//! (or the `z2`-extended strip), with the co-normal condition on `z1 = 0`
//! and Neumann conditions elsewhere.

mod assumptions;
mod io;
pub mod stencil;

pub use assumptions::{validate_assumptions, AssumptionOptions, AssumptionReport};
pub use io::{dump_field, read_field, FieldMeta};

use ndarray::{Array2, Array3, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Coef, Grid};
use stencil::{mixed_time_part, Padded, SpatialOp};

/// Constant background coefficients `rbar11 = rbar22 < 0`, off-diagonals 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub r11: f64,
    pub r22: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearIbvp {
    pub r01: Coef,
    pub r02: Coef,
    pub r11: Coef,
    pub r12: Coef,
    pub r22: Coef,
    /// Optional first-order coefficients `(r1, r2)`.
    pub lower: Option<[Coef; 2]>,
    /// Wall-1 coefficients; only the `z1 = 0` column is read.
    pub b1: Coef,
    pub b2: Coef,
    pub f: Coef,
    pub phi0: Array2<f64>,
    pub phi1: Array2<f64>,
    pub background: Background,
    pub delta: f64,
    pub s0: u32,
    /// Exact `(b2, d b2, d^2 b2)` at the corner when known.
    pub b2_corner_jet: Option<[f64; 3]>,
}

impl LinearIbvp {
    /// `d00 u - c^2 (d11 + d22) u = 0` with `b = (-1, 0)` and zero data.
    pub fn background(grid: &Grid, c0sq: f64) -> Self {
        Self {
            r01: Coef::Const(0.0),
            r02: Coef::Const(0.0),
            r11: Coef::Const(-c0sq),
            r12: Coef::Const(0.0),
            r22: Coef::Const(-c0sq),
            lower: None,
            b1: Coef::Const(-1.0),
            b2: Coef::Const(0.0),
            f: Coef::Const(0.0),
            phi0: grid.zeros2(),
            phi1: grid.zeros2(),
            background: Background { r11: -c0sq, r22: -c0sq },
            delta: 0.0,
            s0: 4,
            b2_corner_jet: Some([0.0; 3]),
        }
    }

    /// `b2/b1` along `z1 = 0`.
    pub fn ratio(&self, n2: usize) -> Vec<f64> {
        (0..n2).map(|j| self.b2.at(0, 0, j) / self.b1.at(0, 0, j)).collect()
    }

    fn spatial(&self, h: f64) -> SpatialOp<'_> {
        SpatialOp { r11: &self.r11, r12: &self.r12, r22: &self.r22, lower: self.lower.as_ref(), h }
    }

    fn has_mixed(&self) -> bool {
        !(self.r01.is_zero() && self.r02.is_zero())
    }

    /// `sup (|r0| + sqrt(|r0|^2 + lambda_max(-r_spatial)))` over all points and levels.
    pub fn c_max(&self, grid: &Grid) -> f64 {
        let (n1, n2) = grid.shape();
        let dynamic = [&self.r01, &self.r02, &self.r11, &self.r12, &self.r22]
            .iter()
            .any(|c| matches!(c, Coef::SpaceTime(_)));
        let levels = if dynamic { grid.nt + 1 } else { 1 };
        let mut c: f64 = 0.0;
        for n in 0..levels {
            for i in 0..n1 {
                for j in 0..n2 {
                    let (a, b, d) = (-self.r11.at(n, i, j), -self.r12.at(n, i, j), -self.r22.at(n, i, j));
                    let lam = 0.5 * (a + d) + (0.25 * (a - d).powi(2) + b * b).sqrt();
                    let r0 = self.r01.at(n, i, j).hypot(self.r02.at(n, i, j));
                    c = c.max(r0 + (r0 * r0 + lam.max(0.0)).sqrt());
                }
            }
        }
        c
    }

    fn check_shapes(&self, grid: &Grid) -> Result<()> {
        let shape = grid.shape();
        let s3 = grid.shape3();
        let coefs: [(&str, &Coef); 9] = [
            ("r01", &self.r01),
            ("r02", &self.r02),
            ("r11", &self.r11),
            ("r12", &self.r12),
            ("r22", &self.r22),
            ("b1", &self.b1),
            ("b2", &self.b2),
            ("f", &self.f),
            ("lower", self.lower.as_ref().map_or(&Coef::Const(0.0), |l| &l[0])),
        ];
        let lower2 = self.lower.as_ref().map(|l| ("lower2", &l[1]));
        for (name, c) in coefs.into_iter().chain(lower2) {
            let ok = match c {
                Coef::Const(_) => true,
                Coef::Space(a) => a.dim() == shape,
                Coef::SpaceTime(a) => a.dim() == s3,
            };
            if !ok {
                return Err(Error::InvalidInput(format!("coefficient {name} does not match the grid")));
            }
        }
        if self.phi0.dim() != shape || self.phi1.dim() != shape {
            return Err(Error::InvalidInput("initial data do not match the grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Fixed-point sweeps resolving the mixed `d0 dj` coupling.
    pub max_sweeps: usize,
    pub courant_limit: f64,
    pub enforce_cfl: bool,
    pub instability_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_sweeps: 12, courant_limit: 0.7, enforce_cfl: true, instability_threshold: 1e12 }
    }
}

/// All time levels of a discrete solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub levels: Array3<f64>,
    pub grid: Grid,
    /// Largest fixed-point sweep count used by any step.
    pub sweeps_used: usize,
}

pub fn solve(p: &LinearIbvp, g: &Grid) -> Result<SolutionField> {
    solve_with(p, g, &SolverOptions::default())
}

pub fn solve_with(p: &LinearIbvp, g: &Grid, opts: &SolverOptions) -> Result<SolutionField> {
    let mut levels = g.zeros3();
    let sweeps = solve_streaming(p, g, opts, |n, u| levels.index_axis_mut(Axis(0), n).assign(&u))?;
    Ok(SolutionField { levels, grid: g.clone(), sweeps_used: sweeps })
}

/// Runs the scheme, handing each level to `observer` in order; returns the
/// largest sweep count used.
pub fn solve_streaming(
    p: &LinearIbvp,
    g: &Grid,
    opts: &SolverOptions,
    mut observer: impl FnMut(usize, ArrayView2<f64>),
) -> Result<usize> {
    p.check_shapes(g)?;
    let c_max = p.c_max(g);
    let courant = g.courant(c_max);
    if opts.enforce_cfl && courant > opts.courant_limit {
        return Err(Error::CflViolation { courant, limit: opts.courant_limit });
    }
    let (n1, n2) = g.shape();
    let (h, dt) = (g.h, g.dt);
    let ratio = p.ratio(n2);
    let op = p.spatial(h);
    let mixed = p.has_mixed();

    let scale = {
        let f_max = p.f.max_abs();
        let t = g.t_final();
        let s = crate::grid::max_abs(&p.phi0.view())
            .max(crate::grid::max_abs(&p.phi1.view()) * t)
            .max(f_max * t * t);
        if s > 0.0 {
            s
        } else {
            f64::MIN_POSITIVE
        }
    };
    let check = |n: usize, u: &Padded| -> Result<()> {
        let m = crate::grid::max_abs(&u.interior());
        let growth = m / scale;
        if !growth.is_finite() || growth > opts.instability_threshold {
            return Err(Error::InstabilityDetected { level: n, growth });
        }
        Ok(())
    };

    let u0 = Padded::from_view(&p.phi0.view(), &ratio);
    let v0 = Padded::from_view(&p.phi1.view(), &ratio);
    observer(0, u0.interior());

    // Taylor start: u1 = u0 + dt v0 + dt^2/2 (f - S u0 - 2 r0j dj v0)
    let s0 = op.apply_all(&u0, 0);
    let m0 = if mixed { mixed_time_part(&p.r01, &p.r02, &v0, 0, h) } else { Array2::zeros((n1, n2)) };
    let mut u1i = Array2::zeros((n1, n2));
    Zip::indexed(&mut u1i).and(&s0).and(&m0).par_for_each(|(i, j), o, &s, &m| {
        let a = p.f.at(0, i, j) - s - 2.0 * m;
        *o = u0.at(i, j) + dt * v0.at(i, j) + 0.5 * dt * dt * a;
    });
    let mut prev = u0;
    let mut cur = Padded::from_view(&u1i.view(), &ratio);
    check(1, &cur)?;
    observer(1, cur.interior());

    let mut max_used = 0usize;
    let dt2 = dt * dt;
    for n in 1..g.nt {
        let s = op.apply_all(&cur, n);
        let mut explicit = Array2::zeros((n1, n2));
        Zip::indexed(&mut explicit).and(&s).par_for_each(|(i, j), o, &sv| {
            *o = 2.0 * cur.at(i, j) - prev.at(i, j) - dt2 * (sv - p.f.at(n, i, j));
        });
        let mut next = Padded::zeros(n1, n2);
        if mixed {
            let back = mixed_time_part(&p.r01, &p.r02, &prev, n, h);
            explicit.zip_mut_with(&back, |e, &b| *e += dt * b);
            // fixed point on the implicit dt * r0j dj u^{n+1} term
            let mut guess = Array2::zeros((n1, n2));
            Zip::indexed(&mut guess).par_for_each(|(i, j), o| *o = 2.0 * cur.at(i, j) - prev.at(i, j));
            next.set_interior(&guess.view());
            next.fill_ghosts(&ratio);
            let mut used = 0;
            for sweep in 0..opts.max_sweeps {
                used = sweep + 1;
                let fwd = mixed_time_part(&p.r01, &p.r02, &next, n, h);
                let mut upd = explicit.clone();
                upd.zip_mut_with(&fwd, |e, &f| *e -= dt * f);
                let mut change: f64 = 0.0;
                let mut size: f64 = 0.0;
                Zip::from(&upd).and(&next.interior()).for_each(|&a, &b| {
                    change = change.max((a - b).abs());
                    size = size.max(a.abs());
                });
                next.set_interior(&upd.view());
                next.fill_ghosts(&ratio);
                if change <= 4.0 * f64::EPSILON * size {
                    break;
                }
            }
            max_used = max_used.max(used);
        } else {
            next.set_interior(&explicit.view());
            next.fill_ghosts(&ratio);
        }
        check(n + 1, &next)?;
        observer(n + 1, next.interior());
        prev = cur;
        cur = next;
    }
    Ok(max_used)
}

/// `L_h u - f` at time levels `1..nt-1` using the scheme's own stencils and
/// ghost rules. Output shape `(nt - 1, n1, n2)`; entry `k` is level `k + 1`.
pub fn residual(p: &LinearIbvp, g: &Grid, u: &Array3<f64>) -> Result<Array3<f64>> {
    p.check_shapes(g)?;
    if u.dim() != g.shape3() {
        return Err(Error::InvalidInput("field does not match the grid".into()));
    }
    let (n1, n2) = g.shape();
    let ratio = p.ratio(n2);
    let op = p.spatial(g.h);
    let (h, dt) = (g.h, g.dt);
    let pad = |k: usize| Padded::from_view(&u.index_axis(Axis(0), k), &ratio);
    let mut out = Array3::zeros((g.nt - 1, n1, n2));
    let mut lv = [pad(0), pad(1), pad(2)];
    for n in 1..g.nt {
        if n > 1 {
            lv.rotate_left(1);
            lv[2] = pad(n + 1);
        }
        let s = op.apply_all(&lv[1], n);
        let fwd = mixed_time_part(&p.r01, &p.r02, &lv[2], n, h);
        let back = mixed_time_part(&p.r01, &p.r02, &lv[0], n, h);
        let mut r = out.index_axis_mut(Axis(0), n - 1);
        Zip::indexed(&mut r).and(&s).and(&fwd).and(&back).for_each(|(i, j), o, &sv, &fv, &bv| {
            let tt = (lv[2].at(i, j) - 2.0 * lv[1].at(i, j) + lv[0].at(i, j)) / (dt * dt);
            *o = tt + (fv - bv) / dt + sv - p.f.at(n, i, j);
        });
    }
    Ok(out)
}

/// `L_h w` for `w = phi0 + z0 phi1` at every level (exact in time for linear `w`).
pub fn lift_operator(p: &LinearIbvp, g: &Grid) -> Result<Array3<f64>> {
    p.check_shapes(g)?;
    let (_, n2) = g.shape();
    let ratio = p.ratio(n2);
    let op = p.spatial(g.h);
    let v = Padded::from_view(&p.phi1.view(), &ratio);
    let mut out = g.zeros3();
    for n in 0..=g.nt {
        let z0 = g.z0(n);
        let mut w = p.phi0.clone();
        w.zip_mut_with(&p.phi1, |a, &b| *a += z0 * b);
        let wp = Padded::from_view(&w.view(), &ratio);
        let s = op.apply_all(&wp, n);
        let m = mixed_time_part(&p.r01, &p.r02, &v, n, g.h);
        let mut lvl = out.index_axis_mut(Axis(0), n);
        Zip::from(&mut lvl).and(&s).and(&m).for_each(|o, &sv, &mv| *o = sv + 2.0 * mv);
    }
    Ok(out)
}

/// Moves the initial data into the forcing: returns `p'` with zero data and
/// `f' = f - L_h w`, together with the lift `w = phi0 + z0 phi1`.
pub fn homogenize(p: &LinearIbvp, g: &Grid) -> Result<(LinearIbvp, Array3<f64>)> {
    let lw = lift_operator(p, g)?;
    let mut f = g.zeros3();
    for ((n, i, j), v) in f.indexed_iter_mut() {
        *v = p.f.at(n, i, j) - lw[[n, i, j]];
    }
    let mut w = g.zeros3();
    for ((n, i, j), v) in w.indexed_iter_mut() {
        *v = p.phi0[[i, j]] + g.z0(n) * p.phi1[[i, j]];
    }
    let zero_data = p.phi0.iter().all(|&v| v == 0.0) && p.phi1.iter().all(|&v| v == 0.0);
    let mut q = p.clone();
    if !zero_data {
        q.f = Coef::SpaceTime(f);
        q.phi0 = g.zeros2();
        q.phi1 = g.zeros2();
    }
    Ok((q, w))
}

/// Discrete energy `sum (|d0 u|^2 - r11 |d1 u|^2 - r22 |d2 u|^2) h^2` at the
/// half level `n + 1/2` of a constant-coefficient background run.
pub fn background_energy(u: &Array3<f64>, g: &Grid, bg: Background, n: usize) -> f64 {
    let a = u.index_axis(Axis(0), n);
    let b = u.index_axis(Axis(0), n + 1);
    let (n1, n2) = a.dim();
    let w = |i: usize, m: usize| if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
    let mut e = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let ut = (b[[i, j]] - a[[i, j]]) / g.dt;
            e += w(i, n1) * w(j, n2) * ut * ut;
        }
    }
    // spatial part: product of neighbouring-level differences (the conserved leapfrog form)
    for i in 0..n1 - 1 {
        for j in 0..n2 {
            let da = (a[[i + 1, j]] - a[[i, j]]) / g.h;
            let db = (b[[i + 1, j]] - b[[i, j]]) / g.h;
            e += -bg.r11 * w(j, n2) * da * db;
        }
    }
    for i in 0..n1 {
        for j in 0..n2 - 1 {
            let da = (a[[i, j + 1]] - a[[i, j]]) / g.h;
            let db = (b[[i, j + 1]] - b[[i, j]]) / g.h;
            e += -bg.r22 * w(i, n1) * da * db;
        }
    }
    e * g.h * g.h
}

/// Separable Neumann eigenmode `cos(w t) cos(k1 z1) cos(k2 z2)`, `k_i = pi m_i / Z`,
/// of the constant-coefficient quarter-plane problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineOracle {
    pub c0sq: f64,
    pub m1: u32,
    pub m2: u32,
}

impl CosineOracle {
    fn wavenumbers(&self, g: &Grid) -> (f64, f64) {
        let k = std::f64::consts::PI / g.extent;
        (k * self.m1 as f64, k * self.m2 as f64)
    }

    pub fn omega(&self, g: &Grid) -> f64 {
        let (k1, k2) = self.wavenumbers(g);
        (self.c0sq * (k1 * k1 + k2 * k2)).sqrt()
    }

    pub fn problem(&self, g: &Grid) -> LinearIbvp {
        let (k1, k2) = self.wavenumbers(g);
        let mut p = LinearIbvp::background(g, self.c0sq);
        p.phi0 = g.sample2(|a, b| (k1 * a).cos() * (k2 * b).cos());
        p
    }

    pub fn exact(&self, g: &Grid) -> Array3<f64> {
        let (k1, k2) = self.wavenumbers(g);
        let w = self.omega(g);
        g.sample3(|t, a, b| (w * t).cos() * (k1 * a).cos() * (k2 * b).cos())
    }

    /// `max |L_h u_exact| / max |u_exact|`: the scheme's truncation residual on this grid.
    pub fn truncation_residual(&self, g: &Grid) -> Result<f64> {
        let p = self.problem(g);
        let u = self.exact(g);
        let r = residual(&p, g, &u)?;
        Ok(crate::grid::max_abs(&r.view()) / crate::grid::max_abs(&u.view()))
    }
}
