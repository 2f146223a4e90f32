//! Multiplier quadratic forms and weighted space-time energy monitors.

use ndarray::{Array3, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::Sym3;
use crate::error::{Error, Result};
use crate::grid::{d1, d2, Coef, Grid};
use crate::linear_solver::{Background, LinearIbvp};

/// Multiplier `Q . D phi` used to build the energy identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierQ {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
}

impl MultiplierQ {
    pub fn as_array(&self) -> [f64; 3] {
        [self.q0, self.q1, self.q2]
    }

    pub fn norm(&self) -> f64 {
        (self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2).sqrt()
    }

    /// Matrix of `H0` at the background state.
    pub fn m_matrix(&self, bg: Background) -> [[f64; 3]; 3] {
        [
            [self.q0, self.q1, self.q2],
            [self.q1, -self.q0 * bg.r11, 0.0],
            [self.q2, 0.0, -self.q0 * bg.r22],
        ]
    }

    /// Leading principal minors of [`Self::m_matrix`].
    pub fn minors(&self, bg: Background) -> [f64; 3] {
        let m = self.m_matrix(bg);
        [m[0][0], m[0][0] * m[1][1] - m[0][1] * m[1][0], det3(&m)]
    }
}

/// `Q = (1, 0, 0)`; the vanishing `q1` removes the boundary form on `z1 = 0`.
pub fn select_multiplier(r11: f64, r22: f64) -> Result<MultiplierQ> {
    if !(r11 < 0.0) {
        return Err(Error::NotHyperbolic { r11 });
    }
    if !(r22 < 0.0) {
        return Err(Error::NotHyperbolic { r11: r22 });
    }
    let q = MultiplierQ { q0: 1.0, q1: 0.0, q2: 0.0 };
    let minors = q.minors(Background { r11, r22 });
    if minors.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::PreconditionViolated(format!("multiplier matrix not positive definite: minors {minors:?}")));
    }
    Ok(q)
}

/// Matrix of `H_row(xi) = 2 (sum_i r_{i,row} xi_i)(Q . xi) - q_row xi^T r xi`.
pub fn h_matrix(q: &MultiplierQ, r: &Sym3, row: usize) -> [[f64; 3]; 3] {
    let qa = q.as_array();
    let mut m = [[0.0; 3]; 3];
    for (i, mi) in m.iter_mut().enumerate() {
        for (k, v) in mi.iter_mut().enumerate() {
            // symmetrised outer product of r_{., row} and Q
            *v = r.get(i, row) * qa[k] + r.get(k, row) * qa[i] - qa[row] * r.get(i, k);
        }
    }
    m
}

fn quad(m: &[[f64; 3]; 3], xi: [f64; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            acc += xi[i] * m[i][k] * xi[k];
        }
    }
    acc
}

pub fn h0(q: &MultiplierQ, r: &Sym3, xi: [f64; 3]) -> f64 {
    quad(&h_matrix(q, r, 0), xi)
}

pub fn h1(q: &MultiplierQ, r: &Sym3, xi: [f64; 3]) -> f64 {
    quad(&h_matrix(q, r, 1), xi)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Smallest eigenvalue of a symmetric 3×3 matrix (trigonometric closed form).
pub fn min_eigenvalue(m: &[[f64; 3]; 3]) -> f64 {
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let tr = m[0][0] + m[1][1] + m[2][2];
    if p1 == 0.0 {
        return m[0][0].min(m[1][1]).min(m[2][2]);
    }
    let qm = tr / 3.0;
    let p2 = (m[0][0] - qm).powi(2) + (m[1][1] - qm).powi(2) + (m[2][2] - qm).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = *m;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - if i == j { qm } else { 0.0 }) / p;
        }
    }
    let r = (det3(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    qm + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

/// Guaranteed lower bound for `H0(xi) / |xi|^2` when every `r_ij` (other than
/// `r00 = 1`) lies within `delta` of the background.
pub fn h0_floor(q: &MultiplierQ, bg: Background, delta: f64) -> f64 {
    let lam = min_eigenvalue(&q.m_matrix(bg));
    lam - delta * (2.0 * 2f64.sqrt() * q.norm() + 8f64.sqrt() * q.q0.abs())
}

/// All multi-indices `(a0, a1, a2)` with `|a| <= max`, by order then lexicographically.
pub fn multi_indices(max: usize) -> Vec<[usize; 3]> {
    let mut v = Vec::new();
    for k in 0..=max {
        for a0 in (0..=k).rev() {
            for a1 in (0..=k - a0).rev() {
                v.push([a0, a1, k - a0 - a1]);
            }
        }
    }
    v
}

fn spacing(g: &Grid, axis: usize) -> f64 {
    if axis == 0 {
        g.dt
    } else {
        g.h
    }
}

/// `D^alpha u` by compact second differences for pairs and one first difference
/// for an odd remainder along each axis.
pub fn derivative(u: &Array3<f64>, g: &Grid, alpha: [usize; 3]) -> Result<Array3<f64>> {
    let mut out = u.clone();
    for (axis, &m) in alpha.iter().enumerate() {
        let h = spacing(g, axis);
        for _ in 0..m / 2 {
            out = d2(&out.view(), axis, h)?;
        }
        if m % 2 == 1 {
            out = d1(&out.view(), axis, h)?;
        }
    }
    Ok(out)
}

fn trap(i: usize, len: usize) -> f64 {
    if i == 0 || i + 1 == len {
        0.5
    } else {
        1.0
    }
}

/// Trapezoidal `sum u^2 h^2` over one level.
pub fn spatial_sq(u: &ArrayView2<f64>, g: &Grid) -> f64 {
    let (n1, n2) = u.dim();
    let mut acc = 0.0;
    for i in 0..n1 {
        let wi = trap(i, n1);
        for j in 0..n2 {
            acc += wi * trap(j, n2) * u[[i, j]] * u[[i, j]];
        }
    }
    acc * g.h * g.h
}

/// Trapezoidal `int exp(-2 eta z0) u^2` over the space-time box.
pub fn weighted_sq(u: &Array3<f64>, g: &Grid) -> f64 {
    let nt1 = u.len_of(Axis(0));
    let per: Vec<f64> = (0..nt1)
        .into_par_iter()
        .map(|k| trap(k, nt1) * (-2.0 * g.eta * g.z0(k)).exp() * spatial_sq(&u.index_axis(Axis(0), k), g))
        .collect();
    per.iter().sum::<f64>() * g.dt
}

/// `r` as a space-time array on the grid.
fn coef_field(c: &Coef, g: &Grid) -> Array3<f64> {
    match c {
        Coef::SpaceTime(a) => a.clone(),
        _ => Array3::from_shape_fn(g.shape3(), |(n, i, j)| c.at(n, i, j)),
    }
}

/// `L u = d00 u + 2 r0j d0j u + rij dij u (+ ri di u)` with the problem's
/// coefficients, by the same difference stencils as [`derivative`].
pub fn apply_operator(p: &LinearIbvp, g: &Grid, u: &Array3<f64>) -> Result<Array3<f64>> {
    let mut out = derivative(u, g, [2, 0, 0])?;
    let terms: [(&Coef, [usize; 3], f64); 5] = [
        (&p.r01, [1, 1, 0], 2.0),
        (&p.r02, [1, 0, 1], 2.0),
        (&p.r11, [0, 2, 0], 1.0),
        (&p.r12, [0, 1, 1], 2.0),
        (&p.r22, [0, 0, 2], 1.0),
    ];
    let lower = p.lower.as_ref().map(|l| [(&l[0], [0, 1, 0], 1.0), (&l[1], [0, 0, 1], 1.0)]);
    for (c, alpha, w) in terms.into_iter().chain(lower.into_iter().flatten()) {
        if c.is_zero() {
            continue;
        }
        let d = derivative(u, g, alpha)?;
        for ((n, i, j), o) in out.indexed_iter_mut() {
            *o += w * c.at(n, i, j) * d[[n, i, j]];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEntry {
    pub order: usize,
    /// `eta * sum_{|a|<=k} ||exp(-eta z0) D^a phi||^2`.
    pub bulk: f64,
    /// `exp(-2 eta T) sum_{|a|<=k} ||D^a phi(T)||^2`.
    pub terminal: f64,
    pub lhs: f64,
    /// `(1/eta) sum_{|a|<=k-1} ||exp(-eta z0) L(D^a phi)||^2`.
    pub operator: f64,
    /// `(1/eta) sum_{|a|<=k-1} ||exp(-eta z0) D^a f||^2`.
    pub forcing: f64,
    /// `sum_{|a|<=k} ||D^a phi(0)||^2`.
    pub initial: f64,
    /// `forcing + initial`.
    pub rhs: f64,
    /// `lhs / rhs`; `None` when both vanish.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub eta: f64,
    pub h: f64,
    pub dt: f64,
    pub t_final: f64,
    pub orders: Vec<OrderEntry>,
}

impl EnergyReport {
    pub fn ratio(&self, order: usize) -> Option<f64> {
        self.orders.get(order).and_then(|e| e.ratio)
    }

    pub fn csv_header() -> &'static str {
        "eta,h,dt,order,bulk,terminal,lhs,operator,forcing,initial,rhs,ratio"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.orders
            .iter()
            .map(|e| {
                format!(
                    "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                    self.eta,
                    self.h,
                    self.dt,
                    e.order,
                    e.bulk,
                    e.terminal,
                    e.lhs,
                    e.operator,
                    e.forcing,
                    e.initial,
                    e.rhs,
                    e.ratio.map_or("nan".to_string(), |r| format!("{r:e}"))
                )
            })
            .collect()
    }
}

fn ratio_of(lhs: f64, rhs: f64) -> Option<f64> {
    if rhs > 0.0 {
        Some(lhs / rhs)
    } else if lhs == 0.0 {
        None
    } else {
        Some(f64::INFINITY)
    }
}

/// Weighted energy quantities of `phi` (levels on `g`, weight `g.eta`) for
/// derivative orders `0..=max_order`.
pub fn weighted_norms(phi: &Array3<f64>, p: &LinearIbvp, g: &Grid, max_order: usize) -> Result<EnergyReport> {
    if max_order > 4 {
        return Err(Error::InvalidInput(format!("max_order {max_order} exceeds 4")));
    }
    if phi.dim() != g.shape3() {
        return Err(Error::InvalidInput("field does not match the grid".into()));
    }
    let (nt1, n1, n2) = phi.dim();
    for (axis, len) in [nt1, n1, n2].into_iter().enumerate() {
        if len < max_order.max(2) + 2 {
            return Err(Error::OrderUnavailable { order: max_order, axis, points: len });
        }
    }
    let eta = g.eta;
    let f = coef_field(&p.f, g);
    let f_zero = p.f.is_zero();
    let last = g.nt;
    let decay = (-2.0 * eta * g.t_final()).exp();

    let mut by_order = vec![[0.0f64; 5]; max_order + 1]; // bulk, terminal, initial, operator, forcing
    for alpha in multi_indices(max_order) {
        let k: usize = alpha.iter().sum();
        let d = derivative(phi, g, alpha)?;
        let bulk = eta * weighted_sq(&d, g);
        let term = decay * spatial_sq(&d.index_axis(Axis(0), last), g);
        let init = spatial_sq(&d.index_axis(Axis(0), 0), g);
        let (op, forc) = if k < max_order.max(1) {
            let l = apply_operator(p, g, &d)?;
            let fo = if f_zero { 0.0 } else { weighted_sq(&derivative(&f, g, alpha)?, g) / eta };
            (weighted_sq(&l, g) / eta, fo)
        } else {
            (0.0, 0.0)
        };
        for (ord, acc) in by_order.iter_mut().enumerate() {
            if k <= ord {
                acc[0] += bulk;
                acc[1] += term;
                acc[2] += init;
            }
            if k < ord.max(1) {
                acc[3] += op;
                acc[4] += forc;
            }
        }
    }
    let orders = by_order
        .iter()
        .enumerate()
        .map(|(order, a)| {
            let lhs = a[0] + a[1];
            let rhs = a[4] + a[2];
            OrderEntry {
                order,
                bulk: a[0],
                terminal: a[1],
                lhs,
                operator: a[3],
                forcing: a[4],
                initial: a[2],
                rhs,
                ratio: ratio_of(lhs, rhs),
            }
        })
        .collect();
    Ok(EnergyReport { eta, h: g.h, dt: g.dt, t_final: g.t_final(), orders })
}

/// Per-level `sum_{|a|<=k} ||D^a phi(z0)||^2`, indexed `[level][k]`.
pub fn level_profile(phi: &Array3<f64>, g: &Grid, max_order: usize) -> Result<Vec<Vec<f64>>> {
    let nt1 = phi.len_of(Axis(0));
    let mut out = vec![vec![0.0; max_order + 1]; nt1];
    for alpha in multi_indices(max_order) {
        let k: usize = alpha.iter().sum();
        let d = derivative(phi, g, alpha)?;
        for (n, row) in out.iter_mut().enumerate() {
            let s = spatial_sq(&d.index_axis(Axis(0), n), g);
            for v in row.iter_mut().skip(k) {
                *v += s;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDiagnostic {
    pub etas: Vec<f64>,
    /// `constants[k][r]`: fitted constant of order `k` in report `r`.
    pub constants: Vec<Vec<Option<f64>>>,
    /// Largest over smallest constant, per order, over all reports.
    pub variation_all: Vec<f64>,
    /// The same over the upper half of the reports.
    pub variation_upper_half: Vec<f64>,
    pub vacuous: bool,
    pub stabilizes: bool,
}

fn variation(vals: &[Option<f64>]) -> f64 {
    let defined: Vec<f64> = vals.iter().flatten().copied().collect();
    if defined.is_empty() {
        return 1.0;
    }
    if defined.iter().any(|v| !v.is_finite()) || defined.len() < vals.len() {
        return f64::INFINITY;
    }
    let hi = defined.iter().cloned().fold(f64::MIN, f64::max);
    let lo = defined.iter().cloned().fold(f64::MAX, f64::min);
    if lo > 0.0 {
        hi / lo
    } else if hi == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Compares fitted constants across a sweep (in `eta` or in refinement).
pub fn check_estimate(reports: &[EnergyReport]) -> EstimateDiagnostic {
    let orders = reports.iter().map(|r| r.orders.len()).min().unwrap_or(0);
    let constants: Vec<Vec<Option<f64>>> =
        (0..orders).map(|k| reports.iter().map(|r| r.orders[k].ratio).collect()).collect();
    let half = reports.len() / 2;
    let variation_all: Vec<f64> = constants.iter().map(|c| variation(c)).collect();
    let variation_upper_half: Vec<f64> = constants.iter().map(|c| variation(&c[half..])).collect();
    let vacuous = constants.iter().all(|c| c.iter().all(Option::is_none));
    let stabilizes = variation_upper_half.iter().all(|&v| v < 2.0);
    EstimateDiagnostic {
        etas: reports.iter().map(|r| r.eta).collect(),
        constants,
        variation_all,
        variation_upper_half,
        vacuous,
        stabilizes,
    }
}

/// Both sides of the weighted norm relation for a field vanishing to order
/// `s - 1` at `z0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRelation {
    /// `sum_{|a|<=s} ||D^a (exp(-eta z0) v)||^2`.
    pub weighted_sobolev: f64,
    /// `sum_{|a|<=s} ||exp(-eta z0) D^a v||^2`.
    pub derivative_sum: f64,
    pub ratio: f64,
}

pub fn norm_relation(v: &Array3<f64>, g: &Grid, s: usize) -> Result<NormRelation> {
    let mut weighted = v.clone();
    for ((n, _, _), x) in weighted.indexed_iter_mut() {
        *x *= (-g.eta * g.z0(n)).exp();
    }
    let plain = Grid { eta: 0.0, ..g.clone() };
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for alpha in multi_indices(s) {
        lhs += weighted_sq(&derivative(&weighted, g, alpha)?, &plain);
        rhs += weighted_sq(&derivative(v, g, alpha)?, g);
    }
    Ok(NormRelation { weighted_sobolev: lhs, derivative_sum: rhs, ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 } })
}
