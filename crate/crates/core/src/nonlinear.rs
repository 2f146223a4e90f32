//! Picard iteration with frozen coefficients around the cubic Taylor lift.
//!
//! With `Phi_hat = phi + psi`, iterate `m` solves the linear problem
//! `alpha_ij(D w) d_ij phi_{m+1} = -alpha_ij(D w) d_ij psi - alpha_i(D w) d_i w`,
//! `w = phi_m + psi`, with zero initial data and the wall conditions.

use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::alpha_from_gradient;
use crate::compatibility::{psi_derivative, InitialJet};
use crate::energy::{derivative, multi_indices, weighted_sq};
use crate::error::{Error, Result};
use crate::grid::{Coef, Grid};
use crate::linear_solver::stencil::Padded;
use crate::linear_solver::{residual, solve_with, Background, LinearIbvp, SolverOptions};
use crate::setup::FlowSetup;

/// `sqrt(sum_{|a|<=k} ||exp(-eta z0) D^a u||^2)`.
pub fn weighted_norm(u: &Array3<f64>, g: &Grid, k: usize) -> Result<f64> {
    let mut acc = 0.0;
    for alpha in multi_indices(k) {
        acc += weighted_sq(&derivative(u, g, alpha)?, g);
    }
    Ok(acc.sqrt())
}

/// The Taylor lift with its first two time derivatives at every level.
#[derive(Debug, Clone)]
pub struct Lift {
    pub psi: Array3<f64>,
    pub psi_t: Array3<f64>,
    pub psi_tt: Array3<f64>,
}

impl Lift {
    pub fn new(jet: &InitialJet, g: &Grid) -> Self {
        let build = |k: usize| {
            let mut a = g.zeros3();
            for n in 0..=g.nt {
                a.index_axis_mut(Axis(0), n).assign(&psi_derivative(jet, g.z0(n), k));
            }
            a
        };
        Self { psi: build(0), psi_t: build(1), psi_tt: build(2) }
    }
}

/// Ghost-padded levels of a space-time field.
fn padded_levels(u: &Array3<f64>, ratio: &[f64]) -> Vec<Padded> {
    u.axis_iter(Axis(0)).map(|l| Padded::from_view(&l, ratio)).collect()
}

/// Discrete time derivative: centred inside, second-order backward at the
/// last level, `start` at level 0.
fn time_derivative(u: &Array3<f64>, dt: f64, start: Option<&Array2<f64>>) -> Array3<f64> {
    let nt = u.len_of(Axis(0)) - 1;
    let mut out = Array3::zeros(u.raw_dim());
    for n in 0..=nt {
        let mut o = out.index_axis_mut(Axis(0), n);
        if n == 0 {
            match start {
                Some(s) => o.assign(s),
                None => {
                    let (a, b, c) = (u.index_axis(Axis(0), 0), u.index_axis(Axis(0), 1), u.index_axis(Axis(0), 2));
                    ndarray::Zip::from(&mut o).and(&a).and(&b).and(&c).for_each(|o, &a, &b, &c| {
                        *o = (-3.0 * a + 4.0 * b - c) / (2.0 * dt)
                    });
                }
            }
        } else if n == nt {
            let (a, b, c) = (u.index_axis(Axis(0), n), u.index_axis(Axis(0), n - 1), u.index_axis(Axis(0), n - 2));
            ndarray::Zip::from(&mut o).and(&a).and(&b).and(&c).for_each(|o, &a, &b, &c| {
                *o = (3.0 * a - 4.0 * b + c) / (2.0 * dt)
            });
        } else {
            let (a, b) = (u.index_axis(Axis(0), n + 1), u.index_axis(Axis(0), n - 1));
            ndarray::Zip::from(&mut o).and(&a).and(&b).for_each(|o, &a, &b| *o = (a - b) / (2.0 * dt));
        }
    }
    out
}

/// `alpha_ij`, `alpha_i` at every level and point from a state with known
/// time derivative `w_t` and ghost-padded levels `wp`.
struct FrozenCoefs {
    r: [Array3<f64>; 5],
    lower: [Array3<f64>; 2],
}

fn freeze(setup: &FlowSetup, w_t: &Array3<f64>, wp: &[Padded]) -> Result<FrozenCoefs> {
    let g = &setup.grid;
    let (n1, n2) = g.shape();
    let h = g.h;
    let mut r: [Array3<f64>; 5] = std::array::from_fn(|_| g.zeros3());
    let mut lower: [Array3<f64>; 2] = std::array::from_fn(|_| g.zeros3());
    for n in 0..=g.nt {
        let pad = &wp[n];
        let wt = w_t.index_axis(Axis(0), n);
        let cells: Vec<[f64; 7]> = (0..n1 * n2)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n2, k % n2);
                let (d1, d2) = pad.grad(i, j, h);
                let (a, l) = alpha_from_gradient(setup.map_point(i, j), &setup.gas, [wt[[i, j]], d1, d2])?;
                Ok([a.m01, a.m02, a.m11, a.m12, a.m22, l[1], l[2]])
            })
            .collect::<Result<_>>()?;
        for (k, c) in cells.iter().enumerate() {
            let (i, j) = (k / n2, k % n2);
            for (m, v) in c.iter().enumerate() {
                if m < 5 {
                    r[m][[n, i, j]] = *v;
                } else {
                    lower[m - 5][[n, i, j]] = *v;
                }
            }
        }
    }
    Ok(FrozenCoefs { r, lower })
}

fn background(setup: &FlowSetup) -> Background {
    let c2 = setup.gas.c0sq();
    Background { r11: -c2, r22: -c2 }
}

fn deviation(r: &[Array3<f64>; 5], bg: Background) -> f64 {
    let targets = [0.0, 0.0, bg.r11, 0.0, bg.r22];
    r.iter()
        .zip(targets)
        .map(|(a, t)| a.iter().fold(0.0f64, |m, &v| m.max((v - t).abs())))
        .fold(0.0, f64::max)
}

/// Frozen linear problem for iterate `m`, given the current `phi_m` and the lift.
pub fn assemble_frozen(setup: &FlowSetup, phi_m: &Array3<f64>, lift: &Lift) -> Result<LinearIbvp> {
    let g = &setup.grid;
    if phi_m.dim() != g.shape3() {
        return Err(Error::InvalidInput("iterate does not match the grid".into()));
    }
    let h = g.h;
    let zero = g.zeros2();
    let mut w_t = time_derivative(phi_m, g.dt, Some(&zero));
    w_t += &lift.psi_t;
    let w = phi_m + &lift.psi;
    let wp = padded_levels(&w, &setup.ratio);
    let fc = freeze(setup, &w_t, &wp)?;

    let psip = padded_levels(&lift.psi, &setup.ratio);
    let psitp = padded_levels(&lift.psi_t, &setup.ratio);
    let mut f = g.zeros3();
    let (n1, n2) = g.shape();
    for n in 0..=g.nt {
        for i in 0..n1 {
            for j in 0..n2 {
                let (p11, p12, p22) = psip[n].hess(i, j, h);
                let (q1, q2) = psitp[n].grad(i, j, h);
                let (w1, w2) = wp[n].grad(i, j, h);
                let at = |c: usize| fc.r[c][[n, i, j]];
                let l_psi = lift.psi_tt[[n, i, j]] + 2.0 * (at(0) * q1 + at(1) * q2) + at(2) * p11
                    + 2.0 * at(3) * p12
                    + at(4) * p22;
                let lw = fc.lower[0][[n, i, j]] * w1 + fc.lower[1][[n, i, j]] * w2;
                f[[n, i, j]] = -l_psi - lw;
            }
        }
    }
    let bg = background(setup);
    let delta = deviation(&fc.r, bg);
    let (b1, b2) = setup.boundary_coefs();
    let [r01, r02, r11, r12, r22] = fc.r;
    Ok(LinearIbvp {
        r01: Coef::SpaceTime(r01),
        r02: Coef::SpaceTime(r02),
        r11: Coef::SpaceTime(r11),
        r12: Coef::SpaceTime(r12),
        r22: Coef::SpaceTime(r22),
        lower: None,
        b1,
        b2,
        f: Coef::SpaceTime(f),
        phi0: g.zeros2(),
        phi1: g.zeros2(),
        background: bg,
        delta,
        s0: 4,
        b2_corner_jet: Some(setup.b2_corner_jet),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearOptions {
    pub m_max: usize,
    /// Convergence when `||v_m||_{H1} <= tol_h1 * ||psi||_{H1}` (or `tol_h1`
    /// when the lift vanishes).
    pub tol_h1: f64,
    /// Record the order-4 norm of every iterate.
    pub monitor_h4: bool,
    pub solver: SolverOptions,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        Self { m_max: 30, tol_h1: 1e-10, monitor_h4: true, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateEntry {
    /// Index `m` of `v_m = phi_{m+1} - phi_m`.
    pub m: usize,
    pub h1_difference: f64,
    /// `||v_m|| / ||v_{m-1}||`.
    pub ratio: Option<f64>,
    /// Order-4 norm of `phi_{m+1} + psi`.
    pub h4_norm: Option<f64>,
    /// Largest deviation of the frozen coefficients from the background.
    pub delta: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub entries: Vec<IterateEntry>,
    pub converged: bool,
    pub threshold: f64,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.entries.len()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.ratio).collect()
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("m,h1_difference,ratio,h4_norm,delta,sweeps\n");
        for e in &self.entries {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
            s.push_str(&format!(
                "{},{:e},{},{},{:e},{}\n",
                e.m,
                e.h1_difference,
                opt(e.ratio),
                opt(e.h4_norm),
                e.delta,
                e.sweeps
            ));
        }
        s
    }
}

/// Geometric mean of the successive ratios; `None` with fewer than two ratios.
pub fn contraction_ratio(trace: &IterationTrace) -> Option<f64> {
    let r = trace.ratios();
    if r.len() < 2 {
        return None;
    }
    Some((r.iter().map(|v| v.ln()).sum::<f64>() / r.len() as f64).exp())
}

/// Every recorded order-4 norm is at most `delta0`.
pub fn boundedness_check(trace: &IterationTrace, delta0: f64) -> bool {
    trace.entries.iter().all(|e| e.h4_norm.map_or(true, |v| v <= delta0))
}

#[derive(Debug, Clone)]
pub struct NonlinearSolution {
    /// `Phi_hat` at every level.
    pub field: Array3<f64>,
    pub trace: IterationTrace,
    pub lift: Lift,
}

/// Runs the iteration to convergence or `m_max`, returning what was reached.
pub fn run_iteration(setup: &FlowSetup, jet: &InitialJet, opts: &NonlinearOptions) -> Result<NonlinearSolution> {
    let g = &setup.grid;
    let lift = Lift::new(jet, g);
    let psi_h1 = weighted_norm(&lift.psi, g, 1)?;
    let threshold = if psi_h1 > 0.0 { opts.tol_h1 * psi_h1 } else { opts.tol_h1 };
    let mut phi = g.zeros3();
    let mut entries: Vec<IterateEntry> = Vec::new();
    let mut converged = false;
    for m in 0..opts.m_max {
        let p = assemble_frozen(setup, &phi, &lift)?;
        let sol = solve_with(&p, g, &opts.solver)?;
        let v = &sol.levels - &phi;
        let h1 = weighted_norm(&v, g, 1)?;
        let ratio = entries.last().map(|e| if e.h1_difference > 0.0 { h1 / e.h1_difference } else { 0.0 });
        phi = sol.levels;
        let h4_norm = if opts.monitor_h4 { Some(weighted_norm(&(&phi + &lift.psi), g, 4)?) } else { None };
        entries.push(IterateEntry { m, h1_difference: h1, ratio, h4_norm, delta: p.delta, sweeps: sol.sweeps_used });
        if h1 <= threshold {
            converged = true;
            break;
        }
    }
    let field = phi + &lift.psi;
    Ok(NonlinearSolution { field, trace: IterationTrace { entries, converged, threshold }, lift })
}

/// [`run_iteration`] that reports a missed tolerance as an error.
pub fn iterate(setup: &FlowSetup, jet: &InitialJet, opts: &NonlinearOptions) -> Result<NonlinearSolution> {
    let s = run_iteration(setup, jet, opts)?;
    if !s.trace.converged {
        let ratio = s.trace.ratios().last().copied().unwrap_or(f64::NAN);
        return Err(Error::NoConvergence { iterations: s.trace.iterations(), ratio });
    }
    Ok(s)
}

/// Linear problem whose discrete residual is the nonlinear residual of `field`:
/// coefficients `alpha(D field)` with centred time differences, zero forcing.
pub fn linearized_at(setup: &FlowSetup, field: &Array3<f64>) -> Result<LinearIbvp> {
    let g = &setup.grid;
    let w_t = time_derivative(field, g.dt, None);
    let wp = padded_levels(field, &setup.ratio);
    let fc = freeze(setup, &w_t, &wp)?;
    let bg = background(setup);
    let delta = deviation(&fc.r, bg);
    let (b1, b2) = setup.boundary_coefs();
    let [r01, r02, r11, r12, r22] = fc.r;
    let [l1, l2] = fc.lower;
    Ok(LinearIbvp {
        r01: Coef::SpaceTime(r01),
        r02: Coef::SpaceTime(r02),
        r11: Coef::SpaceTime(r11),
        r12: Coef::SpaceTime(r12),
        r22: Coef::SpaceTime(r22),
        lower: Some([Coef::SpaceTime(l1), Coef::SpaceTime(l2)]),
        b1,
        b2,
        f: Coef::Const(0.0),
        phi0: field.index_axis(Axis(0), 0).to_owned(),
        phi1: w_t.index_axis(Axis(0), 0).to_owned(),
        background: bg,
        delta,
        s0: 4,
        b2_corner_jet: Some(setup.b2_corner_jet),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    /// `max_abs / max |field|` (0 for a vanishing field).
    pub relative: f64,
}

/// Discrete residual of `alpha_ij d_ij Phi + alpha_i d_i Phi` at levels `1..nt-1`.
pub fn nonlinear_residual(setup: &FlowSetup, field: &Array3<f64>) -> Result<ResidualReport> {
    let p = linearized_at(setup, field)?;
    let r = residual(&p, &setup.grid, field)?;
    let max_abs = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ResidualReport { max_abs, relative: if scale > 0.0 { max_abs / scale } else { 0.0 } })
}

/// `max_n |grad Phi(z0_n, 0, 0)|` with the solver's boundary-consistent stencils.
pub fn corner_gradient(setup: &FlowSetup, field: &Array3<f64>) -> f64 {
    let h = setup.grid.h;
    field
        .axis_iter(Axis(0))
        .map(|l| {
            let p = Padded::from_view(&l, &setup.ratio);
            let (a, b) = p.grad(0, 0, h);
            a.hypot(b)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::GasState;
    use crate::compatibility::build_jet;
    use crate::data::{Bump, BumpSum};
    use crate::geometry::CornerDomain;
    use crate::grid::Layout;
    use crate::linear_solver::{validate_assumptions, AssumptionOptions};

    fn flat_setup(n: usize) -> FlowSetup {
        let g = Grid::with_cfl(1.6, n, 0.4, 0.5, 1.0, Layout::Quarter).unwrap().with_eta(4.0);
        FlowSetup::new(CornerDomain::flat(), GasState::new(1.4, 0.0).unwrap(), g).unwrap()
    }

    fn bump_jet(s: &FlowSetup, amp: f64) -> InitialJet {
        let data = BumpSum { bumps: vec![Bump { center: [0.3, 0.2], radius: 0.5, amplitude: amp }], symmetrize: true };
        let phi0 = s.grid.sample2(|a, b| data.value([a, b]));
        build_jet(s, &phi0, &s.grid.zeros2()).unwrap()
    }

    #[test]
    fn zero_scenario_converges_at_first_step() {
        let s = flat_setup(16);
        let jet = InitialJet::zeros(&s.grid);
        let out = iterate(&s, &jet, &NonlinearOptions::default()).unwrap();
        assert_eq!(out.trace.iterations(), 1);
        assert!(out.field.iter().all(|&v| v == 0.0));
        assert!(contraction_ratio(&out.trace).is_none());
        assert!(boundedness_check(&out.trace, 0.0));
    }

    #[test]
    fn zero_iterate_with_zero_lift_is_background() {
        let s = flat_setup(16);
        let lift = Lift::new(&InitialJet::zeros(&s.grid), &s.grid);
        let p = assemble_frozen(&s, &s.grid.zeros3(), &lift).unwrap();
        assert!(p.f.is_zero());
        assert_eq!(p.delta, 0.0);
        assert!(validate_assumptions(&p, &s.grid, &AssumptionOptions::default()).all_pass());
    }

    #[test]
    fn forcing_matches_direct_stencil_composition() {
        let s = flat_setup(16);
        let jet = bump_jet(&s, 1e-3);
        let lift = Lift::new(&jet, &s.grid);
        let p = assemble_frozen(&s, &s.grid.zeros3(), &lift).unwrap();
        let (n, i, j) = (3usize, 5usize, 4usize);
        let (g, h) = (&s.grid, s.grid.h);
        let t = g.z0(n);
        // direct evaluation from the jet polynomials at one point
        let psi = |a: usize, b: usize| {
            (0..4).map(|k| jet.phi[k][[a, b]] * t.powi(k as i32) / [1.0, 1.0, 2.0, 6.0][k]).sum::<f64>()
        };
        let psi_t = |a: usize, b: usize| jet.phi[1][[a, b]] + t * jet.phi[2][[a, b]] + 0.5 * t * t * jet.phi[3][[a, b]];
        let psi_tt = jet.phi[2][[i, j]] + t * jet.phi[3][[i, j]];
        let d1 = (psi(i + 1, j) - psi(i - 1, j)) / (2.0 * h);
        let d2 = (psi(i, j + 1) - psi(i, j - 1)) / (2.0 * h);
        let d11 = (psi(i + 1, j) - 2.0 * psi(i, j) + psi(i - 1, j)) / (h * h);
        let d22 = (psi(i, j + 1) - 2.0 * psi(i, j) + psi(i, j - 1)) / (h * h);
        let d12 = (psi(i + 1, j + 1) - psi(i + 1, j - 1) - psi(i - 1, j + 1) + psi(i - 1, j - 1)) / (4.0 * h * h);
        let dt1 = (psi_t(i + 1, j) - psi_t(i - 1, j)) / (2.0 * h);
        let dt2 = (psi_t(i, j + 1) - psi_t(i, j - 1)) / (2.0 * h);
        let mp = s.map_point(i, j);
        let (a, l) = alpha_from_gradient(mp, &s.gas, [psi_t(i, j), d1, d2]).unwrap();
        let want = -(psi_tt + 2.0 * a.m01 * dt1 + 2.0 * a.m02 * dt2 + a.m11 * d11 + 2.0 * a.m12 * d12 + a.m22 * d22
            + l[1] * d1
            + l[2] * d2);
        let got = p.f.at(n, i, j);
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1e-12), "{got} vs {want}");
    }

    #[test]
    fn bump_iteration_contracts() {
        let s = flat_setup(24);
        let jet = bump_jet(&s, 1e-3);
        let out = iterate(&s, &jet, &NonlinearOptions::default()).unwrap();
        assert!(out.trace.iterations() >= 3);
        assert!(out.trace.ratios().iter().all(|&r| r < 1.0), "{:?}", out.trace.ratios());
        assert!(corner_gradient(&s, &out.field) <= 1e-12);
        let p = assemble_frozen(&s, &(&out.field - &out.lift.psi), &out.lift).unwrap();
        let rep = validate_assumptions(&p, &s.grid, &AssumptionOptions::default());
        assert!(rep.all_pass(), "{rep:?}");
        let res = nonlinear_residual(&s, &out.field).unwrap();
        assert!(res.relative < 1e-3, "{res:?}");
    }

    #[test]
    fn fixed_point_is_stationary() {
        let s = flat_setup(16);
        let jet = bump_jet(&s, 5e-4);
        let opts = NonlinearOptions::default();
        let out = iterate(&s, &jet, &opts).unwrap();
        let phi = &out.field - &out.lift.psi;
        let p = assemble_frozen(&s, &phi, &out.lift).unwrap();
        let next = solve_with(&p, &s.grid, &opts.solver).unwrap().levels;
        let step = weighted_norm(&(&next - &phi), &s.grid, 1).unwrap();
        assert!(step <= out.trace.threshold, "{step} > {}", out.trace.threshold);
    }

    #[test]
    fn geometric_trace_ratio() {
        let entries = (0..5)
            .map(|m| IterateEntry {
                m,
                h1_difference: 0.5f64.powi(m as i32),
                ratio: (m > 0).then_some(0.5),
                h4_norm: Some(1.0),
                delta: 0.0,
                sweeps: 1,
            })
            .collect();
        let t = IterationTrace { entries, converged: true, threshold: 0.0 };
        assert!((contraction_ratio(&t).unwrap() - 0.5).abs() < 1e-15);
        assert!(boundedness_check(&t, 1.0) && !boundedness_check(&t, 0.9));
    }
}
