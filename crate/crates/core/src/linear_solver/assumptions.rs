use serde::{Deserialize, Serialize};

use super::LinearIbvp;
use crate::grid::{Coef, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionOptions {
    /// Tolerance for the boundary identities.
    pub identity_tol: f64,
    /// Allowed `|b1 + 1|`, `|b2|` per unit `delta`.
    pub b_bound: f64,
}

impl Default for AssumptionOptions {
    fn default() -> Self {
        Self { identity_tol: 1e-8, b_bound: 10.0 }
    }
}

/// Residuals of the four structural assumptions on a frozen problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// (i) `rbar11 = rbar22 < 0` and `max |r - rbar| <= delta`.
    pub background_hyperbolic: bool,
    pub max_deviation: f64,
    /// (ii) smoothness index and boundary coefficient bounds.
    pub s0: u32,
    pub b1_min_abs: f64,
    pub b_deviation: f64,
    /// (iii) `r02`, `r12` on `z2 = 0` and the corner jet of `b2`.
    pub gamma2_r02: f64,
    pub gamma2_r12: f64,
    pub b2_corner: [f64; 3],
    pub b2_corner_from_jet: bool,
    /// (iv) `r12/r11 - b2/b1` and `r01` on `z1 = 0`.
    pub gamma1_ratio: f64,
    pub gamma1_r01: f64,
    pub pass: [bool; 4],
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }
}

fn levels(c: &Coef, nt: usize) -> usize {
    if matches!(c, Coef::SpaceTime(_)) {
        nt + 1
    } else {
        1
    }
}

pub fn validate_assumptions(p: &LinearIbvp, g: &Grid, opts: &AssumptionOptions) -> AssumptionReport {
    let (n1, n2) = g.shape();
    let bg = p.background;
    let background_hyperbolic = bg.r11 == bg.r22 && bg.r11 < 0.0;

    let mut max_deviation: f64 = 0.0;
    let targets = [(&p.r01, 0.0), (&p.r02, 0.0), (&p.r11, bg.r11), (&p.r12, 0.0), (&p.r22, bg.r22)];
    for (c, target) in targets {
        for n in 0..levels(c, g.nt) {
            for i in 0..n1 {
                for j in 0..n2 {
                    max_deviation = max_deviation.max((c.at(n, i, j) - target).abs());
                }
            }
        }
    }

    let mut b1_min_abs = f64::INFINITY;
    let mut b_deviation: f64 = 0.0;
    for j in 0..n2 {
        let b1 = p.b1.at(0, 0, j);
        b1_min_abs = b1_min_abs.min(b1.abs());
        b_deviation = b_deviation.max((b1 + 1.0).abs()).max(p.b2.at(0, 0, j).abs());
    }

    let axis = g.axis_index();
    let (mut gamma2_r02, mut gamma2_r12): (f64, f64) = (0.0, 0.0);
    let (mut gamma1_ratio, mut gamma1_r01): (f64, f64) = (0.0, 0.0);
    let nmax = [&p.r01, &p.r02, &p.r11, &p.r12].iter().map(|c| levels(c, g.nt)).max().unwrap_or(1);
    for n in 0..nmax {
        for i in 0..n1 {
            gamma2_r02 = gamma2_r02.max(p.r02.at(n, i, axis).abs());
            gamma2_r12 = gamma2_r12.max(p.r12.at(n, i, axis).abs());
        }
        for j in 0..n2 {
            let lhs = p.r12.at(n, 0, j) / p.r11.at(n, 0, j);
            let rhs = p.b2.at(0, 0, j) / p.b1.at(0, 0, j);
            gamma1_ratio = gamma1_ratio.max((lhs - rhs).abs());
            gamma1_r01 = gamma1_r01.max(p.r01.at(n, 0, j).abs());
        }
    }

    let (b2_corner, from_jet) = match p.b2_corner_jet {
        Some(j) => ([j[0].abs(), j[1].abs(), j[2].abs()], true),
        None => {
            // one-sided second-order differences along z2 from the axis
            let b = |k: usize| p.b2.at(0, 0, axis + k);
            let h = g.h;
            let d1 = (-3.0 * b(0) + 4.0 * b(1) - b(2)) / (2.0 * h);
            let d2 = (2.0 * b(0) - 5.0 * b(1) + 4.0 * b(2) - b(3)) / (h * h);
            ([b(0).abs(), d1.abs(), d2.abs()], false)
        }
    };

    let tol = opts.identity_tol;
    let pass = [
        background_hyperbolic && max_deviation <= p.delta.max(0.0) + 1e-14,
        p.s0 >= 3 && b1_min_abs >= 0.5 && b_deviation <= opts.b_bound * p.delta + 1e-14,
        gamma2_r02 <= tol && gamma2_r12 <= tol && b2_corner.iter().all(|&v| v <= tol),
        gamma1_ratio <= tol && gamma1_r01 <= tol,
    ];
    AssumptionReport {
        background_hyperbolic,
        max_deviation,
        s0: p.s0,
        b1_min_abs,
        b_deviation,
        gamma2_r02,
        gamma2_r12,
        b2_corner,
        b2_corner_from_jet: from_jet,
        gamma1_ratio,
        gamma1_r01,
        pass,
    }
}
