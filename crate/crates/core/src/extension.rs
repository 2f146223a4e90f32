//! Odd/even extension across `z2 = 0` and one-dimensional mollification in `z2`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSnapshot;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }
}

/// A field on `[0,Z] x [-Z,Z]`; column `n` is `z2 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    pub data: Array2<f64>,
    pub parity: Parity,
}

impl ExtendedField {
    /// Index of the `z2 = 0` column.
    pub fn axis(&self) -> usize {
        (self.data.ncols() - 1) / 2
    }

    /// `max |F(z1,-z2) -/+ F(z1,z2)|` over the grid (0 when the parity holds exactly).
    pub fn parity_residual(&self) -> f64 {
        let m = self.data.ncols() - 1;
        let s = self.parity.sign();
        let mut r: f64 = 0.0;
        for row in self.data.rows() {
            for j in 0..=m / 2 {
                r = r.max((row[m - j] - s * row[j]).abs());
            }
        }
        r
    }
}

/// Mirror-fills the `z2 < 0` half; an odd field gets an exact zero on the axis.
pub fn extend(quarter: &ArrayView2<f64>, parity: Parity) -> ExtendedField {
    let (n1, n2) = quarter.dim();
    let n = n2 - 1;
    let s = parity.sign();
    let mut data = Array2::zeros((n1, 2 * n + 1));
    for i in 0..n1 {
        for j in 0..=n {
            let v = if j == 0 && parity == Parity::Odd { 0.0 } else { quarter[[i, j]] };
            data[[i, n + j]] = v;
            data[[i, n - j]] = s * v;
        }
    }
    ExtendedField { data, parity }
}

/// Friedrichs kernel `eta(s/eps)/eps`, `eta(s) ~ exp(1/(s^2-1))`, tabulated on
/// the grid and renormalised to unit discrete mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub epsilon: f64,
    pub h: f64,
    /// `w[k]` multiplies samples at offset `±k` (mass already includes the spacing).
    pub weights: Vec<f64>,
}

impl Mollifier {
    pub fn new(epsilon: f64, h: f64) -> Result<Self> {
        if !(epsilon >= 2.0 * h) {
            return Err(Error::KernelUnderresolved { epsilon, h });
        }
        let mut w = Vec::new();
        let mut k = 0usize;
        loop {
            let s = k as f64 * h / epsilon;
            if s >= 1.0 {
                break;
            }
            w.push((1.0 / (s * s - 1.0)).exp());
            k += 1;
        }
        let mass = w[0] + 2.0 * w[1..].iter().sum::<f64>();
        for v in &mut w {
            *v /= mass;
        }
        Ok(Self { epsilon, h, weights: w })
    }

    pub fn half_width(&self) -> usize {
        self.weights.len() - 1
    }

    /// `sum_k w_k - 1` over the full symmetric stencil.
    pub fn mass_defect(&self) -> f64 {
        (self.weights[0] + 2.0 * self.weights[1..].iter().sum::<f64>()) - 1.0
    }

    /// Second moment `sum_k w_k (k h)^2`.
    pub fn second_moment(&self) -> f64 {
        2.0 * self.weights.iter().enumerate().skip(1).map(|(k, w)| w * (k as f64 * self.h).powi(2)).sum::<f64>()
    }
}

/// Convolution along the second axis. Beyond either end the line is continued
/// by point reflection about the end value, which keeps affine data fixed.
/// Symmetric pairs are summed first so mirror-image lines give mirror-image results bit for bit.
pub fn mollify_lines(field: &ArrayView2<f64>, m: &Mollifier) -> Result<Array2<f64>> {
    let (n1, len) = field.dim();
    let kmax = m.half_width();
    if kmax >= len {
        return Err(Error::InvalidInput(format!("mollifier half width {kmax} exceeds line length {len}")));
    }
    let last = len - 1;
    let mut out = Array2::zeros((n1, len));
    for i in 0..n1 {
        let row = field.row(i);
        let at = |j: isize| -> f64 {
            if j < 0 {
                2.0 * row[0] - row[(-j) as usize]
            } else if j as usize > last {
                2.0 * row[last] - row[2 * last - j as usize]
            } else {
                row[j as usize]
            }
        };
        for j in 0..len {
            let jj = j as isize;
            let mut acc = m.weights[0] * row[j];
            for (k, w) in m.weights.iter().enumerate().skip(1) {
                let k = k as isize;
                acc += w * (at(jj - k) + at(jj + k));
            }
            out[[i, j]] = acc;
        }
    }
    Ok(out)
}

/// Mollifies an extended field along `z2`, preserving its parity.
pub fn mollify_z2(field: &ExtendedField, m: &Mollifier) -> Result<ExtendedField> {
    let mut data = mollify_lines(&field.data.view(), m)?;
    if field.parity == Parity::Odd {
        // the symmetric pair sums already give 0 here; pin it against -0.0
        let a = field.axis();
        data.column_mut(a).fill(0.0);
    }
    Ok(ExtendedField { data, parity: field.parity })
}

/// Quarter-plane ratio fields `r_ij / r11` and `b_i / b1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioFields {
    pub r01: Array2<f64>,
    pub r02: Array2<f64>,
    pub r12: Array2<f64>,
    pub r22: Array2<f64>,
    pub b2: Array2<f64>,
}

impl RatioFields {
    pub fn from_snapshot(c: &CoefficientSnapshot) -> Self {
        Self {
            r01: &c.r01 / &c.r11,
            r02: &c.r02 / &c.r11,
            r12: &c.r12 / &c.r11,
            r22: &c.r22 / &c.r11,
            b2: &c.b2 / &c.b1,
        }
    }

    /// `(name, field, parity)` in a fixed order.
    pub fn entries(&self) -> [(&'static str, &Array2<f64>, Parity); 5] {
        [
            ("r01", &self.r01, Parity::Even),
            ("r02", &self.r02, Parity::Odd),
            ("r12", &self.r12, Parity::Odd),
            ("r22", &self.r22, Parity::Even),
            ("b2", &self.b2, Parity::Odd),
        ]
    }
}

/// Extended and mollified ratio fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedRatios {
    pub r01: ExtendedField,
    pub r02: ExtendedField,
    pub r12: ExtendedField,
    pub r22: ExtendedField,
    pub b2: ExtendedField,
}

pub fn smooth_ratios(r: &RatioFields, m: &Mollifier) -> Result<SmoothedRatios> {
    let go = |f: &Array2<f64>, p: Parity| mollify_z2(&extend(&f.view(), p), m);
    Ok(SmoothedRatios {
        r01: go(&r.r01, Parity::Even)?,
        r02: go(&r.r02, Parity::Odd)?,
        r12: go(&r.r12, Parity::Odd)?,
        r22: go(&r.r22, Parity::Even)?,
        b2: go(&r.b2, Parity::Odd)?,
    })
}

/// Background ratios `rbar_ij / rbar11` used for the sup bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundRatios {
    pub r01: f64,
    pub r02: f64,
    pub r12: f64,
    pub r22: f64,
}

impl Default for BackgroundRatios {
    fn default() -> Self {
        Self { r01: 0.0, r02: 0.0, r12: 0.0, r22: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupBound {
    pub name: String,
    pub sup: f64,
    pub background: f64,
    /// `sup |r~ - rbar ratio|`.
    pub excess: f64,
    /// `excess / delta` (0 when `delta = 0`).
    pub fitted_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma32Report {
    pub epsilon: f64,
    pub h: f64,
    pub delta: f64,
    pub parity_residual: f64,
    pub sup_bounds: Vec<SupBound>,
    /// `|b~2(0,0)|`.
    pub corner_value: f64,
    /// Undivided centred first difference `|b~2(0,h) - b~2(0,-h)| / 2`.
    pub corner_first_difference: f64,
    /// The same divided by `h` (slope estimate).
    pub corner_slope: f64,
    /// `max |r~12 - b~2|` and `|r~01|` on `z1 = 0`.
    pub conormal_residual: f64,
    pub mass_defect: f64,
    pub constant_defect: f64,
    pub parity_pass: bool,
    pub corner_pass: bool,
    pub conormal_pass: bool,
    pub constants_pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma32Tolerances {
    pub corner: f64,
    pub quadrature: f64,
    pub constants: f64,
}

impl Default for Lemma32Tolerances {
    fn default() -> Self {
        Self { corner: 1e-8, quadrature: 1e-12, constants: 1e-12 }
    }
}

pub fn check_lemma32(
    ratios: &RatioFields,
    m: &Mollifier,
    delta: f64,
    background: BackgroundRatios,
    tol: Lemma32Tolerances,
) -> Result<Lemma32Report> {
    let s = smooth_ratios(ratios, m)?;
    let fields = [
        ("r01", &s.r01, background.r01),
        ("r02", &s.r02, background.r02),
        ("r12", &s.r12, background.r12),
        ("r22", &s.r22, background.r22),
        ("b2", &s.b2, 0.0),
    ];
    let parity_residual = fields.iter().map(|(_, f, _)| f.parity_residual()).fold(0.0, f64::max);
    let sup_bounds = fields
        .iter()
        .map(|(name, f, bg)| {
            let sup = f.data.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let excess = f.data.iter().fold(0.0_f64, |a, v| a.max((v - bg).abs()));
            SupBound {
                name: (*name).to_string(),
                sup,
                background: bg.abs(),
                excess,
                fitted_c: if delta > 0.0 { excess / delta } else { 0.0 },
            }
        })
        .collect();
    let a = s.b2.axis();
    let b = s.b2.data.row(0);
    let corner_value = b[a].abs();
    let corner_first_difference = 0.5 * (b[a + 1] - b[a - 1]).abs();
    let r12 = s.r12.data.row(0);
    let r01 = s.r01.data.row(0);
    let conormal_residual = (0..b.len()).map(|j| (r12[j] - b[j]).abs().max(r01[j].abs())).fold(0.0, f64::max);
    let ones = Array2::from_elem((2, 4 * m.half_width() + 3), 1.0);
    let constant_defect = mollify_lines(&ones.view(), m)?.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let mass_defect = m.mass_defect().abs();
    Ok(Lemma32Report {
        epsilon: m.epsilon,
        h: m.h,
        delta,
        parity_residual,
        sup_bounds,
        corner_value,
        corner_first_difference,
        corner_slope: corner_first_difference / m.h,
        conormal_residual,
        mass_defect,
        constant_defect,
        parity_pass: parity_residual == 0.0,
        corner_pass: corner_value <= tol.corner && corner_first_difference <= tol.corner,
        conormal_pass: conormal_residual <= tol.quadrature,
        constants_pass: constant_defect <= tol.constants && mass_defect <= tol.constants,
    })
}
