//! Wall perturbation profiles `W(s) = A s^4 p(s) chi(|s|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest derivative order the profile supports exactly.
pub const MAX_ORDER: usize = 6;

/// Degree-13 smoothstep: `S(t) = t^7 * sum_k C(6+k,k) C(13,6-k) (-t)^k`.
/// Its first six derivatives vanish at both t = 0 and t = 1.
fn smoothstep_coeffs() -> [f64; 14] {
    let mut c = [0.0; 14];
    for k in 0..=6usize {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c[7 + k] = sign * binom(6 + k, k) * binom(13, 6 - k);
    }
    c
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn derive(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &v)| k as f64 * v).collect()
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// Serialized form: `{epsilon, poly_coeffs, cutoff_radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub epsilon: f64,
    #[serde(default = "default_poly")]
    pub poly_coeffs: Vec<f64>,
    #[serde(default = "default_radius")]
    pub cutoff_radius: f64,
}

fn default_poly() -> Vec<f64> {
    vec![1.0]
}

fn default_radius() -> f64 {
    1.0
}

impl WallSpec {
    pub fn flat() -> Self {
        Self { epsilon: 0.0, poly_coeffs: vec![], cutoff_radius: 1.0 }
    }
}

/// A compactly supported wall perturbation with exact derivatives up to order 6.
///
/// `epsilon` is the amplitude multiplying `s^4 p(s) chi(|s|)`; the actual
/// `W^{6,inf}` size is reported by [`WallProfile::w6_norm`].
#[derive(Debug, Clone, PartialEq)]
pub struct WallProfile {
    epsilon: f64,
    poly: Vec<f64>,
    cutoff_radius: f64,
    // derivatives of q(s) = s^4 p(s), orders 0..=6
    q_derivs: Vec<Vec<f64>>,
    // derivatives of the smoothstep, orders 0..=6
    step_derivs: Vec<Vec<f64>>,
}

impl WallProfile {
    pub fn new(epsilon: f64, poly_coeffs: &[f64], cutoff_radius: f64) -> Result<Self> {
        if !(cutoff_radius > 0.0) || !cutoff_radius.is_finite() {
            return Err(Error::InvalidInput(format!("cutoff_radius must be positive, got {cutoff_radius}")));
        }
        if !epsilon.is_finite() || poly_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("wall coefficients must be finite".into()));
        }
        let mut q = vec![0.0; 4];
        q.extend_from_slice(poly_coeffs);
        let mut q_derivs = vec![q];
        let mut step_derivs = vec![smoothstep_coeffs().to_vec()];
        for k in 0..MAX_ORDER {
            q_derivs.push(derive(&q_derivs[k]));
            step_derivs.push(derive(&step_derivs[k]));
        }
        Ok(Self { epsilon, poly: poly_coeffs.to_vec(), cutoff_radius, q_derivs, step_derivs })
    }

    pub fn flat() -> Self {
        Self::new(0.0, &[], 1.0).expect("flat profile is valid")
    }

    pub fn from_spec(spec: &WallSpec) -> Result<Self> {
        Self::new(spec.epsilon, &spec.poly_coeffs, spec.cutoff_radius)
    }

    pub fn spec(&self) -> WallSpec {
        WallSpec { epsilon: self.epsilon, poly_coeffs: self.poly.clone(), cutoff_radius: self.cutoff_radius }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    pub fn is_flat(&self) -> bool {
        self.epsilon == 0.0 || self.poly.iter().all(|&c| c == 0.0)
    }

    /// `chi^(m)(r)` for r >= 0; equal to 1 on [0, R/2] and 0 beyond R.
    fn cutoff(&self, r: f64, m: usize) -> f64 {
        let a = 0.5 * self.cutoff_radius;
        if r <= a {
            return if m == 0 { 1.0 } else { 0.0 };
        }
        if r >= self.cutoff_radius {
            return 0.0;
        }
        // 1 - S(t) = S(1 - t); evaluating the mirrored form keeps the
        // outer contact free of cancellation.
        let u = (self.cutoff_radius - r) / a;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sign * horner(&self.step_derivs[m], u) / a.powi(m as i32)
    }

    /// `W^(order)(s)`, computed by the Leibniz rule on polynomial times cutoff.
    pub fn eval(&self, s: f64, order: usize) -> Result<f64> {
        if order > MAX_ORDER {
            return Err(Error::OrderOutOfRange { order, max: MAX_ORDER });
        }
        Ok(self.d(s, order))
    }

    /// Unchecked evaluation for internal hot loops (`order <= 6`).
    pub(crate) fn d(&self, s: f64, order: usize) -> f64 {
        if self.epsilon == 0.0 {
            return 0.0;
        }
        let r = s.abs();
        if r >= self.cutoff_radius {
            return 0.0;
        }
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        let mut acc = 0.0;
        for k in 0..=order {
            let m = order - k;
            let g = self.cutoff(r, m);
            if g == 0.0 {
                continue;
            }
            let g = if m % 2 == 1 { sign * g } else { g };
            acc += binom(order, k) * horner(&self.q_derivs[k], s) * g;
        }
        self.epsilon * acc
    }

    /// Sampled `max_{k<=6} sup_s |W^(k)(s)|` over the support.
    pub fn w6_norm(&self) -> f64 {
        let n = 4000;
        let mut best: f64 = 0.0;
        for i in 0..=n {
            let s = self.cutoff_radius * i as f64 / n as f64;
            for k in 0..=MAX_ORDER {
                best = best.max(self.d(s, k).abs()).max(self.d(-s, k).abs());
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints() {
        let c = smoothstep_coeffs();
        assert!(horner(&c, 0.0).abs() < 1e-15);
        assert!((horner(&c, 1.0) - 1.0).abs() < 1e-12);
        let mut d = c.to_vec();
        for _ in 1..=6 {
            d = derive(&d);
            assert!(horner(&d, 1.0).abs() < 1e-9);
            assert!(horner(&d, 0.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_profile_vanishes() {
        let w = WallProfile::flat();
        for k in 0..=6 {
            assert_eq!(w.eval(0.37, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn quartic_corner_jet_vanishes() {
        let w = WallProfile::new(1e-3, &[1.0], 1.0).unwrap();
        for k in 0..4 {
            assert_eq!(w.eval(0.0, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn quartic_slope_on_plateau() {
        let eps = 1e-3;
        let w = WallProfile::new(eps, &[1.0], 1.0).unwrap();
        let v = w.eval(0.1, 1).unwrap();
        assert!((v - 4.0 * eps * 1e-3).abs() < 1e-18);
    }

    #[test]
    fn order_seven_rejected() {
        let w = WallProfile::flat();
        assert!(matches!(w.eval(0.0, 7), Err(Error::OrderOutOfRange { order: 7, .. })));
    }

    #[test]
    fn derivatives_match_differences() {
        let w = WallProfile::new(2e-3, &[1.0, -0.5, 0.3], 1.2).unwrap();
        let h = 1e-4;
        for &s in &[-0.9, -0.45, 0.2, 0.7, 0.95] {
            for k in 0..6 {
                let fd = (w.d(s + h, k) - w.d(s - h, k)) / (2.0 * h);
                let exact = w.d(s, k + 1);
                let scale = 1.0 + exact.abs();
                assert!((fd - exact).abs() < 1e-5 * scale, "s={s} k={k} fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn vanishes_beyond_cutoff() {
        let w = WallProfile::new(1e-3, &[1.0, 2.0], 0.8).unwrap();
        for k in 0..=6 {
            assert_eq!(w.d(0.8, k), 0.0);
            assert_eq!(w.d(-1.3, k), 0.0);
            // C^6 contact: W^(k) ~ d^(7-k) near the edge
            let near = w.d(0.8 - 1e-6, k).abs();
            let far = w.d(0.8 - 1e-4, k).abs();
            assert!(near <= 2e-2 * far, "k={k} near={near} far={far}");
        }
    }
}
