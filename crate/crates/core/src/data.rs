//! Compactly supported initial data built from `(1 - r^2/R^2)^7` bumps.

use serde::{Deserialize, Serialize};

use crate::coefficients::boundary_coeffs;
use crate::error::Result;
use crate::geometry::{CornerDomain, Point};

/// `amplitude * (1 - |z - center|^2 / radius^2)^7` inside the disc, 0 outside (C^6).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn value(&self, z: Point) -> f64 {
        let q = self.q(z);
        if q <= 0.0 {
            0.0
        } else {
            self.amplitude * q.powi(7)
        }
    }

    pub fn gradient(&self, z: Point) -> [f64; 2] {
        let q = self.q(z);
        if q <= 0.0 {
            return [0.0; 2];
        }
        let f = -14.0 * self.amplitude * q.powi(6) / (self.radius * self.radius);
        [f * (z[0] - self.center[0]), f * (z[1] - self.center[1])]
    }

    fn q(&self, z: Point) -> f64 {
        let dx = z[0] - self.center[0];
        let dy = z[1] - self.center[1];
        1.0 - (dx * dx + dy * dy) / (self.radius * self.radius)
    }

    /// Largest coordinate reached by the support.
    pub fn reach(&self) -> f64 {
        self.center[0].abs().max(self.center[1].abs()) + self.radius
    }
}

/// A sum of bumps, optionally averaged over the four reflections `(±z1, ±z2)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BumpSum {
    pub bumps: Vec<Bump>,
    #[serde(default)]
    pub symmetrize: bool,
}

impl BumpSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.amplitude == 0.0)
    }

    pub fn value(&self, z: Point) -> f64 {
        let raw = |p: Point| self.bumps.iter().map(|b| b.value(p)).sum::<f64>();
        if !self.symmetrize {
            return raw(z);
        }
        let (a, b) = (z[0], z[1]);
        // pairwise sums make the result bitwise even in each coordinate
        0.25 * ((raw([a, b]) + raw([-a, b])) + (raw([a, -b]) + raw([-a, -b])))
    }

    pub fn gradient(&self, z: Point) -> [f64; 2] {
        let raw = |p: Point| {
            self.bumps.iter().fold([0.0; 2], |acc, b| {
                let g = b.gradient(p);
                [acc[0] + g[0], acc[1] + g[1]]
            })
        };
        if !self.symmetrize {
            return raw(z);
        }
        // pair mirror images so the normal derivative on each axis cancels exactly
        let (a, b) = (z[0], z[1]);
        let g0 = (raw([a, b])[0] - raw([-a, b])[0]) + (raw([a, -b])[0] - raw([-a, -b])[0]);
        let g1 = (raw([a, b])[1] - raw([a, -b])[1]) + (raw([-a, b])[1] - raw([-a, -b])[1]);
        [0.25 * g0, 0.25 * g1]
    }

    pub fn reach(&self) -> f64 {
        self.bumps.iter().map(Bump::reach).fold(0.0, f64::max)
    }
}

/// Removes the co-normal defect of an even datum on perturbed walls:
/// `u - z1 kappa(z1) (bbar2/bbar1)(z2) d2 u(0, z2)` with `kappa` a cutoff of
/// width `radius` equal to 1 with zero slope at `z1 = 0`.
#[derive(Debug, Clone)]
pub struct ConormalProjection<'a> {
    pub dom: &'a CornerDomain,
    pub radius: f64,
}

impl ConormalProjection<'_> {
    pub fn kappa(&self, z1: f64) -> f64 {
        let q = 1.0 - (z1 / self.radius).powi(2);
        if q <= 0.0 {
            0.0
        } else {
            q.powi(7)
        }
    }

    pub fn ratio(&self, z2: f64) -> Result<f64> {
        if self.dom.is_flat() {
            return Ok(0.0);
        }
        let (b1, b2) = boundary_coeffs(self.dom, z2)?;
        Ok(b2 / b1)
    }

    /// Projected value of `data` at `z`.
    pub fn apply(&self, data: &BumpSum, z: Point) -> Result<f64> {
        let u = data.value(z);
        let k = self.kappa(z[0]);
        if k == 0.0 || self.dom.is_flat() {
            return Ok(u);
        }
        let slope = data.gradient([0.0, z[1]])[1];
        Ok(u - z[0] * k * self.ratio(z[1])? * slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_gradient_matches_differences() {
        let b = Bump { center: [0.2, -0.1], radius: 0.5, amplitude: 0.7 };
        let z = [0.35, 0.05];
        let h = 1e-6;
        let g = b.gradient(z);
        let fd0 = (b.value([z[0] + h, z[1]]) - b.value([z[0] - h, z[1]])) / (2.0 * h);
        let fd1 = (b.value([z[0], z[1] + h]) - b.value([z[0], z[1] - h])) / (2.0 * h);
        assert!((g[0] - fd0).abs() < 1e-8 && (g[1] - fd1).abs() < 1e-8);
    }

    #[test]
    fn symmetrized_sum_is_even() {
        let s = BumpSum { bumps: vec![Bump { center: [0.1, 0.2], radius: 0.4, amplitude: 1.0 }], symmetrize: true };
        let z = [0.13, 0.21];
        assert_eq!(s.value(z), s.value([-z[0], z[1]]));
        assert_eq!(s.value(z), s.value([z[0], -z[1]]));
        assert_eq!(s.gradient([0.2, 0.0])[1], 0.0);
        assert_eq!(s.gradient([0.0, 0.2])[0], 0.0);
    }
}
