//! Scenario description: walls, gas, initial data, grid and iteration settings.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::coefficients::GasState;
use crate::data::{BumpSum, ConormalProjection};
use crate::error::{Error, Result};
use crate::geometry::{CornerDomain, WallProfile, WallSpec};
use crate::grid::{Grid, Layout};
use crate::nonlinear::NonlinearOptions;
use crate::setup::FlowSetup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    CheckIdentities,
    Linear,
    #[default]
    Nonlinear,
    ConvergenceStudy,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "check-identities" => Ok(Mode::CheckIdentities),
            "linear" => Ok(Mode::Linear),
            "nonlinear" => Ok(Mode::Nonlinear),
            "convergence-study" => Ok(Mode::ConvergenceStudy),
            _ => Err(Error::InvalidInput(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Walls {
    pub wall1: WallSpec,
    pub wall2: WallSpec,
}

impl Default for Walls {
    fn default() -> Self {
        Self { wall1: WallSpec::flat(), wall2: WallSpec::flat() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSpec {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub b0: f64,
}

fn default_gamma() -> f64 {
    1.4
}

impl Default for GasSpec {
    fn default() -> Self {
        Self { gamma: default_gamma(), b0: 0.0 }
    }
}

/// Initial potential `phi0` and time derivative `phi1` as bump sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default)]
    pub bumps: Vec<crate::data::Bump>,
    #[serde(default)]
    pub velocity_bumps: Vec<crate::data::Bump>,
    #[serde(default = "yes")]
    pub symmetrize: bool,
    /// Width of the co-normal correction applied on perturbed walls.
    #[serde(default = "default_projection")]
    pub projection_radius: f64,
}

fn yes() -> bool {
    true
}

fn default_projection() -> f64 {
    0.5
}

impl Default for DataSpec {
    fn default() -> Self {
        Self { bumps: vec![], velocity_bumps: vec![], symmetrize: true, projection_radius: default_projection() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub h: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_final: f64,
    #[serde(default = "default_etas")]
    pub eta: Vec<f64>,
    /// Box size; by default `reach + c T + 10 h`, rounded up to a multiple of `h`.
    #[serde(default)]
    pub extent: Option<f64>,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_etas() -> Vec<f64> {
    vec![4.0, 8.0, 16.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationSpec {
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_tol")]
    pub tol_h1: f64,
}

fn default_m_max() -> usize {
    30
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for IterationSpec {
    fn default() -> Self {
        Self { m_max: default_m_max(), tol_h1: default_tol() }
    }
}

/// Admissible sizes for data amplitudes and wall amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    #[serde(default = "default_envelope")]
    pub max_amplitude: f64,
    #[serde(default = "default_envelope")]
    pub max_wall_epsilon: f64,
}

fn default_envelope() -> f64 {
    1e-2
}

impl Default for Envelope {
    fn default() -> Self {
        Self { max_amplitude: default_envelope(), max_wall_epsilon: default_envelope() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub walls: Walls,
    #[serde(default)]
    pub gas: GasSpec,
    #[serde(default)]
    pub data: DataSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub iteration: IterationSpec,
    #[serde(default)]
    pub envelope: Envelope,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let env = &self.envelope;
        for (name, w) in [("wall1", &self.walls.wall1), ("wall2", &self.walls.wall2)] {
            if w.epsilon.abs() > env.max_wall_epsilon {
                return Err(Error::InvalidInput(format!(
                    "walls.{name}.epsilon = {} exceeds the envelope {}",
                    w.epsilon, env.max_wall_epsilon
                )));
            }
        }
        for b in self.data.bumps.iter().chain(&self.data.velocity_bumps) {
            if b.amplitude.abs() > env.max_amplitude {
                return Err(Error::InvalidInput(format!(
                    "bump amplitude {} exceeds the envelope {}",
                    b.amplitude, env.max_amplitude
                )));
            }
            if !(b.radius > 0.0) || b.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!("bump at {:?} needs a positive radius", b.center)));
            }
        }
        let g = &self.grid;
        if !(g.h > 0.0) || !(g.t_final > 0.0) || !(g.cfl > 0.0) {
            return Err(Error::InvalidInput("grid.h, grid.t_final and grid.cfl must be positive".into()));
        }
        if g.eta.is_empty() || g.eta.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidInput("grid.eta must be a non-empty list of positive weights".into()));
        }
        if let Some(z) = g.extent {
            if self.reach() >= z {
                return Err(Error::InvalidInput(format!("bump support reaches {} beyond grid.extent {z}", self.reach())));
            }
        }
        self.gas_state()?;
        self.domain()?;
        Ok(())
    }

    pub fn domain(&self) -> Result<CornerDomain> {
        Ok(CornerDomain::new(WallProfile::from_spec(&self.walls.wall1)?, WallProfile::from_spec(&self.walls.wall2)?))
    }

    pub fn gas_state(&self) -> Result<GasState> {
        GasState::new(self.gas.gamma, self.gas.b0)
    }

    fn data(&self, bumps: &[crate::data::Bump]) -> BumpSum {
        BumpSum { bumps: bumps.to_vec(), symmetrize: self.data.symmetrize }
    }

    pub fn reach(&self) -> f64 {
        self.data(&self.data.bumps).reach().max(self.data(&self.data.velocity_bumps).reach())
    }

    /// Grid halved `refine` times, weight `eta`.
    pub fn grid(&self, refine: u32, eta: f64) -> Result<Grid> {
        let gs = &self.grid;
        let c = self.gas_state()?.c0sq().sqrt();
        let z = gs.extent.unwrap_or(self.reach() + c * gs.t_final + 10.0 * gs.h);
        let n0 = (z / gs.h - 1e-9).ceil().max(4.0) as usize;
        let extent = n0 as f64 * gs.h;
        let n = n0 << refine;
        Ok(Grid::with_cfl(extent, n, gs.t_final, gs.cfl, c, Layout::Quarter)?.with_eta(eta))
    }

    pub fn setup(&self, refine: u32, eta: f64) -> Result<FlowSetup> {
        FlowSetup::new(self.domain()?, self.gas_state()?, self.grid(refine, eta)?)
    }

    /// `(phi0, phi1)` on the setup grid, with the co-normal correction on perturbed walls.
    pub fn initial_data(&self, setup: &FlowSetup) -> Result<(Array2<f64>, Array2<f64>)> {
        let proj = ConormalProjection { dom: &setup.domain, radius: self.data.projection_radius };
        let g = &setup.grid;
        let sample = |d: &BumpSum| -> Result<Array2<f64>> {
            if d.is_zero() {
                return Ok(g.zeros2());
            }
            setup.par_field(|i, j| proj.apply(d, [g.z1(i), g.z2(j)]))
        };
        Ok((sample(&self.data(&self.data.bumps))?, sample(&self.data(&self.data.velocity_bumps))?))
    }

    pub fn nonlinear_options(&self) -> NonlinearOptions {
        NonlinearOptions { m_max: self.iteration.m_max, tol_h1: self.iteration.tol_h1, ..NonlinearOptions::default() }
    }

    /// Flat walls, one symmetrised bump of amplitude `amp`.
    pub fn bump(amp: f64, wall_epsilon: f64) -> Self {
        let wall = WallSpec { epsilon: wall_epsilon, poly_coeffs: vec![1.0], cutoff_radius: 1.0 };
        Self {
            mode: Mode::Nonlinear,
            walls: Walls { wall1: wall.clone(), wall2: wall },
            gas: GasSpec::default(),
            data: DataSpec {
                bumps: vec![crate::data::Bump { center: [0.3, 0.2], radius: 0.5, amplitude: amp }],
                ..DataSpec::default()
            },
            grid: GridSpec { h: 1.0 / 24.0, cfl: 0.5, t_final: 0.4, eta: default_etas(), extent: None },
            iteration: IterationSpec::default(),
            envelope: Envelope::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_contains_signal_cone() {
        let s = Scenario::bump(1e-3, 0.0);
        let g = s.grid(0, 4.0).unwrap();
        assert!(g.extent >= s.reach() + s.grid.t_final + 10.0 * s.grid.h - 1e-12);
        assert!((g.h - s.grid.h).abs() < 1e-15);
        assert_eq!(s.grid(1, 4.0).unwrap().n, 2 * g.n);
    }

    #[test]
    fn envelope_violations_are_rejected() {
        let mut s = Scenario::bump(0.5, 0.0);
        assert!(s.validate().is_err());
        s = Scenario::bump(1e-3, 0.2);
        assert!(s.validate().is_err());
        assert!(Scenario::bump(1e-3, 1e-3).validate().is_ok());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ["check-identities", "linear", "nonlinear", "convergence-study"] {
            let mode: Mode = m.parse().unwrap();
            assert_eq!(serde_json::to_string(&mode).unwrap(), format!("\"{m}\""));
        }
        assert!("other".parse::<Mode>().is_err());
    }
}
