//! Named problem setups: the two-stream and bump-on-tail benchmarks with
//! their grids, horizons and optimizer defaults.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::control::{ControlField, ParameterMask};
use crate::equilibria::{EquilibriumSpec, PerturbationSpec};
use crate::error::{Error, Result};
use crate::grid::{PhaseSpaceGrid, SimulationConfig};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_RESOLUTION: usize = 256;
pub const DEFAULT_DT: f64 = 0.1;
/// Order of the over-parametrized control basis.
pub const OVER_PARAMETRIZED_N: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    TwoStream,
    BumpOnTail,
}

impl Problem {
    pub const ALL: [Problem; 2] = [Problem::TwoStream, Problem::BumpOnTail];

    pub fn name(self) -> &'static str {
        match self {
            Self::TwoStream => "two-stream",
            Self::BumpOnTail => "bump-on-tail",
        }
    }

    pub fn equilibrium(self) -> EquilibriumSpec {
        match self {
            Self::TwoStream => EquilibriumSpec::two_stream(),
            Self::BumpOnTail => EquilibriumSpec::bump_on_tail(),
        }
    }

    pub fn perturbation(self, epsilon: f64) -> PerturbationSpec {
        match self {
            Self::TwoStream => PerturbationSpec::MultiplicativeCosine { epsilon, mode: 1 },
            Self::BumpOnTail => PerturbationSpec::AdditiveBumpCosine {
                epsilon,
                mode: 1,
                center: 4.5,
            },
        }
    }

    pub fn box_size(self) -> (f64, f64) {
        match self {
            Self::TwoStream => (10.0 * PI, 6.0),
            Self::BumpOnTail => (20.0 * PI, 9.0),
        }
    }

    pub fn grid(self) -> PhaseSpaceGrid {
        self.grid_with(DEFAULT_RESOLUTION, DEFAULT_RESOLUTION)
            .expect("preset grid is valid")
    }

    pub fn grid_with(self, mx: usize, mv: usize) -> Result<PhaseSpaceGrid> {
        let (lx, lv) = self.box_size();
        PhaseSpaceGrid::new(mx, mv, lx, lv)
    }

    pub fn final_time(self) -> f64 {
        match self {
            Self::TwoStream => 30.0,
            Self::BumpOnTail => 40.0,
        }
    }

    /// Window where the uncontrolled log-energy grows linearly.
    pub fn growth_window(self) -> (f64, f64) {
        match self {
            Self::TwoStream => (10.0, 25.0),
            Self::BumpOnTail => (15.0, 35.0),
        }
    }

    pub fn gd_stepsize(self) -> f64 {
        match self {
            Self::TwoStream => 1e-8,
            Self::BumpOnTail => 1e-9,
        }
    }

    /// Control order used by the under-parametrized experiments.
    pub fn under_order(self) -> usize {
        match self {
            Self::TwoStream => 2,
            Self::BumpOnTail => 1,
        }
    }

    /// TS: only `b₁, b₂` free; BoT: `a₁, b₁` free.
    pub fn under_mask(self) -> ParameterMask {
        match self {
            Self::TwoStream => ParameterMask::new(2, vec![2, 3]).expect("valid mask"),
            Self::BumpOnTail => ParameterMask::all(1),
        }
    }

    pub fn over_mask(self) -> ParameterMask {
        ParameterMask::all(OVER_PARAMETRIZED_N)
    }

    pub fn init_box(self, kind: InitBox) -> (f64, f64) {
        match (kind, self) {
            (InitBox::Far, _) => (-1.0, 1.0),
            (InitBox::Mid, _) => (-0.05, 0.05),
            (InitBox::Near, Self::TwoStream) => (-0.003, 0.001),
            (InitBox::Near, Self::BumpOnTail) => (-0.001, 0.003),
        }
    }

    /// Default uncontrolled configuration at the preset resolution.
    pub fn config(self) -> SimulationConfig {
        self.config_with(self.grid(), DEFAULT_DT, self.final_time(), DEFAULT_EPSILON)
            .expect("preset config is valid")
    }

    pub fn config_with(
        self,
        grid: PhaseSpaceGrid,
        dt: f64,
        final_time: f64,
        epsilon: f64,
    ) -> Result<SimulationConfig> {
        SimulationConfig::new(
            grid,
            dt,
            final_time,
            self.equilibrium(),
            self.perturbation(epsilon),
            ControlField::zero(0, grid.k0()),
        )
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-stream" | "ts" => Ok(Self::TwoStream),
            "bump-on-tail" | "bot" => Ok(Self::BumpOnTail),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected two-stream or bump-on-tail)"
            ))),
        }
    }
}

/// Initialization boxes for the optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitBox {
    Far,
    Mid,
    Near,
}

impl FromStr for InitBox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "far" => Ok(Self::Far),
            "mid" => Ok(Self::Mid),
            "near" => Ok(Self::Near),
            other => Err(Error::Config(format!("unknown init box '{other}'"))),
        }
    }
}
