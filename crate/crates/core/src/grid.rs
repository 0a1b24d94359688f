//! Phase-space discretization and the state/trace records shared by the
//! solver, objectives and optimizers.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::control::ControlField;
use crate::equilibria::{EquilibriumSpec, PerturbationSpec};
use crate::error::{Error, Result};

/// Uniform grid on `[0, Lx) x [-Lv, Lv)`: periodic in x, zero outside the
/// velocity box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase")]
pub struct PhaseSpaceGrid {
    pub mx: usize,
    pub mv: usize,
    pub lx: f64,
    pub lv: f64,
}

impl PhaseSpaceGrid {
    pub const MIN_NODES: usize = 8;

    pub fn new(mx: usize, mv: usize, lx: f64, lv: f64) -> Result<Self> {
        if mx < Self::MIN_NODES || mv < Self::MIN_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {} nodes per axis, got Mx = {mx}, Mv = {mv}",
                Self::MIN_NODES
            )));
        }
        if !(lx.is_finite() && lx > 0.0 && lv.is_finite() && lv > 0.0) {
            return Err(Error::Config(format!(
                "box extents must be positive, got Lx = {lx}, Lv = {lv}"
            )));
        }
        Ok(Self { mx, mv, lx, lv })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.lx / self.mx as f64
    }

    #[inline]
    pub fn dv(&self) -> f64 {
        2.0 * self.lv / self.mv as f64
    }

    /// Fundamental wavenumber `2π / Lx`.
    #[inline]
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.lx
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    #[inline]
    pub fn v(&self, j: usize) -> f64 {
        -self.lv + j as f64 * self.dv()
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.mx).map(|i| self.x(i)).collect()
    }

    pub fn v_nodes(&self) -> Vec<f64> {
        (0..self.mv).map(|j| self.v(j)).collect()
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dv()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mx * self.mv
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Samples of f(t, x, v), stored x-major / v-minor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistributionState {
    pub values: Vec<f64>,
    pub time: f64,
}

impl DistributionState {
    pub fn zeros(grid: &PhaseSpaceGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: &PhaseSpaceGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.mx {
            let x = grid.x(i);
            for j in 0..grid.mv {
                values.push(f(x, grid.v(j)));
            }
        }
        Self { values, time: 0.0 }
    }

    #[inline]
    pub fn at(&self, grid: &PhaseSpaceGrid, i: usize, j: usize) -> f64 {
        self.values[i * grid.mv + j]
    }

    /// Velocity row for spatial index `i`.
    #[inline]
    pub fn column(&self, grid: &PhaseSpaceGrid, i: usize) -> &[f64] {
        &self.values[i * grid.mv..(i + 1) * grid.mv]
    }

    pub fn mass(&self, grid: &PhaseSpaceGrid) -> f64 {
        self.values.iter().sum::<f64>() * grid.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest value on the two boundary velocity rows relative to the
    /// interior maximum.
    pub fn boundary_ratio(&self, grid: &PhaseSpaceGrid) -> f64 {
        let mut edge = 0.0_f64;
        for i in 0..grid.mx {
            let col = self.column(grid, i);
            edge = edge.max(col[0].abs()).max(col[grid.mv - 1].abs());
        }
        let interior = self.max();
        if interior > 0.0 {
            edge / interior
        } else {
            0.0
        }
    }
}

/// Which per-step quantities a run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecordFlags {
    pub field_history: bool,
    pub kl_series: bool,
    pub l2_series: bool,
    /// Keep every intermediate state; memory heavy, meant for tests.
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub grid: PhaseSpaceGrid,
    pub dt: f64,
    pub n_steps: usize,
    pub equilibrium: EquilibriumSpec,
    pub perturbation: PerturbationSpec,
    pub control: ControlField,
    #[serde(default)]
    pub record: RecordFlags,
}

impl SimulationConfig {
    /// Builds a config running to `final_time`, which must be an integer
    /// multiple of `dt` (up to 1e-9 relative).
    pub fn new(
        grid: PhaseSpaceGrid,
        dt: f64,
        final_time: f64,
        equilibrium: EquilibriumSpec,
        perturbation: PerturbationSpec,
        control: ControlField,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if !(final_time.is_finite() && final_time >= 0.0) {
            return Err(Error::Config(format!("T must be non-negative, got {final_time}")));
        }
        let ratio = final_time / dt;
        let n_steps = ratio.round();
        if (ratio - n_steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "T = {final_time} is not an integer multiple of dt = {dt}"
            )));
        }
        Ok(Self {
            grid,
            dt,
            n_steps: n_steps as usize,
            equilibrium,
            perturbation,
            control,
            record: RecordFlags::default(),
        })
    }

    pub fn final_time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn with_record(mut self, record: RecordFlags) -> Self {
        self.record = record;
        self
    }

    pub fn with_control(mut self, control: ControlField) -> Self {
        self.control = control;
        self
    }
}

/// Everything a run produces that objectives and artifacts need.
#[derive(Debug, Clone, Default)]
pub struct SimulationTrace {
    /// `𝓔(tⁿ)` for n = 0..=n_steps.
    pub energy_series: Vec<f64>,
    /// Field used by each step (from the half-advected state), one row per step.
    pub field_history: Option<Vec<Vec<f64>>>,
    pub kl_series: Option<Vec<f64>>,
    pub l2_series: Option<Vec<f64>>,
    pub snapshots: Option<Vec<DistributionState>>,
    pub final_state: DistributionState,
    /// Steps where a characteristic left the velocity box in one step.
    pub blowup_warnings: usize,
}

impl SimulationTrace {
    pub fn final_energy(&self) -> f64 {
        self.energy_series.last().copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_boxes() {
        let ts = PhaseSpaceGrid::new(256, 256, 10.0 * PI, 6.0).unwrap();
        assert!((ts.k0() - 0.2).abs() < 1e-15);
        let bot = PhaseSpaceGrid::new(256, 256, 20.0 * PI, 9.0).unwrap();
        assert!((bot.k0() - 0.1).abs() < 1e-15);
        assert!((bot.k0() * bot.lx - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn small_grid_spacing() {
        let g = PhaseSpaceGrid::new(8, 8, 2.0 * PI, 1.0).unwrap();
        assert!((g.dx() - PI / 4.0).abs() < 1e-15);
        assert_eq!(g.dv(), 0.25);
        assert_eq!(g.v(0), -1.0);
        assert_eq!(g.v(7), 0.75);
        let total: f64 = (0..g.mx).map(|_| g.dx()).sum();
        assert!((total - g.lx).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(PhaseSpaceGrid::new(4, 256, 1.0, 1.0).is_err());
        assert!(PhaseSpaceGrid::new(16, 16, 0.0, 1.0).is_err());
        assert!(PhaseSpaceGrid::new(16, 16, 1.0, -2.0).is_err());
        assert!(PhaseSpaceGrid::new(16, 16, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn config_requires_integer_step_count() {
        use crate::preset::Problem;
        let p = Problem::TwoStream;
        let (eq, pert, grid) = (p.equilibrium(), p.perturbation(1e-3), p.grid());
        let c = SimulationConfig::new(grid, 0.1, 30.0, eq, pert, ControlField::zero(0, grid.k0()))
            .unwrap();
        assert_eq!(c.n_steps, 300);
        assert!(SimulationConfig::new(grid, 0.1, 30.05, eq, pert, ControlField::zero(0, 0.2)).is_err());
        assert!(SimulationConfig::new(grid, 0.0, 30.0, eq, pert, ControlField::zero(0, 0.2)).is_err());
    }
}
