//! Suppression of kinetic instabilities in the 1D-1V Vlasov-Poisson system
//! with a static external electric field.
//!
//! The crate provides a semi-Lagrangian solver, closed-form unstable
//! equilibria, a dispersion-relation analysis that synthesizes a control
//! field, PDE-constrained gradient descent over the field's Fourier
//! coefficients, and parameter sweeps of the objective landscape.

pub mod control;
pub mod dispersion;
pub mod equilibria;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod landscape;
pub mod objectives;
pub mod optimize;
pub mod preset;
pub mod solver;

pub use control::{ControlField, ParameterMask};
pub use dispersion::{DispersionRoot, DispersionSettings, LaplaceHorizon};
pub use equilibria::{build_initial_condition, EquilibriumSpec, PerturbationSpec};
pub use error::{Error, Result};
pub use grid::{DistributionState, PhaseSpaceGrid, RecordFlags, SimulationConfig, SimulationTrace};
pub use objectives::ObjectiveKind;
pub use optimize::{Method, OptimizationHistory, OptimizerConfig};
pub use preset::{InitBox, Problem};
