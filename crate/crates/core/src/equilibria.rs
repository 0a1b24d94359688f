//! Unstable spatially-uniform equilibria with closed-form velocity Fourier
//! transforms, and the perturbations that seed the instability.
//!
//! Velocity transforms use `f̂(m) = ∫ f(v) e^{-imv} dv` with no 2π factor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{DistributionState, PhaseSpaceGrid};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Normalization of the narrow bump `exp(-2 (v - c)^2)`: `√2 / (10 √π)`
/// carries one tenth of the total mass.
fn bump_norm() -> f64 {
    2.0_f64.sqrt() / (10.0 * PI.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EquilibriumSpec {
    /// `[α e^{-(v-μ)²/2} + (1-α) e^{-(v+μ)²/2}] / √(2π)`
    TwoStream { alpha: f64, mu: f64 },
    /// `0.9 N(v̄₁, 1) + 0.1 N(v̄₂, 1/4)`
    BumpOnTail { bulk_drift: f64, bump_drift: f64 },
}

impl EquilibriumSpec {
    pub const fn two_stream() -> Self {
        Self::TwoStream { alpha: 0.5, mu: 2.4 }
    }

    pub const fn bump_on_tail() -> Self {
        Self::BumpOnTail {
            bulk_drift: -3.0,
            bump_drift: 4.5,
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            Self::TwoStream { alpha, mu } => {
                let a = (-0.5 * (v - mu).powi(2)).exp();
                let b = (-0.5 * (v + mu).powi(2)).exp();
                (alpha * a + (1.0 - alpha) * b) * INV_SQRT_2PI
            }
            Self::BumpOnTail {
                bulk_drift,
                bump_drift,
            } => {
                0.9 * INV_SQRT_2PI * (-0.5 * (v - bulk_drift).powi(2)).exp()
                    + bump_norm() * (-2.0 * (v - bump_drift).powi(2)).exp()
            }
        }
    }

    /// Closed-form `∫ f_eq(v) e^{-imv} dv`.
    pub fn velocity_fourier(&self, m: f64) -> Complex64 {
        match *self {
            Self::TwoStream { alpha, mu } => {
                let phase = Complex64::from_polar(1.0, -mu * m);
                (alpha * phase + (1.0 - alpha) * phase.conj()) * (-0.5 * m * m).exp()
            }
            Self::BumpOnTail {
                bulk_drift,
                bump_drift,
            } => {
                0.9 * Complex64::from_polar((-0.5 * m * m).exp(), -m * bulk_drift)
                    + 0.1 * Complex64::from_polar((-0.125 * m * m).exp(), -m * bump_drift)
            }
        }
    }

    /// Upper bound on `|f̂_eq(m)|`, used to pick integration horizons.
    pub fn fourier_envelope(&self, m: f64) -> f64 {
        match *self {
            Self::TwoStream { .. } => (-0.5 * m * m).exp(),
            Self::BumpOnTail { .. } => 0.9 * (-0.5 * m * m).exp() + 0.1 * (-0.125 * m * m).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::TwoStream { alpha, mu } => {
                if !(0.0..=1.0).contains(&alpha) || !mu.is_finite() {
                    return Err(Error::Config(format!(
                        "two-stream needs alpha in [0,1] and finite mu, got alpha = {alpha}, mu = {mu}"
                    )));
                }
            }
            Self::BumpOnTail {
                bulk_drift,
                bump_drift,
            } => {
                if !bulk_drift.is_finite() || !bump_drift.is_finite() {
                    return Err(Error::Config("bump-on-tail drifts must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &PhaseSpaceGrid) -> Vec<f64> {
        (0..grid.mv).map(|j| self.eval(grid.v(j))).collect()
    }
}

/// Initial perturbation `ε cos(mode·k₀·x) g(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationSpec {
    /// `g = f_eq`, i.e. `(1 + ε cos) f_eq`.
    MultiplicativeCosine { epsilon: f64, mode: usize },
    /// `g(v) = √2/(10√π) e^{-2(v - center)²}`; `center` is the bump drift.
    AdditiveBumpCosine {
        epsilon: f64,
        mode: usize,
        center: f64,
    },
}

impl PerturbationSpec {
    pub fn epsilon(&self) -> f64 {
        match *self {
            Self::MultiplicativeCosine { epsilon, .. } | Self::AdditiveBumpCosine { epsilon, .. } => {
                epsilon
            }
        }
    }

    pub fn mode(&self) -> usize {
        match *self {
            Self::MultiplicativeCosine { mode, .. } | Self::AdditiveBumpCosine { mode, .. } => mode,
        }
    }

    pub fn with_epsilon(self, eps: f64) -> Self {
        match self {
            Self::MultiplicativeCosine { mode, .. } => Self::MultiplicativeCosine { epsilon: eps, mode },
            Self::AdditiveBumpCosine { mode, center, .. } => Self::AdditiveBumpCosine {
                epsilon: eps,
                mode,
                center,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon();
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {eps}")));
        }
        if self.mode() == 0 {
            return Err(Error::Config("perturbation mode must be >= 1".into()));
        }
        Ok(())
    }

    /// Velocity factor `g(v)` of the perturbation (without ε).
    pub fn velocity_profile(&self, spec: &EquilibriumSpec, v: f64) -> f64 {
        match *self {
            Self::MultiplicativeCosine { .. } => spec.eval(v),
            Self::AdditiveBumpCosine { center, .. } => bump_norm() * (-2.0 * (v - center).powi(2)).exp(),
        }
    }

    /// `ĝ(m) = ∫ g(v) e^{-imv} dv`.
    pub fn velocity_profile_fourier(&self, spec: &EquilibriumSpec, m: f64) -> Complex64 {
        match *self {
            Self::MultiplicativeCosine { .. } => spec.velocity_fourier(m),
            Self::AdditiveBumpCosine { center, .. } => {
                Complex64::from_polar(0.1 * (-0.125 * m * m).exp(), -m * center)
            }
        }
    }

    pub fn profile_envelope(&self, spec: &EquilibriumSpec, m: f64) -> f64 {
        match *self {
            Self::MultiplicativeCosine { .. } => spec.fourier_envelope(m),
            Self::AdditiveBumpCosine { .. } => 0.1 * (-0.125 * m * m).exp(),
        }
    }
}

/// Samples `f_eq(v) + ε cos(mode k₀ x) g(v)` on the grid.
pub fn build_initial_condition(
    spec: &EquilibriumSpec,
    pert: &PerturbationSpec,
    grid: &PhaseSpaceGrid,
) -> Result<DistributionState> {
    spec.validate()?;
    pert.validate()?;
    let mode = pert.mode();
    if 2 * mode >= grid.mx {
        return Err(Error::Aliasing { mode, mx: grid.mx });
    }
    let feq = spec.sample(grid);
    let profile: Vec<f64> = (0..grid.mv)
        .map(|j| pert.velocity_profile(spec, grid.v(j)))
        .collect();
    let eps = pert.epsilon();
    let kx = mode as f64 * grid.k0();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.mx {
        let c = if eps == 0.0 { 0.0 } else { eps * (kx * grid.x(i)).cos() };
        values.extend(feq.iter().zip(&profile).map(|(&fe, &g)| fe + c * g));
    }
    Ok(DistributionState { values, time: 0.0 })
}
