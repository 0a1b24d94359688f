//! Linear stability analysis of the perturbed equilibrium and the static
//! control field that cancels the fastest-growing mode.
//!
//! For a spatial mode with wavenumber `k`, the linearized problem gives the
//! dispersion function
//!
//! ```text
//! D(s) = 1 + ∫₀^τ e^{-st} t f̂_eq(k t) dt
//! ```
//!
//! and the free-streaming source `L[Ŝ](s) = c ∫₀^τ e^{-st} ĝ(k t) dt` with
//! `c = ε/2` for a cosine perturbation. A static field `Ĥ(k)` adds
//! `-ik Ĥ(k)/s` to the source, so choosing `Ĥ = -s₀ L[Ŝ](s₀) / (ik)` removes
//! the residue at the fastest-growing root `s₀`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::control::ControlField;
use crate::equilibria::{EquilibriumSpec, PerturbationSpec};
use crate::error::{Error, Result};
use crate::grid::PhaseSpaceGrid;

/// Upper limit of the Laplace integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "t_max")]
pub enum LaplaceHorizon {
    /// Integrate on `[0, τ]` only.
    Truncated(f64),
    /// Integrate until `t·|envelope(k t)|·e^{-ℜ(s) t}` drops below 1e-16.
    Converged,
}

impl Default for LaplaceHorizon {
    /// The short horizon reproduces the published reference roots and
    /// control amplitudes; see the README for the comparison with
    /// [`LaplaceHorizon::Converged`].
    fn default() -> Self {
        Self::Truncated(10.0)
    }
}

const DECAY_BOUND: f64 = 1e-16;
const MAX_HORIZON: f64 = 1e4;

impl LaplaceHorizon {
    fn resolve(self, s: Complex64, weight: impl Fn(f64) -> f64) -> f64 {
        match self {
            Self::Truncated(t) => t,
            Self::Converged => {
                let mut t = 1.0;
                while t < MAX_HORIZON && weight(t) * (-s.re * t).exp() >= DECAY_BOUND {
                    t += 1.0;
                }
                t
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSettings {
    pub horizon: LaplaceHorizon,
    /// Scan rectangle `ℜ(s) ∈ (0, re_max]`, `ℑ(s) ∈ [-im_max, im_max]`.
    pub re_max: f64,
    pub im_max: f64,
    pub scan_points: usize,
    /// Largest `|D(s)|` accepted as a root.
    pub threshold: f64,
    pub quad_tol: f64,
}

impl Default for DispersionSettings {
    fn default() -> Self {
        Self {
            horizon: LaplaceHorizon::default(),
            re_max: 1.0,
            im_max: 1.0,
            scan_points: 101,
            threshold: 1e-2,
            quad_tol: 1e-10,
        }
    }
}

impl DispersionSettings {
    pub fn with_horizon(mut self, horizon: LaplaceHorizon) -> Self {
        self.horizon = horizon;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RootRepr", into = "RootRepr")]
pub struct DispersionRoot {
    pub mode: i32,
    pub s0: Complex64,
    pub residual: f64,
}

#[derive(Serialize, Deserialize)]
struct RootRepr {
    mode: i32,
    re: f64,
    im: f64,
    residual: f64,
}

impl From<RootRepr> for DispersionRoot {
    fn from(r: RootRepr) -> Self {
        Self {
            mode: r.mode,
            s0: Complex64::new(r.re, r.im),
            residual: r.residual,
        }
    }
}

impl From<DispersionRoot> for RootRepr {
    fn from(r: DispersionRoot) -> Self {
        Self {
            mode: r.mode,
            re: r.s0.re,
            im: r.s0.im,
            residual: r.residual,
        }
    }
}

// ---------------------------------------------------------------------------
// Quadrature

const GL_ORDER: usize = 10;

fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

fn gl_panel(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    gauss_legendre()
        .iter()
        .map(|&(x, w)| f(mid + half * x) * w)
        .sum::<Complex64>()
        * half
}

fn adaptive(f: &impl Fn(f64) -> Complex64, a: f64, b: f64, whole: Complex64, tol: f64, depth: u32) -> Complex64 {
    let m = 0.5 * (a + b);
    let left = gl_panel(f, a, m);
    let right = gl_panel(f, m, b);
    let split = left + right;
    if depth == 0 || (split - whole).norm() <= tol {
        return split;
    }
    adaptive(f, a, m, left, 0.5 * tol, depth - 1) + adaptive(f, m, b, right, 0.5 * tol, depth - 1)
}

/// `∫ₐᵇ f` by adaptive Gauss-Legendre on unit-width starting panels.
pub fn integrate(f: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let panels = (b - a).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * width;
            let hi = lo + width;
            adaptive(&f, lo, hi, gl_panel(&f, lo, hi), tol / panels as f64, 30)
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Transforms

/// `L[Û](s) = ∫ e^{-st} t f̂_eq(k t) dt`.
pub fn laplace_u(
    spec: &EquilibriumSpec,
    k_phys: f64,
    s: Complex64,
    settings: &DispersionSettings,
) -> Result<Complex64> {
    if k_phys == 0.0 || !k_phys.is_finite() {
        return Err(Error::Domain(format!("wavenumber must be non-zero, got {k_phys}")));
    }
    let t_max = settings
        .horizon
        .resolve(s, |t| t * spec.fourier_envelope(k_phys * t));
    Ok(integrate(
        |t| (-s * t).exp() * spec.velocity_fourier(k_phys * t) * t,
        0.0,
        t_max,
        settings.quad_tol,
    ))
}

/// `|1 + L[Û](s)|`.
pub fn residual(spec: &EquilibriumSpec, k_phys: f64, s: Complex64, settings: &DispersionSettings) -> Result<f64> {
    Ok((Complex64::new(1.0, 0.0) + laplace_u(spec, k_phys, s, settings)?).norm())
}

/// Laplace transform of the free-streaming perturbation for a signed mode;
/// zero for modes the perturbation does not excite.
pub fn laplace_s(
    spec: &EquilibriumSpec,
    pert: &PerturbationSpec,
    mode: i32,
    k0: f64,
    s: Complex64,
    settings: &DispersionSettings,
) -> Complex64 {
    let eps = pert.epsilon();
    if eps == 0.0 || mode.unsigned_abs() as usize != pert.mode() {
        return Complex64::new(0.0, 0.0);
    }
    let k_phys = mode as f64 * k0;
    let t_max = settings
        .horizon
        .resolve(s, |t| pert.profile_envelope(spec, k_phys * t));
    let integral = integrate(
        |t| (-s * t).exp() * pert.velocity_profile_fourier(spec, k_phys * t),
        0.0,
        t_max,
        settings.quad_tol,
    );
    integral * (0.5 * eps)
}

// ---------------------------------------------------------------------------
// Root search

fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], scale: f64) -> ([f64; 2], f64) {
    let mut simplex = [start, [start[0] + scale, start[1]], [start[0], start[1] + scale]];
    let mut vals = simplex.map(&f);
    for _ in 0..2000 {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.map(|i| simplex[i]);
        vals = order.map(|i| vals[i]);
        let size = (simplex[1][0] - simplex[0][0]).abs().max((simplex[1][1] - simplex[0][1]).abs())
            .max((simplex[2][0] - simplex[0][0]).abs().max((simplex[2][1] - simplex[0][1]).abs()));
        if size < 1e-13 || (vals[2] - vals[0]).abs() < 1e-16 {
            break;
        }
        let c = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let at = |t: f64| [c[0] + t * (simplex[2][0] - c[0]), c[1] + t * (simplex[2][1] - c[1])];
        let r = at(-1.0);
        let fr = f(r);
        if fr < vals[0] {
            let e = at(-2.0);
            let fe = f(e);
            if fe < fr {
                simplex[2] = e;
                vals[2] = fe;
            } else {
                simplex[2] = r;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = r;
            vals[2] = fr;
        } else {
            let (ct, fc) = if fr < vals[2] {
                let p = at(-0.5);
                (p, f(p))
            } else {
                let p = at(0.5);
                (p, f(p))
            };
            if fc < vals[2].min(fr) {
                simplex[2] = ct;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
                    ];
                    vals[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (simplex[best], vals[best])
}

/// Fastest-growing root of the dispersion function for a signed mode.
pub fn find_root(
    spec: &EquilibriumSpec,
    mode: i32,
    grid: &PhaseSpaceGrid,
    settings: &DispersionSettings,
) -> Result<DispersionRoot> {
    if mode == 0 {
        return Err(Error::Domain("mode 0 carries no dispersion relation".into()));
    }
    spec.validate()?;
    let k_phys = mode as f64 * grid.k0();
    let n = settings.scan_points.max(3);
    let res_at = |re: f64, im: f64| -> f64 {
        residual(spec, k_phys, Complex64::new(re, im), settings).unwrap_or(f64::INFINITY)
    };
    let re_axis: Vec<f64> = (0..n).map(|i| settings.re_max * (i + 1) as f64 / n as f64).collect();
    let im_axis: Vec<f64> = (0..n)
        .map(|j| -settings.im_max + 2.0 * settings.im_max * j as f64 / (n - 1) as f64)
        .collect();
    let table: Vec<Vec<f64>> = re_axis
        .par_iter()
        .map(|&re| im_axis.iter().map(|&im| res_at(re, im)).collect())
        .collect();

    // local minima of the coarse scan (8-neighbourhood, edges included)
    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = table[i][j];
            let mut is_min = v.is_finite();
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                        continue;
                    }
                    if table[a as usize][b as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push((re_axis[i], im_axis[j], v));
            }
        }
    }
    let best_scan = table
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let step = settings.re_max / n as f64;
    let refined: Vec<DispersionRoot> = seeds
        .par_iter()
        .map(|&(re, im, _)| {
            let (p, r) = nelder_mead(|p| res_at(p[0], p[1]), [re, im], 0.5 * step);
            DispersionRoot {
                mode,
                s0: Complex64::new(p[0], p[1]),
                residual: r,
            }
        })
        .filter(|r| r.s0.re > 0.0 && r.residual < settings.threshold)
        .collect();

    let best_residual = refined.iter().map(|r| r.residual).fold(best_scan, f64::min);
    refined
        .into_iter()
        .max_by(|a, b| {
            let dr = a.s0.re - b.s0.re;
            if dr.abs() > 1e-9 {
                dr.total_cmp(&0.0)
            } else {
                b.s0.im.abs().total_cmp(&a.s0.im.abs())
            }
        })
        .ok_or(Error::NoUnstableRoot { mode, best_residual })
}

/// Spectral amplitude `Ĥ(k)` that removes the growing residue of `root`.
pub fn control_amplitude(
    spec: &EquilibriumSpec,
    pert: &PerturbationSpec,
    root: &DispersionRoot,
    k0: f64,
    settings: &DispersionSettings,
) -> Complex64 {
    let s0 = root.s0;
    let k_phys = root.mode as f64 * k0;
    let source = laplace_s(spec, pert, root.mode, k0, s0, settings);
    -s0 * source / Complex64::new(0.0, k_phys)
}

/// Result of the analytic synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guess {
    pub roots: Vec<DispersionRoot>,
    pub field: ControlField,
}

impl Guess {
    /// True when no requested mode carries a source, so the field is zero
    /// without any root search.
    pub fn is_trivial(&self) -> bool {
        self.roots.is_empty() && self.field.is_zero()
    }
}

/// Builds the static field from the requested positive modes. Modes whose
/// free-streaming source vanishes contribute zero without a root search.
pub fn synthesize_guess(
    spec: &EquilibriumSpec,
    pert: &PerturbationSpec,
    grid: &PhaseSpaceGrid,
    modes: &[usize],
    settings: &DispersionSettings,
) -> Result<Guess> {
    let order = modes.iter().copied().max().unwrap_or(0);
    let k0 = grid.k0();
    let mut field = ControlField::zero(order, k0);
    let mut roots = Vec::new();
    for &m in modes {
        if m == 0 {
            return Err(Error::Domain("control modes start at 1".into()));
        }
        if pert.epsilon() == 0.0 || m != pert.mode() {
            continue;
        }
        let root = find_root(spec, m as i32, grid, settings)?;
        let h = control_amplitude(spec, pert, &root, k0, settings);
        field.a[m - 1] = 2.0 * h.re;
        field.b[m - 1] = -2.0 * h.im;
        roots.push(root);
    }
    Ok(Guess { roots, field })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::Problem;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let total: f64 = gauss_legendre().iter().map(|&(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let i = integrate(|t| Complex64::new(t.powi(7), 0.0), 0.0, 2.0, 1e-12);
        assert!((i.re - 32.0).abs() < 1e-11);
        let osc = integrate(|t| Complex64::new(0.0, 3.0 * t).exp(), 0.0, 10.0, 1e-12);
        let want = (Complex64::new(0.0, 30.0).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((osc - want).norm() < 1e-11);
    }

    #[test]
    fn large_s_limit() {
        let settings = DispersionSettings::default().with_horizon(LaplaceHorizon::Converged);
        let spec = EquilibriumSpec::two_stream();
        let s = Complex64::new(100.0, 0.0);
        let l = laplace_u(&spec, 0.2, s, &settings).unwrap();
        assert!(((l - 1.0 / (s * s)) / (1.0 / (s * s))).norm() < 1e-3);
        assert!(laplace_u(&spec, 0.0, s, &settings).is_err());
    }

    #[test]
    fn conjugate_modes() {
        let p = Problem::BumpOnTail;
        let settings = DispersionSettings::default();
        let plus = find_root(&p.equilibrium(), 1, &p.grid(), &settings).unwrap();
        let minus = find_root(&p.equilibrium(), -1, &p.grid(), &settings).unwrap();
        assert!((plus.s0 - minus.s0.conj()).norm() < 1e-6);
    }

    #[test]
    fn absent_modes_have_no_source() {
        let p = Problem::TwoStream;
        let s = Complex64::new(0.2, 0.1);
        let settings = DispersionSettings::default();
        assert_eq!(laplace_s(&p.equilibrium(), &p.perturbation(1e-3), 2, 0.2, s, &settings).norm(), 0.0);
        assert_eq!(laplace_s(&p.equilibrium(), &p.perturbation(0.0), 1, 0.2, s, &settings).norm(), 0.0);
    }

    #[test]
    fn zero_epsilon_gives_trivial_guess() {
        let p = Problem::TwoStream;
        let g = synthesize_guess(&p.equilibrium(), &p.perturbation(0.0), &p.grid(), &[1], &DispersionSettings::default())
            .unwrap();
        assert!(g.is_trivial());
    }

    #[test]
    fn root_json_shape() {
        let r = DispersionRoot {
            mode: 1,
            s0: Complex64::new(0.2, -0.3),
            residual: 1e-9,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"re\":0.2"));
        assert_eq!(serde_json::from_str::<DispersionRoot>(&s).unwrap(), r);
    }
}
