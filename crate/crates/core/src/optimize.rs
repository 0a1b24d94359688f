//! Gradient descent over control coefficients with finite-difference
//! gradients, either with a constant step or a strong-Wolfe line search.

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::control::{ControlField, ParameterMask};
use crate::error::{Error, Result};
use crate::grid::SimulationConfig;
use crate::objectives::{self, is_failed, ObjectiveKind};

/// Coefficient magnitude above which the control is said to dominate the
/// plasma rather than nudge it.
pub const NON_PHYSICAL_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ConstantGd,
    WolfeGd,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ConstantGd => "constant-gd",
            Self::WolfeGd => "wolfe-gd",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant-gd" | "gd" | "constant" | "local" => Ok(Self::ConstantGd),
            "wolfe-gd" | "wolfe" | "adaptive" => Ok(Self::WolfeGd),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Constant step length (ConstantGd only).
    pub stepsize: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_iters: usize,
    pub fd_step: f64,
    pub grad_tol: f64,
    pub f_tol: f64,
    /// Full packed `(a, b)` start vector; masked entries stay at these values.
    pub init: Vec<f64>,
    pub mask: ParameterMask,
    pub max_expansions: usize,
    pub max_zoom: usize,
}

impl OptimizerConfig {
    pub fn new(method: Method, init: Vec<f64>, mask: ParameterMask) -> Self {
        Self {
            method,
            stepsize: 1e-8,
            c1: 1e-4,
            c2: 0.9,
            max_iters: 200,
            fd_step: 1e-7,
            grad_tol: 0.0,
            f_tol: 0.0,
            init,
            mask,
            max_expansions: 40,
            max_zoom: 30,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::Config(format!(
                "Wolfe constants need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.stepsize > 0.0 && self.fd_step > 0.0) {
            return Err(Error::Config("stepsize and fd_step must be positive".into()));
        }
        if self.init.len() != self.mask.full_len() {
            return Err(Error::LengthMismatch {
                expected: self.mask.full_len(),
                got: self.init.len(),
            });
        }
        Ok(())
    }
}

/// Uniform sample of the free entries in `[lo, hi]`; fixed entries are 0.
pub fn sample_init(mask: &ParameterMask, bounds: (f64, f64), seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; mask.full_len()];
    for &i in &mask.free {
        v[i] = rng.random_range(bounds.0..=bounds.1);
    }
    v
}

/// Objective that runs the PDE for a packed parameter vector.
#[derive(Debug, Clone)]
pub struct PdeObjective {
    pub kind: ObjectiveKind,
    pub base: SimulationConfig,
    pub order: usize,
}

impl PdeObjective {
    pub fn new(kind: ObjectiveKind, base: SimulationConfig, order: usize) -> Self {
        Self { kind, base, order }
    }

    pub fn field(&self, params: &[f64]) -> Result<ControlField> {
        ControlField::unpack(params, self.order, self.base.grid.k0())
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        match self.field(params) {
            Ok(h) => objectives::evaluate_objective(self.kind, &self.base.clone().with_control(h)),
            Err(e) => {
                warn!("{e}");
                objectives::FAILED
            }
        }
    }
}

/// Central differences over the free entries; fixed entries get exactly 0.
pub fn fd_gradient<F>(f: &F, theta: &[f64], h: f64, mask: &ParameterMask) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let parts: Vec<(usize, f64, f64)> = mask
        .free
        .par_iter()
        .flat_map_iter(|&i| [(i, h), (i, -h)])
        .map(|(i, d)| {
            let mut p = theta.to_vec();
            p[i] += d;
            (i, d, f(&p))
        })
        .collect();
    let mut grad = vec![0.0; theta.len()];
    for pair in parts.chunks(2) {
        let (i, _, fp) = pair[0];
        let (_, _, fm) = pair[1];
        if is_failed(fp) || is_failed(fm) {
            return Err(Error::GradientFailure { index: i });
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Directional derivative `⟨∇f(θ), d⟩` by central differences along `d`.
pub fn directional_derivative<F>(f: &F, theta: &[f64], dir: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let shifted = |s: f64| -> Vec<f64> { theta.iter().zip(dir).map(|(t, d)| t + s * d).collect() };
    let (fp, fm) = rayon::join(|| f(&shifted(h)), || f(&shifted(-h)));
    if is_failed(fp) || is_failed(fm) {
        return Err(Error::GradientFailure { index: usize::MAX });
    }
    Ok((fp - fm) / (2.0 * h))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Line search

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub phi: f64,
    /// `φ′(α)`, when it was evaluated.
    pub dphi: Option<f64>,
    pub evaluations: usize,
    /// No bracket within the expansion limit; `alpha` only guarantees
    /// sufficient decrease.
    pub expansion_limit: bool,
    /// Zoom budget exhausted; `alpha` only guarantees sufficient decrease.
    pub zoom_limit: bool,
}

impl LineSearchResult {
    pub fn satisfies_wolfe(&self, phi0: f64, dphi0: f64, c1: f64, c2: f64) -> (bool, bool) {
        let armijo = self.phi <= phi0 + c1 * self.alpha * dphi0;
        let curvature = self.dphi.is_some_and(|d| d.abs() <= c2 * dphi0.abs());
        (armijo, curvature)
    }
}

fn interpolate(a: (f64, f64, f64), b: (f64, f64, Option<f64>)) -> f64 {
    let (x0, f0, d0) = a;
    let (x1, f1, d1) = b;
    let lo = x0.min(x1);
    let hi = x0.max(x1);
    let width = hi - lo;
    let guess = match d1 {
        Some(d1) => {
            // cubic through both values and slopes
            let d_1 = d0 + d1 - 3.0 * (f0 - f1) / (x0 - x1);
            let disc = d_1 * d_1 - d0 * d1;
            if disc >= 0.0 {
                let d_2 = (x1 - x0).signum() * disc.sqrt();
                x1 - (x1 - x0) * (d1 + d_2 - d_1) / (d1 - d0 + 2.0 * d_2)
            } else {
                f64::NAN
            }
        }
        None => {
            // quadratic through (x0, f0, d0) and (x1, f1)
            let dx = x1 - x0;
            let denom = 2.0 * (f1 - f0 - d0 * dx);
            if denom != 0.0 {
                x0 - d0 * dx * dx / denom
            } else {
                f64::NAN
            }
        }
    };
    if guess.is_finite() && guess > lo + 0.1 * width && guess < hi - 0.1 * width {
        guess
    } else {
        0.5 * (lo + hi)
    }
}

/// Strong-Wolfe step by bracketing then zooming.
#[allow(clippy::too_many_arguments)]
pub fn wolfe_line_search(
    mut phi: impl FnMut(f64) -> f64,
    mut dphi: impl FnMut(f64) -> Option<f64>,
    phi0: f64,
    dphi0: f64,
    c1: f64,
    c2: f64,
    alpha_init: f64,
    max_expansions: usize,
    max_zoom: usize,
) -> Result<LineSearchResult> {
    if dphi0.is_nan() || dphi0 >= 0.0 {
        return Err(Error::LineSearch(format!("not a descent direction (φ′(0) = {dphi0})")));
    }
    let armijo = |a: f64, f: f64| !is_failed(f) && f <= phi0 + c1 * a * dphi0;
    let curvature = |d: f64| d.abs() <= c2 * dphi0.abs();
    let mut evals = 0;

    let mut prev = (0.0, phi0, dphi0);
    let mut a = alpha_init;
    let mut best: Option<LineSearchResult> = None;
    let mut bracket = None;
    for i in 0..max_expansions {
        let fa = phi(a);
        evals += 1;
        if !armijo(a, fa) || (i > 0 && fa >= prev.1) {
            bracket = Some((prev, (a, fa, None)));
            break;
        }
        let Some(da) = dphi(a) else {
            bracket = Some((prev, (a, fa, None)));
            break;
        };
        evals += 2;
        let here = LineSearchResult {
            alpha: a,
            phi: fa,
            dphi: Some(da),
            evaluations: evals,
            expansion_limit: false,
            zoom_limit: false,
        };
        if curvature(da) {
            return Ok(here);
        }
        best = Some(here);
        if da >= 0.0 {
            bracket = Some(((a, fa, da), (prev.0, prev.1, Some(prev.2))));
            break;
        }
        prev = (a, fa, da);
        a *= 2.0;
    }

    let Some((mut lo, mut hi)) = bracket else {
        warn!("line search: no bracket within {max_expansions} expansions");
        return best
            .map(|b| LineSearchResult {
                expansion_limit: true,
                evaluations: evals,
                ..b
            })
            .ok_or_else(|| Error::LineSearch("no admissible step".into()));
    };

    for _ in 0..max_zoom {
        let a = interpolate(lo, hi);
        let fa = phi(a);
        evals += 1;
        if !armijo(a, fa) || fa >= lo.1 {
            hi = (a, fa, None);
            continue;
        }
        let Some(da) = dphi(a) else {
            hi = (a, fa, None);
            continue;
        };
        evals += 2;
        if curvature(da) {
            return Ok(LineSearchResult {
                alpha: a,
                phi: fa,
                dphi: Some(da),
                evaluations: evals,
                expansion_limit: false,
                zoom_limit: false,
            });
        }
        if da * (hi.0 - lo.0) >= 0.0 {
            hi = (lo.0, lo.1, Some(lo.2));
        }
        lo = (a, fa, da);
    }

    if lo.0 > 0.0 && armijo(lo.0, lo.1) {
        warn!("line search: zoom budget exhausted, keeping a sufficient-decrease step");
        return Ok(LineSearchResult {
            alpha: lo.0,
            phi: lo.1,
            dphi: Some(lo.2),
            evaluations: evals,
            expansion_limit: false,
            zoom_limit: true,
        });
    }
    Err(Error::LineSearch("no decrease found at the smallest trial step".into()))
}

// ---------------------------------------------------------------------------
// Descent loops

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    /// Step length that produced this iterate (0 for the start point).
    pub step: f64,
    pub params: Vec<f64>,
    pub gradient: Vec<f64>,
    /// Seconds since the optimizer started.
    pub wall_time: f64,
    /// Strong-Wolfe checks (sufficient decrease, curvature) of the step that
    /// produced this iterate, as evaluated by the line search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wolfe: Option<(bool, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Status {
    MaxIters,
    GradTol,
    FTol,
    GradientFailure { index: usize },
    LineSearchFailure { reason: String },
    ObjectiveFailure,
}

impl Status {
    pub fn is_failure(&self) -> bool {
        matches!(
            self,
            Self::GradientFailure { .. } | Self::LineSearchFailure { .. } | Self::ObjectiveFailure
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationHistory {
    pub method: Method,
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub wall_time: f64,
}

impl OptimizationHistory {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn final_params(&self) -> &[f64] {
        self.records.last().map(|r| r.params.as_slice()).unwrap_or(&[])
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map(|r| r.objective).unwrap_or(f64::NAN)
    }

    pub fn objective_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Fraction of steps that did not increase the objective.
    pub fn monotone_fraction(&self) -> f64 {
        let steps = self.records.len().saturating_sub(1);
        if steps == 0 {
            return 1.0;
        }
        let ok = self
            .records
            .windows(2)
            .filter(|w| w[1].objective <= w[0].objective)
            .count();
        ok as f64 / steps as f64
    }

    pub fn max_abs_param(&self) -> f64 {
        self.final_params().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The final coefficients are large enough to dominate the dynamics.
    pub fn non_physical(&self) -> bool {
        self.max_abs_param() > NON_PHYSICAL_THRESHOLD
    }
}

struct Recorder {
    start: Instant,
    records: Vec<IterationRecord>,
}

impl Recorder {
    fn push(&mut self, params: &[f64], objective: f64, gradient: Vec<f64>, step: f64, wolfe: Option<(bool, bool)>) {
        let iter = self.records.len();
        let grad_norm = norm(&gradient);
        info!("iter {iter}: objective {objective:.6e}, |grad| {grad_norm:.3e}, step {step:.3e}");
        self.records.push(IterationRecord {
            iter,
            objective,
            grad_norm,
            step,
            params: params.to_vec(),
            gradient,
            wall_time: self.start.elapsed().as_secs_f64(),
            wolfe,
        });
    }
}

/// Dispatches on `config.method`.
pub fn optimize<F>(f: &F, config: &OptimizerConfig) -> Result<OptimizationHistory>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    match config.method {
        Method::ConstantGd => gd_constant(f, config),
        Method::WolfeGd => gd_wolfe(f, config),
    }
}

/// `θₙ₊₁ = θₙ − α ∇f(θₙ)` for `max_iters` steps or until a tolerance hits.
pub fn gd_constant<F>(f: &F, config: &OptimizerConfig) -> Result<OptimizationHistory>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let start = Instant::now();
    let mut rec = Recorder {
        start,
        records: Vec::new(),
    };
    let mut theta = config.init.clone();
    let mut value = f(&theta);
    if is_failed(value) {
        return Err(Error::RunFailed {
            step: 0,
            reason: "objective failed at the initial point".into(),
        });
    }
    let mut step = 0.0;
    let mut status = Status::MaxIters;
    for it in 0..=config.max_iters {
        let grad = match fd_gradient(f, &theta, config.fd_step, &config.mask) {
            Ok(g) => g,
            Err(Error::GradientFailure { index }) => {
                rec.push(&theta, value, vec![f64::NAN; theta.len()], step, None);
                status = Status::GradientFailure { index };
                break;
            }
            Err(e) => return Err(e),
        };
        let gn = norm(&grad);
        rec.push(&theta, value, grad.clone(), step, None);
        if it == config.max_iters {
            break;
        }
        if gn <= config.grad_tol {
            status = Status::GradTol;
            break;
        }
        let next: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - config.stepsize * g).collect();
        let next_value = f(&next);
        if is_failed(next_value) {
            status = Status::ObjectiveFailure;
            break;
        }
        step = config.stepsize;
        let change = (next_value - value).abs();
        theta = next;
        value = next_value;
        if change <= config.f_tol {
            let grad = fd_gradient(f, &theta, config.fd_step, &config.mask).unwrap_or_else(|_| vec![f64::NAN; theta.len()]);
            rec.push(&theta, value, grad, step, None);
            status = Status::FTol;
            break;
        }
    }
    Ok(OptimizationHistory {
        method: Method::ConstantGd,
        records: rec.records,
        status,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Steepest descent with a strong-Wolfe step each iteration.
pub fn gd_wolfe<F>(f: &F, config: &OptimizerConfig) -> Result<OptimizationHistory>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let start = Instant::now();
    let mut rec = Recorder {
        start,
        records: Vec::new(),
    };
    let mut theta = config.init.clone();
    let mut value = f(&theta);
    if is_failed(value) {
        return Err(Error::RunFailed {
            step: 0,
            reason: "objective failed at the initial point".into(),
        });
    }
    let mut step = 0.0;
    let mut wolfe = None;
    let mut status = Status::MaxIters;
    for it in 0..=config.max_iters {
        let grad = match fd_gradient(f, &theta, config.fd_step, &config.mask) {
            Ok(g) => g,
            Err(Error::GradientFailure { index }) => {
                rec.push(&theta, value, vec![f64::NAN; theta.len()], step, wolfe);
                status = Status::GradientFailure { index };
                break;
            }
            Err(e) => return Err(e),
        };
        let gn = norm(&grad);
        rec.push(&theta, value, grad.clone(), step, wolfe);
        if it == config.max_iters {
            break;
        }
        if gn <= config.grad_tol {
            status = Status::GradTol;
            break;
        }
        let dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let point = |a: f64| -> Vec<f64> { theta.iter().zip(&dir).map(|(t, d)| t + a * d).collect() };
        let h_alpha = config.fd_step / gn;
        let dphi0 = -gn * gn;
        let ls = wolfe_line_search(
            |a| f(&point(a)),
            |a| directional_derivative(f, &point(a), &dir, h_alpha).ok(),
            value,
            dphi0,
            config.c1,
            config.c2,
            (1.0 / gn).min(1.0),
            config.max_expansions,
            config.max_zoom,
        );
        let ls = match ls {
            Ok(ls) => ls,
            Err(e) => {
                status = Status::LineSearchFailure { reason: e.to_string() };
                break;
            }
        };
        wolfe = Some(ls.satisfies_wolfe(value, dphi0, config.c1, config.c2));
        let change = (ls.phi - value).abs();
        theta = point(ls.alpha);
        value = ls.phi;
        step = ls.alpha;
        if change <= config.f_tol {
            let grad = fd_gradient(f, &theta, config.fd_step, &config.mask).unwrap_or_else(|_| vec![f64::NAN; theta.len()]);
            rec.push(&theta, value, grad, step, wolfe);
            status = Status::FTol;
            break;
        }
    }
    Ok(OptimizationHistory {
        method: Method::WolfeGd,
        records: rec.records,
        status,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm2(t: &[f64]) -> f64 {
        0.5 * t.iter().map(|x| x * x).sum::<f64>()
    }

    #[test]
    fn fd_gradient_of_quadratic() {
        let f = |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>();
        let theta = [0.3, -1.2, 2.0, 0.7];
        let g = fd_gradient(&f, &theta, 1e-5, &ParameterMask::all(2)).unwrap();
        for (gi, ti) in g.iter().zip(theta) {
            assert!((gi - 2.0 * ti).abs() < 1e-6);
        }
        let mask = ParameterMask::new(2, vec![1, 3]).unwrap();
        let g = fd_gradient(&f, &[1.0, 1.0, 1.0, 1.0], 1e-5, &mask).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn fd_gradient_reports_failures() {
        let f = |t: &[f64]| if t[1] > 0.5 { objectives::FAILED } else { 1.0 };
        let err = fd_gradient(&f, &[0.0, 0.5], 0.1, &ParameterMask::all(1)).unwrap_err();
        assert!(matches!(err, Error::GradientFailure { index: 1 }));
    }

    #[test]
    fn constant_gd_is_a_linear_recursion() {
        let mut cfg = OptimizerConfig::new(Method::ConstantGd, vec![1.0, -2.0], ParameterMask::all(1));
        cfg.stepsize = 0.1;
        cfg.max_iters = 20;
        cfg.fd_step = 1e-4;
        let h = gd_constant(&half_norm2, &cfg).unwrap();
        assert_eq!(h.records.len(), 21);
        for r in &h.records {
            let scale = 0.9f64.powi(r.iter as i32);
            assert!((r.params[0] - scale).abs() < 1e-9);
            assert!((r.params[1] + 2.0 * scale).abs() < 1e-9);
        }
        for w in h.records.windows(2) {
            let next: Vec<f64> = w[0].params.iter().zip(&w[0].gradient).map(|(t, g)| t - 0.1 * g).collect();
            assert_eq!(next, w[1].params);
        }
        assert_eq!(h.monotone_fraction(), 1.0);
    }

    #[test]
    fn zero_gradient_stops_immediately() {
        let cfg = OptimizerConfig::new(Method::ConstantGd, vec![0.0, 0.0], ParameterMask::all(1));
        let h = gd_constant(&half_norm2, &cfg).unwrap();
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.status, Status::GradTol);
    }

    #[test]
    fn wolfe_on_shifted_parabola() {
        let (c1, c2) = (1e-4, 0.9);
        let r = wolfe_line_search(|a| (a - 1.0).powi(2), |a| Some(2.0 * (a - 1.0)), 1.0, -2.0, c1, c2, 1.0, 20, 20)
            .unwrap();
        assert!((r.alpha - 1.0).abs() < 0.5);
        assert_eq!(r.satisfies_wolfe(1.0, -2.0, c1, c2), (true, true));
    }

    #[test]
    fn wolfe_expansion_limit() {
        let r = wolfe_line_search(|a| -a, |_| Some(-1.0), 0.0, -1.0, 1e-4, 0.9, 1.0, 10, 10).unwrap();
        assert!(r.expansion_limit);
        assert!(wolfe_line_search(|a| a, |_| Some(1.0), 0.0, 1.0, 1e-4, 0.9, 1.0, 10, 10).is_err());
    }

    #[test]
    fn wolfe_gd_converges_on_anisotropic_quadratic() {
        let f = |t: &[f64]| 0.5 * (t[0] * t[0] + 10.0 * t[1] * t[1]);
        let mut cfg = OptimizerConfig::new(Method::WolfeGd, vec![1.0, 1.0], ParameterMask::all(1));
        cfg.max_iters = 50;
        cfg.fd_step = 1e-6;
        let h = gd_wolfe(&f, &cfg).unwrap();
        assert!(h.final_objective() < 1e-8, "{}", h.final_objective());
        for r in h.records.iter().skip(1) {
            assert_eq!(r.wolfe, Some((true, true)));
        }
    }

    #[test]
    fn masked_entries_never_move() {
        let f = |t: &[f64]| t.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>();
        let mask = ParameterMask::new(2, vec![2, 3]).unwrap();
        let mut cfg = OptimizerConfig::new(Method::WolfeGd, vec![0.25, -0.5, 0.0, 0.0], mask);
        cfg.max_iters = 5;
        let h = gd_wolfe(&f, &cfg).unwrap();
        for r in &h.records {
            assert_eq!(&r.params[..2], &[0.25, -0.5]);
        }
    }

    #[test]
    fn init_sampling_is_seeded() {
        let mask = ParameterMask::new(2, vec![2, 3]).unwrap();
        let a = sample_init(&mask, (-0.003, 0.001), 7);
        assert_eq!(a, sample_init(&mask, (-0.003, 0.001), 7));
        assert_ne!(a, sample_init(&mask, (-0.003, 0.001), 8));
        assert_eq!(&a[..2], &[0.0, 0.0]);
        assert!(a[2..].iter().all(|v| (-0.003..=0.001).contains(v)));
    }

    #[test]
    fn history_json_roundtrip() {
        let mut cfg = OptimizerConfig::new(Method::WolfeGd, vec![0.3, -0.7], ParameterMask::all(1));
        cfg.max_iters = 3;
        let h = gd_wolfe(&half_norm2, &cfg).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(serde_json::from_str::<OptimizationHistory>(&s).unwrap(), h);
    }
}
