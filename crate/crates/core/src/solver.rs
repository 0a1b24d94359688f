//! Strang-split semi-Lagrangian integrator for the controlled 1D-1V
//! Vlasov-Poisson system
//!
//! ```text
//! ∂ₜf + v ∂ₓf − (E_f − H) ∂ᵥf = 0,   E_f = ∂ₓV,   ∂ₓₓV = 1 − ∫ f dv
//! ```
//!
//! The external field `H` acts on characteristics as an applied
//! acceleration, `dv/dt = −E_f + H`. Each step does a half x-advection, a
//! spectral Poisson solve on the half-advected state, a full v-advection in
//! the total field, and a second half x-advection. Interpolation is
//! piecewise linear: periodic in x, zero-filled outside the velocity box.

use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::equilibria::build_initial_condition;
use crate::error::{Error, Result};
use crate::grid::{DistributionState, PhaseSpaceGrid, SimulationConfig, SimulationTrace};
use crate::objectives;

/// Electric field samples on the x-nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn zeros(mx: usize) -> Self {
        Self {
            values: vec![0.0; mx],
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `Σ E(xᵢ)² dx`.
    pub fn energy(&self, grid: &PhaseSpaceGrid) -> f64 {
        self.values.iter().map(|e| e * e).sum::<f64>() * grid.dx()
    }
}

/// Outcome of one velocity advection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AdvectReport {
    /// Some characteristic moved farther than `Lv` in one step.
    pub left_box: bool,
}

/// Relative distance to the nearest integer below which a shift is treated
/// as an exact grid move.
const SNAP_TOL: f64 = 1e-12;

#[inline]
fn split_shift(shift: f64) -> (i64, f64) {
    let r = shift.round();
    if (shift - r).abs() <= SNAP_TOL * shift.abs().max(1.0) {
        return (r as i64, 0.0);
    }
    let fl = shift.floor();
    (fl as i64, shift - fl)
}

/// Free streaming `f(x, v) ← f(x − v τ, v)` with periodic wrap.
pub fn advect_x(state: &DistributionState, grid: &PhaseSpaceGrid, tau: f64) -> DistributionState {
    let mut out = DistributionState {
        values: vec![0.0; grid.len()],
        time: state.time,
    };
    advect_x_into(&state.values, &mut out.values, grid, tau);
    out
}

fn advect_x_into(src: &[f64], dst: &mut [f64], grid: &PhaseSpaceGrid, tau: f64) {
    let (mx, mv) = (grid.mx, grid.mv);
    let dx = grid.dx();
    // Foot of the characteristic for node i sits at i + offset (+ frac).
    let shifts: Vec<(usize, f64)> = (0..mv)
        .map(|j| {
            let (n, w) = split_shift(-grid.v(j) * tau / dx);
            (n.rem_euclid(mx as i64) as usize, w)
        })
        .collect();
    for i in 0..mx {
        let row = &mut dst[i * mv..(i + 1) * mv];
        for (j, (&(off, w), out)) in shifts.iter().zip(row.iter_mut()).enumerate() {
            let i0 = (i + off) % mx;
            let f0 = src[i0 * mv + j];
            *out = if w == 0.0 {
                f0
            } else {
                let i1 = if i0 + 1 == mx { 0 } else { i0 + 1 };
                f0 + w * (src[i1 * mv + j] - f0)
            };
        }
    }
}

/// `ρ(xᵢ) = Σⱼ f(xᵢ, vⱼ) dv`.
pub fn charge_density(state: &DistributionState, grid: &PhaseSpaceGrid) -> Vec<f64> {
    let mut rho = vec![0.0; grid.mx];
    density_into(&state.values, &mut rho, grid);
    rho
}

/// Velocity advection in the total field: `f(x, v) ← f(x, v + (E − H) τ)`,
/// reads outside `[−Lv, Lv)` are zero.
pub fn advect_v(
    state: &DistributionState,
    self_field: &FieldSample,
    control: &[f64],
    grid: &PhaseSpaceGrid,
    tau: f64,
) -> (DistributionState, AdvectReport) {
    let mut out = DistributionState {
        values: vec![0.0; grid.len()],
        time: state.time,
    };
    let report = advect_v_into(&state.values, &mut out.values, &self_field.values, control, grid, tau);
    (out, report)
}

fn advect_v_into(
    src: &[f64],
    dst: &mut [f64],
    field: &[f64],
    control: &[f64],
    grid: &PhaseSpaceGrid,
    tau: f64,
) -> AdvectReport {
    let mv = grid.mv;
    let dv = grid.dv();
    let mut report = AdvectReport::default();
    for i in 0..grid.mx {
        let accel = field[i] - control[i];
        let dvel = accel * tau;
        if dvel.abs() > grid.lv || !dvel.is_finite() {
            report.left_box = true;
        }
        let col = &src[i * mv..(i + 1) * mv];
        let out = &mut dst[i * mv..(i + 1) * mv];
        if dvel == 0.0 {
            out.copy_from_slice(col);
            continue;
        }
        let (n, w) = split_shift(dvel / dv);
        let read = |k: i64| -> f64 {
            if k >= 0 && (k as usize) < mv {
                col[k as usize]
            } else {
                0.0
            }
        };
        for (j, o) in out.iter_mut().enumerate() {
            let k = j as i64 + n;
            let f0 = read(k);
            *o = if w == 0.0 { f0 } else { f0 + w * (read(k + 1) - f0) };
        }
    }
    report
}

/// Spectral Poisson solver on the periodic x-grid, reusable across steps.
pub struct PoissonSolver {
    grid: PhaseSpaceGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl PoissonSolver {
    pub fn new(grid: &PhaseSpaceGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.mx);
        let inverse = planner.plan_fft_inverse(grid.mx);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid: *grid,
            forward,
            inverse,
            buffer: vec![Complex64::new(0.0, 0.0); grid.mx],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// Solves `∂ₓₓV = 1 − ρ`, returns `E = ∂ₓV` with zero mean.
    pub fn solve(&mut self, rho: &[f64]) -> FieldSample {
        let mut out = FieldSample::zeros(self.grid.mx);
        self.solve_into(rho, &mut out.values);
        out
    }

    /// Same as [`solve`](Self::solve) but also returns the potential.
    pub fn solve_with_potential(&mut self, rho: &[f64]) -> (FieldSample, Vec<f64>) {
        let field = self.solve(rho);
        let mx = self.grid.mx;
        let k0 = self.grid.k0();
        for (b, &r) in self.buffer.iter_mut().zip(rho) {
            *b = Complex64::new(1.0 - r, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (m, b) in self.buffer.iter_mut().enumerate() {
            let xi = signed_mode(m, mx) as f64 * k0;
            *b = if m == 0 { Complex64::new(0.0, 0.0) } else { -*b / (xi * xi) };
        }
        self.inverse.process_with_scratch(&mut self.buffer, &mut self.scratch);
        let norm = 1.0 / mx as f64;
        let potential = self.buffer.iter().map(|c| c.re * norm).collect();
        (field, potential)
    }

    fn solve_into(&mut self, rho: &[f64], out: &mut [f64]) {
        let mx = self.grid.mx;
        let k0 = self.grid.k0();
        for (b, &r) in self.buffer.iter_mut().zip(rho) {
            *b = Complex64::new(1.0 - r, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (m, b) in self.buffer.iter_mut().enumerate() {
            if m == 0 {
                *b = Complex64::new(0.0, 0.0);
                continue;
            }
            // V̂ = −r̂/ξ², Ê = iξ V̂ = −i r̂/ξ
            let xi = signed_mode(m, mx) as f64 * k0;
            *b = Complex64::new(b.im / xi, -b.re / xi);
        }
        self.inverse.process_with_scratch(&mut self.buffer, &mut self.scratch);
        let norm = 1.0 / mx as f64;
        for (o, c) in out.iter_mut().zip(&self.buffer) {
            *o = c.re * norm;
        }
    }
}

/// FFT bin index to signed mode in `[−M/2, M/2)`.
#[inline]
fn signed_mode(m: usize, n: usize) -> i64 {
    if m >= n / 2 + n % 2 {
        m as i64 - n as i64
    } else {
        m as i64
    }
}

/// One-shot Poisson solve.
pub fn solve_poisson(rho: &[f64], grid: &PhaseSpaceGrid) -> FieldSample {
    PoissonSolver::new(grid).solve(rho)
}

/// Owns scratch buffers so a run allocates once.
pub struct Stepper {
    grid: PhaseSpaceGrid,
    poisson: PoissonSolver,
    control: Vec<f64>,
    half: Vec<f64>,
    full: Vec<f64>,
    rho: Vec<f64>,
    field: FieldSample,
}

impl Stepper {
    pub fn new(grid: &PhaseSpaceGrid, control: Vec<f64>) -> Self {
        Self {
            grid: *grid,
            poisson: PoissonSolver::new(grid),
            control,
            half: vec![0.0; grid.len()],
            full: vec![0.0; grid.len()],
            rho: vec![0.0; grid.mx],
            field: FieldSample::zeros(grid.mx),
        }
    }

    /// Advances `state` by `dt` in place and returns the advection report;
    /// the field used is available from [`last_field`](Self::last_field).
    pub fn step(&mut self, state: &mut DistributionState, dt: f64) -> AdvectReport {
        let g = self.grid;
        advect_x_into(&state.values, &mut self.half, &g, 0.5 * dt);
        density_into(&self.half, &mut self.rho, &g);
        self.poisson.solve_into(&self.rho, &mut self.field.values);
        let report = advect_v_into(&self.half, &mut self.full, &self.field.values, &self.control, &g, dt);
        advect_x_into(&self.full, &mut state.values, &g, 0.5 * dt);
        state.time += dt;
        report
    }

    pub fn last_field(&self) -> &FieldSample {
        &self.field
    }

    /// Self-consistent field of `state` (no advection).
    pub fn field_of(&mut self, state: &DistributionState) -> FieldSample {
        density_into(&state.values, &mut self.rho, &self.grid);
        self.poisson.solve(&self.rho)
    }
}

fn density_into(values: &[f64], rho: &mut [f64], grid: &PhaseSpaceGrid) {
    let mv = grid.mv;
    let dv = grid.dv();
    for (i, r) in rho.iter_mut().enumerate() {
        *r = values[i * mv..(i + 1) * mv].iter().sum::<f64>() * dv;
    }
}

/// One Strang step; returns the new state and the field computed from the
/// half-advected state.
pub fn step(
    state: &DistributionState,
    control: &crate::control::ControlField,
    grid: &PhaseSpaceGrid,
    dt: f64,
) -> Result<(DistributionState, FieldSample)> {
    let mut stepper = Stepper::new(grid, control.sample(grid));
    let mut next = state.clone();
    let report = stepper.step(&mut next, dt);
    if report.left_box {
        warn!("characteristics left the velocity box during a single step");
    }
    if !next.is_finite() {
        return Err(Error::RunFailed {
            step: 0,
            reason: "non-finite density".into(),
        });
    }
    Ok((next, stepper.last_field().clone()))
}

/// Runs the configured simulation from its perturbed initial condition.
pub fn run(config: &SimulationConfig) -> Result<SimulationTrace> {
    let initial = build_initial_condition(&config.equilibrium, &config.perturbation, &config.grid)?;
    run_from(config, initial)
}

/// Runs from an explicit initial state.
pub fn run_from(config: &SimulationConfig, initial: DistributionState) -> Result<SimulationTrace> {
    let grid = &config.grid;
    if config.control.order() > 0 && (config.control.k0 - grid.k0()).abs() > 1e-12 * grid.k0() {
        return Err(Error::Config(format!(
            "control k0 = {} does not match grid k0 = {}",
            config.control.k0,
            grid.k0()
        )));
    }
    let rec = config.record;
    let n = config.n_steps;
    let feq = config.equilibrium.sample(grid);

    let mut stepper = Stepper::new(grid, config.control.sample(grid));
    let mut state = initial;
    let mut energy = Vec::with_capacity(n + 1);
    let mut fields = rec.field_history.then(|| Vec::with_capacity(n));
    let mut kl = rec.kl_series.then(|| Vec::with_capacity(n + 1));
    let mut l2 = rec.l2_series.then(|| Vec::with_capacity(n + 1));
    let mut snaps = rec.snapshots.then(|| Vec::with_capacity(n + 1));
    let mut warnings = 0;

    let record_state = |state: &DistributionState,
                            stepper: &mut Stepper,
                            energy: &mut Vec<f64>,
                            kl: &mut Option<Vec<f64>>,
                            l2: &mut Option<Vec<f64>>,
                            snaps: &mut Option<Vec<DistributionState>>| {
        energy.push(stepper.field_of(state).energy(grid));
        if let Some(k) = kl.as_mut() {
            k.push(objectives::kl_divergence_sampled(state, &feq, grid));
        }
        if let Some(l) = l2.as_mut() {
            l.push(objectives::l2_misfit_sampled(state, &feq, grid));
        }
        if let Some(s) = snaps.as_mut() {
            s.push(state.clone());
        }
    };

    record_state(&state, &mut stepper, &mut energy, &mut kl, &mut l2, &mut snaps);
    for step_index in 0..n {
        let report = stepper.step(&mut state, config.dt);
        if report.left_box {
            warnings += 1;
            if warnings == 1 {
                warn!("step {step_index}: characteristics left the velocity box in one step");
            }
        }
        if let Some(f) = fields.as_mut() {
            f.push(stepper.last_field().values.clone());
        }
        record_state(&state, &mut stepper, &mut energy, &mut kl, &mut l2, &mut snaps);
        let e = *energy.last().unwrap();
        if !e.is_finite() {
            return Err(Error::RunFailed {
                step: step_index + 1,
                reason: format!("electric energy became {e}"),
            });
        }
    }

    Ok(SimulationTrace {
        energy_series: energy,
        field_history: fields,
        kl_series: kl,
        l2_series: l2,
        snapshots: snaps,
        final_state: state,
        blowup_warnings: warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlField;
    use crate::equilibria::{EquilibriumSpec, PerturbationSpec};
    use std::f64::consts::PI;

    fn ts_grid(m: usize) -> PhaseSpaceGrid {
        PhaseSpaceGrid::new(m, m, 10.0 * PI, 6.0).unwrap()
    }

    fn pseudo_random_state(grid: &PhaseSpaceGrid) -> DistributionState {
        DistributionState::from_fn(grid, |x, v| {
            let edge = (1.0 - (v / grid.lv).powi(2)).max(0.0).powi(4);
            edge * (1.3 + (3.0 * x).sin() * (1.7 * v).cos()).abs()
        })
    }

    #[test]
    fn integer_x_shift_is_a_permutation() {
        // dx = 1, v_j = -4 + j/2, tau = 2 → shifts are whole cells
        let grid = PhaseSpaceGrid::new(16, 16, 16.0, 4.0).unwrap();
        let f = pseudo_random_state(&grid);
        let g = advect_x(&f, &grid, 2.0);
        for i in 0..grid.mx {
            for j in 0..grid.mv {
                let s = (grid.v(j) * 2.0) as i64;
                let src = (i as i64 - s).rem_euclid(16) as usize;
                assert_eq!(g.at(&grid, i, j), f.at(&grid, src, j));
            }
        }
        let back = advect_x(&g, &grid, -2.0);
        assert_eq!(back.values, f.values);
    }

    #[test]
    fn x_advection_preserves_constants_and_row_mass() {
        let grid = ts_grid(64);
        let feq = EquilibriumSpec::two_stream();
        let flat = DistributionState::from_fn(&grid, |_, v| feq.eval(v));
        assert_eq!(advect_x(&flat, &grid, 0.037).values, flat.values);

        let f = pseudo_random_state(&grid);
        let g = advect_x(&f, &grid, 0.0731);
        for j in 0..grid.mv {
            let a: f64 = (0..grid.mx).map(|i| f.at(&grid, i, j)).sum();
            let b: f64 = (0..grid.mx).map(|i| g.at(&grid, i, j)).sum();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn charge_density_cases() {
        let grid = ts_grid(256);
        let zero = DistributionState::zeros(&grid);
        assert!(charge_density(&zero, &grid).iter().all(|&r| r == 0.0));

        // The beams at ±2.4 leak ~1.6e-4 of their mass past |v| = 6, so the
        // reference is the integral over the box, by composite Simpson.
        let ts = EquilibriumSpec::two_stream();
        let n = 20_000;
        let h = 2.0 * grid.lv / n as f64;
        let boxed: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * ts.eval(-grid.lv + k as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((1.0 - boxed - 1.59e-4).abs() < 1e-6);
        let flat = DistributionState::from_fn(&grid, |_, v| ts.eval(v));
        for r in charge_density(&flat, &grid) {
            assert!((r - boxed).abs() < 1e-6);
        }
        let pert = PerturbationSpec::MultiplicativeCosine { epsilon: 1e-3, mode: 1 };
        let f = build_initial_condition(&ts, &pert, &grid).unwrap();
        for (i, r) in charge_density(&f, &grid).into_iter().enumerate() {
            assert!((r - boxed * (1.0 + 1e-3 * (0.2 * grid.x(i)).cos())).abs() < 1e-6);
        }
    }

    #[test]
    fn poisson_analytic_cases() {
        let grid = ts_grid(128);
        let k0 = grid.k0();
        let e = solve_poisson(&vec![1.0; grid.mx], &grid);
        assert!(e.values.iter().all(|v| v.abs() < 1e-15));

        let delta = 0.013;
        let rho: Vec<f64> = grid.x_nodes().iter().map(|x| 1.0 + delta * (k0 * x).cos()).collect();
        let e = solve_poisson(&rho, &grid);
        for (i, v) in e.values.iter().enumerate() {
            let want = -(delta / k0) * (k0 * grid.x(i)).sin();
            assert!((v - want).abs() < 1e-10);
        }
        assert!(e.mean().abs() < 1e-15);

        let rho: Vec<f64> = grid.x_nodes().iter().map(|x| 1.0 + delta * (2.0 * k0 * x).sin()).collect();
        let e = solve_poisson(&rho, &grid);
        for (i, v) in e.values.iter().enumerate() {
            let want = (delta / (2.0 * k0)) * (2.0 * k0 * grid.x(i)).cos();
            assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn poisson_residual_band_limited() {
        let grid = ts_grid(128);
        let k0 = grid.k0();
        let rho: Vec<f64> = grid
            .x_nodes()
            .iter()
            .map(|x| 1.0 + 0.01 * (k0 * x).cos() - 0.004 * (3.0 * k0 * x).sin() + 0.002 * (5.0 * k0 * x).cos())
            .collect();
        let mut solver = PoissonSolver::new(&grid);
        let (_, pot) = solver.solve_with_potential(&rho);
        // Spectral second derivative of V must reproduce 1 − ρ; check with a
        // high-order finite-difference stencil on a band-limited signal.
        let dx = grid.dx();
        let n = grid.mx;
        for i in 0..n {
            let at = |o: i64| pot[(i as i64 + o).rem_euclid(n as i64) as usize];
            let d2 = (-at(-3) * 2.0 + at(-2) * 27.0 - at(-1) * 270.0 + at(0) * 490.0 - at(1) * 270.0
                + at(2) * 27.0
                - at(3) * 2.0)
                / (-180.0 * dx * dx);
            assert!((d2 - (1.0 - rho[i])).abs() < 1e-8, "i={i}");
        }
    }

    #[test]
    fn v_advection_cases() {
        let grid = PhaseSpaceGrid::new(16, 32, 10.0, 4.0).unwrap();
        let f = DistributionState::from_fn(&grid, |x, v| (-(v * v)).exp() * (1.0 + 0.3 * x.cos()));
        let zero = FieldSample::zeros(grid.mx);
        let h = vec![0.0; grid.mx];
        let (g, rep) = advect_v(&f, &zero, &h, &grid, 0.1);
        assert_eq!(g.values, f.values);
        assert!(!rep.left_box);

        // constant field, shift of exactly 2 cells (dv = 0.25)
        let field = FieldSample {
            values: vec![5.0; grid.mx],
        };
        let (g, _) = advect_v(&f, &field, &h, &grid, 0.1);
        for i in 0..grid.mx {
            for j in 0..grid.mv {
                let want = if j + 2 < grid.mv { f.at(&grid, i, j + 2) } else { 0.0 };
                assert_eq!(g.at(&grid, i, j), want);
            }
        }

        // control enters with the opposite sign to the self field
        let ctrl = vec![-5.0; grid.mx];
        let (g2, _) = advect_v(&f, &zero, &ctrl, &grid, 0.1);
        assert_eq!(g2.values, g.values);

        // mass conserved when the density vanishes near both edges
        let wide = PhaseSpaceGrid::new(16, 64, 10.0, 8.0).unwrap();
        let fw = DistributionState::from_fn(&wide, |x, v| (-(v * v)).exp() * (1.0 + 0.3 * x.cos()));
        let field = FieldSample {
            values: (0..wide.mx).map(|i| 3.7 * (i as f64).sin()).collect(),
        };
        let (g, _) = advect_v(&fw, &field, &h, &wide, 0.1);
        for i in 0..wide.mx {
            let a: f64 = fw.column(&wide, i).iter().sum();
            let b: f64 = g.column(&wide, i).iter().sum();
            assert!((a - b).abs() < 1e-12);
        }

        let big = FieldSample {
            values: vec![100.0; grid.mx],
        };
        let (_, rep) = advect_v(&f, &big, &h, &grid, 0.1);
        assert!(rep.left_box);
    }

    fn ts_config(eps: f64, t: f64) -> SimulationConfig {
        let grid = ts_grid(256);
        SimulationConfig::new(
            grid,
            0.1,
            t,
            EquilibriumSpec::two_stream(),
            PerturbationSpec::MultiplicativeCosine { epsilon: eps, mode: 1 },
            ControlField::zero(0, grid.k0()),
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let cfg = ts_config(0.0, 2.0).with_record(crate::grid::RecordFlags {
            snapshots: true,
            ..Default::default()
        });
        let trace = run(&cfg).unwrap();
        let snaps = trace.snapshots.unwrap();
        for s in &snaps {
            let dev = s
                .values
                .iter()
                .zip(&snaps[0].values)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(dev <= 1e-12);
        }
        assert!(trace.energy_series.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn single_step_seeds_energy() {
        let trace = run(&ts_config(1e-3, 0.1)).unwrap();
        assert_eq!(trace.energy_series.len(), 2);
        assert!(trace.energy_series[1] > 0.0);
    }

    #[test]
    fn step_matches_stepper() {
        let cfg = ts_config(1e-3, 0.1);
        let f0 = build_initial_condition(&cfg.equilibrium, &cfg.perturbation, &cfg.grid).unwrap();
        let h = ControlField::new(vec![1e-3], vec![-2e-3], cfg.grid.k0()).unwrap();
        let (f1, field) = step(&f0, &h, &cfg.grid, 0.1).unwrap();
        let trace = run_from(&cfg.clone().with_control(h), f0).unwrap();
        assert_eq!(f1.values, trace.final_state.values);
        assert!(field.mean().abs() < 1e-15);
    }
}
