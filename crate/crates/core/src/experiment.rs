//! Config-file driven experiments behind the `vpcontrol` binary: resolves a
//! JSON config plus command-line overrides against a problem preset, runs
//! one of the four subcommands, and writes its artifact directory.

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::control::{ControlField, ParameterMask};
use crate::dispersion::{self, DispersionSettings, LaplaceHorizon};
use crate::error::{Error, Result};
use crate::grid::{PhaseSpaceGrid, RecordFlags, SimulationConfig};
use crate::io;
use crate::landscape::{self, Axis, LandscapePreset, LandscapeSpec};
use crate::objectives::{self, ObjectiveKind};
use crate::optimize::{self, Method, OptimizerConfig, PdeObjective};
use crate::preset::{InitBox, Problem, DEFAULT_DT, DEFAULT_EPSILON};
use crate::solver;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const KNOWN_KEYS: [&str; 16] = [
    "preset", "grid", "dt", "T", "epsilon", "control", "objective", "method", "init", "sweep", "workers", "out",
    "parametrization", "optimizer", "horizon", "growth_window",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parametrization {
    Under,
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Far,
    Mid,
    Near,
    Vector,
    Guess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub kind: InitKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlSource {
    File { from: PathBuf },
    Inline {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default)]
        k0: Option<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub stepsize: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_iters: usize,
    pub fd_step: f64,
    pub grad_tol: f64,
    pub f_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub preset: String,
    pub objectives: Vec<ObjectiveKind>,
    /// Per-axis samples overriding the preset resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Custom axes replace the preset's; `order` is then required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<Axis>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

/// Fully resolved experiment; serializes to a config that reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Problem,
    pub grid: PhaseSpaceGrid,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub epsilon: f64,
    pub control: Option<ControlField>,
    pub objective: ObjectiveKind,
    pub method: Method,
    pub parametrization: Parametrization,
    pub init: InitSpec,
    pub optimizer: OptimizerSettings,
    pub sweep: SweepSettings,
    pub horizon: LaplaceHorizon,
    pub growth_window: (f64, f64),
    pub workers: usize,
    pub out: PathBuf,
}

/// Command-line values that win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    /// Extra `key → value` pairs merged into the config object.
    pub values: BTreeMap<String, Value>,
}

fn get<T: serde::de::DeserializeOwned>(obj: &serde_json::Map<String, Value>, key: &str) -> Result<Option<T>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::Config(format!("key '{key}': {e}"))),
    }
}

impl ExperimentConfig {
    /// Resolves a (possibly empty) JSON config with overrides.
    pub fn resolve(config: Option<&Value>, overrides: &Overrides, base_dir: &Path) -> Result<Self> {
        let mut obj = match config {
            Some(Value::Object(m)) => m.clone(),
            Some(Value::Null) | None => serde_json::Map::new(),
            Some(_) => return Err(Error::Config("config file must hold a JSON object".into())),
        };
        for (k, v) in &overrides.values {
            obj.insert(k.clone(), v.clone());
        }
        if let Some(p) = &overrides.preset {
            obj.insert("preset".into(), Value::String(p.clone()));
        }
        for key in obj.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                warn!("ignoring unknown config key '{key}'");
            }
        }

        let preset: Problem = match obj.get("preset") {
            Some(Value::String(s)) => s.parse()?,
            None => Problem::TwoStream,
            Some(other) => return Err(Error::Config(format!("preset must be a string, got {other}"))),
        };
        let grid = get::<PhaseSpaceGrid>(&obj, "grid")?.unwrap_or_else(|| preset.grid());
        let grid = PhaseSpaceGrid::new(grid.mx, grid.mv, grid.lx, grid.lv)?;
        let dt = get(&obj, "dt")?.unwrap_or(DEFAULT_DT);
        let t_final = get(&obj, "T")?.unwrap_or(preset.final_time());
        let epsilon = get(&obj, "epsilon")?.unwrap_or(DEFAULT_EPSILON);

        let control = match get::<ControlSource>(&obj, "control")? {
            None => None,
            Some(ControlSource::Inline { n, k0, a, b }) => {
                if a.len() != n || b.len() != n {
                    return Err(Error::Config(format!("control declares N = {n} with {} / {} coefficients", a.len(), b.len())));
                }
                Some(ControlField::new(a, b, k0.unwrap_or(grid.k0()))?)
            }
            Some(ControlSource::File { from }) => {
                let path = if from.is_absolute() { from } else { base_dir.join(from) };
                Some(read_control_file(&path)?)
            }
        };

        let objective = get(&obj, "objective")?.unwrap_or(ObjectiveKind::Eet);
        let method = match obj.get("method") {
            Some(Value::String(s)) => s.parse()?,
            None => Method::ConstantGd,
            Some(other) => return Err(Error::Config(format!("method must be a string, got {other}"))),
        };
        let parametrization = get(&obj, "parametrization")?.unwrap_or(Parametrization::Under);

        let mut init = get::<InitSpec>(&obj, "init")?.unwrap_or(InitSpec {
            kind: InitKind::Near,
            seed: 0,
            values: None,
        });
        if let Some(seed) = overrides.seed {
            init.seed = seed;
        }
        if init.kind == InitKind::Vector && init.values.is_none() {
            return Err(Error::Config("init kind 'vector' needs 'values'".into()));
        }

        let default_opt = OptimizerSettings {
            stepsize: preset.gd_stepsize(),
            c1: 1e-4,
            c2: 0.9,
            max_iters: 200,
            fd_step: objective.default_fd_step(),
            grad_tol: 0.0,
            f_tol: 0.0,
        };
        let optimizer = match obj.get("optimizer") {
            Some(Value::Object(o)) => {
                let mut merged = serde_json::to_value(&default_opt)?;
                for (k, v) in o {
                    merged[k] = v.clone();
                }
                serde_json::from_value(merged).map_err(|e| Error::Config(format!("optimizer: {e}")))?
            }
            None | Some(Value::Null) => default_opt,
            Some(other) => return Err(Error::Config(format!("optimizer must be an object, got {other}"))),
        };

        let default_sweep = SweepSettings {
            preset: match preset {
                Problem::TwoStream => "ts-1d-fig".into(),
                Problem::BumpOnTail => "bot-1d-fig".into(),
            },
            objectives: ObjectiveKind::MAIN.to_vec(),
            samples: None,
            axes: None,
            order: None,
        };
        let sweep = match obj.get("sweep") {
            Some(Value::Object(o)) => {
                let mut merged = serde_json::to_value(&default_sweep)?;
                for (k, v) in o {
                    merged[k] = v.clone();
                }
                serde_json::from_value(merged).map_err(|e| Error::Config(format!("sweep: {e}")))?
            }
            None | Some(Value::Null) => default_sweep,
            Some(other) => return Err(Error::Config(format!("sweep must be an object, got {other}"))),
        };

        let horizon = match obj.get("horizon") {
            Some(Value::String(s)) if s == "converged" => LaplaceHorizon::Converged,
            Some(Value::String(s)) if s == "truncated" => LaplaceHorizon::default(),
            Some(v @ Value::Object(_)) => serde_json::from_value(v.clone())?,
            None | Some(Value::Null) => LaplaceHorizon::default(),
            Some(other) => return Err(Error::Config(format!("unrecognized horizon {other}"))),
        };
        let growth_window = get(&obj, "growth_window")?.unwrap_or(preset.growth_window());
        let workers = overrides.workers.or(get(&obj, "workers")?).unwrap_or(0);
        let out = overrides
            .out
            .clone()
            .or(get(&obj, "out")?)
            .unwrap_or_else(|| PathBuf::from("out"));

        let cfg = Self {
            preset,
            grid,
            dt,
            t_final,
            epsilon,
            control,
            objective,
            method,
            parametrization,
            init,
            optimizer,
            sweep,
            horizon,
            growth_window,
            workers,
            out,
        };
        cfg.simulation()?;
        Ok(cfg)
    }

    /// Uncontrolled simulation config (the control is attached per command).
    pub fn simulation(&self) -> Result<SimulationConfig> {
        self.preset.config_with(self.grid, self.dt, self.t_final, self.epsilon)
    }

    pub fn dispersion_settings(&self) -> DispersionSettings {
        DispersionSettings::default().with_horizon(self.horizon)
    }

    pub fn mask(&self) -> ParameterMask {
        match self.parametrization {
            Parametrization::Under => self.preset.under_mask(),
            Parametrization::Over => self.preset.over_mask(),
        }
    }
}

/// Reads a control field from either a bare ControlField JSON or a guess
/// report that holds one under `field`.
pub fn read_control_file(path: &Path) -> Result<ControlField> {
    let v: Value = io::read_json(path)?;
    let inner = v.get("field").cloned().unwrap_or(v);
    Ok(serde_json::from_value(inner)?)
}

/// Outcome of a subcommand: the JSON summary and whether it failed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    pub failed: bool,
}

fn write_manifest(cfg: &ExperimentConfig, command: &str) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    let manifest = json!({
        "tool": "vpcontrol",
        "version": VERSION,
        "command": command,
        "config": cfg,
    });
    io::write_json(&cfg.out.join("manifest.json"), &manifest)
}

fn finish(cfg: &ExperimentConfig, summary: Value, failed: bool) -> Result<Outcome> {
    io::write_json(&cfg.out.join("summary.json"), &summary)?;
    Ok(Outcome { summary, failed })
}

/// Runs the solver and writes energy, field history, final state and a
/// summary into `dir`.
fn simulate_into(dir: &Path, sim: &SimulationConfig, window: (f64, f64)) -> Result<(Value, bool)> {
    fs::create_dir_all(dir)?;
    let cfg = sim.clone().with_record(RecordFlags {
        field_history: true,
        ..Default::default()
    });
    match solver::run(&cfg) {
        Ok(trace) => {
            io::write_energy_csv(&dir.join("energy.csv"), &trace.energy_series, cfg.dt)?;
            if let Some(h) = &trace.field_history {
                io::write_field_history_csv(&dir.join("field_history.csv"), h, &cfg.grid, cfg.dt)?;
            }
            io::write_state(&dir.join("final_state.f64"), &trace.final_state, &cfg.grid)?;
            let growth = io::fit_growth_rate(&trace.energy_series, cfg.dt, window).ok();
            Ok((
                json!({
                    "status": "ok",
                    "final_energy": trace.final_energy(),
                    "initial_energy": trace.energy_series[0],
                    "growth_rate": growth,
                    "growth_window": [window.0, window.1],
                    "blowup_warnings": trace.blowup_warnings,
                    "n_steps": cfg.n_steps,
                    "control": cfg.control,
                }),
                false,
            ))
        }
        Err(e) => Ok((json!({ "status": "failed", "error": e.to_string() }), true)),
    }
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Outcome> {
    write_manifest(cfg, "simulate")?;
    let grid = cfg.grid;
    let control = cfg.control.clone().unwrap_or_else(|| ControlField::zero(0, grid.k0()));
    let sim = cfg.simulation()?.with_control(control);
    let (summary, failed) = simulate_into(&cfg.out, &sim, cfg.growth_window)?;
    finish(cfg, summary, failed)
}

pub fn cmd_guess(cfg: &ExperimentConfig) -> Result<Outcome> {
    write_manifest(cfg, "guess")?;
    let sim = cfg.simulation()?;
    let settings = cfg.dispersion_settings();
    let modes = [sim.perturbation.mode()];
    let result = dispersion::synthesize_guess(&sim.equilibrium, &sim.perturbation, &cfg.grid, &modes, &settings);
    let summary = match result {
        Ok(guess) => {
            let status = if guess.is_trivial() { "stable-trivial" } else { "ok" };
            io::write_json(&cfg.out.join("roots.json"), &guess.roots)?;
            io::write_json(&cfg.out.join("control.json"), &guess.field)?;
            json!({
                "status": status,
                "horizon": settings.horizon,
                "roots": guess.roots,
                "field": guess.field,
            })
        }
        Err(Error::NoUnstableRoot { mode, best_residual }) => json!({
            "status": "stable",
            "mode": mode,
            "best_residual": best_residual,
            "field": ControlField::zero(modes[0], cfg.grid.k0()),
        }),
        Err(e) => return Err(e),
    };
    io::write_json(&cfg.out.join("guess.json"), &summary)?;
    finish(cfg, summary, false)
}

/// Start vector for the optimizer in the packed layout of `mask`.
pub fn initial_params(cfg: &ExperimentConfig, mask: &ParameterMask) -> Result<Vec<f64>> {
    let n = mask.n;
    let mut init = match cfg.init.kind {
        InitKind::Far => optimize::sample_init(mask, cfg.preset.init_box(InitBox::Far), cfg.init.seed),
        InitKind::Mid => optimize::sample_init(mask, cfg.preset.init_box(InitBox::Mid), cfg.init.seed),
        InitKind::Near => optimize::sample_init(mask, cfg.preset.init_box(InitBox::Near), cfg.init.seed),
        InitKind::Vector => {
            let v = cfg.init.values.clone().unwrap_or_default();
            if v.len() != 2 * n {
                return Err(Error::LengthMismatch {
                    expected: 2 * n,
                    got: v.len(),
                });
            }
            v
        }
        InitKind::Guess => {
            let sim = cfg.simulation()?;
            let g = dispersion::synthesize_guess(
                &sim.equilibrium,
                &sim.perturbation,
                &cfg.grid,
                &[sim.perturbation.mode()],
                &cfg.dispersion_settings(),
            )?;
            let mut v = vec![0.0; 2 * n];
            let k = g.field.order().min(n);
            v[..k].copy_from_slice(&g.field.a[..k]);
            v[n..n + k].copy_from_slice(&g.field.b[..k]);
            v
        }
    };
    for (i, v) in init.iter_mut().enumerate() {
        if !mask.is_free(i) {
            *v = 0.0;
        }
    }
    Ok(init)
}

pub fn cmd_optimize(cfg: &ExperimentConfig) -> Result<Outcome> {
    write_manifest(cfg, "optimize")?;
    let mask = cfg.mask();
    let sim = cfg.simulation()?;
    let objective = PdeObjective::new(cfg.objective, sim.clone(), mask.n);
    let f = |p: &[f64]| objective.eval(p);

    let mut oc = OptimizerConfig::new(cfg.method, initial_params(cfg, &mask)?, mask.clone());
    let s = &cfg.optimizer;
    oc.stepsize = s.stepsize;
    oc.c1 = s.c1;
    oc.c2 = s.c2;
    oc.max_iters = s.max_iters;
    oc.fd_step = s.fd_step;
    oc.grad_tol = s.grad_tol;
    oc.f_tol = s.f_tol;

    let uncontrolled = objectives::try_evaluate(cfg.objective, &sim)?;
    let uncontrolled_ee = objectives::try_evaluate(ObjectiveKind::Ee, &sim)?;
    let history = optimize::optimize(&f, &oc)?;
    let names: Vec<String> = (0..mask.full_len()).map(|i| mask.param_name(i)).collect();
    io::write_history_csv(&cfg.out.join("history.csv"), &history, &names)?;
    io::write_json(&cfg.out.join("history.json"), &history)?;

    let field = objective.field(history.final_params())?;
    io::write_json(&cfg.out.join("control.json"), &field)?;
    let (final_run, run_failed) =
        simulate_into(&cfg.out.join("final"), &sim.clone().with_control(field.clone()), cfg.growth_window)?;
    let final_ee = final_run.get("final_energy").and_then(Value::as_f64);
    let non_physical = history.non_physical();
    let failed = history.status.is_failure() || run_failed;
    if non_physical {
        warn!("optimized coefficients exceed {}: non-physical regime", optimize::NON_PHYSICAL_THRESHOLD);
    }
    let summary = json!({
        "status": if failed { "failed" } else { "ok" },
        "optimizer_status": history.status,
        "objective": cfg.objective,
        "method": cfg.method,
        "iterations": history.records.len().saturating_sub(1),
        "initial_objective": history.records.first().map(|r| r.objective),
        "final_objective": history.final_objective(),
        "uncontrolled_objective": uncontrolled,
        "final_energy": final_ee,
        "uncontrolled_final_energy": uncontrolled_ee,
        "energy_ratio": final_ee.map(|e| e / uncontrolled_ee),
        "max_abs_param": history.max_abs_param(),
        "regime": if non_physical { "non-physical" } else { "physical" },
        "monotone_fraction": history.monotone_fraction(),
        "wall_time": history.wall_time,
        "field": field,
    });
    finish(cfg, summary, failed)
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    write_manifest(cfg, "sweep")?;
    let s = &cfg.sweep;
    let sim = cfg.simulation()?;
    let spec = match &s.axes {
        Some(axes) => {
            let order = s
                .order
                .ok_or_else(|| Error::Config("custom sweep axes need 'order'".into()))?;
            LandscapeSpec {
                objectives: s.objectives.clone(),
                base: sim,
                order,
                base_params: vec![0.0; 2 * order],
                axes: axes.clone(),
                preset: None,
            }
        }
        None => {
            let mut preset = LandscapePreset::by_name(&s.preset)?;
            if preset.problem != cfg.preset {
                return Err(Error::Config(format!(
                    "sweep preset '{}' belongs to {}, not {}",
                    s.preset, preset.problem, cfg.preset
                )));
            }
            if let Some(n) = s.samples {
                preset = preset.with_samples(n)?;
            }
            preset.spec(sim, s.objectives.clone())
        }
    };
    spec.validate()?;
    info!("sweeping {} cells for {:?}", spec.cells(), spec.objectives);
    let results = landscape::sweep(&spec)?;
    let mut files = Vec::new();
    let mut any_failed = false;
    for r in &results {
        let csv = cfg.out.join(format!("{}.csv", r.objective));
        io::write_landscape_csv(&csv, r)?;
        let minima = match r.axes.len() {
            1 => r.count_local_minima().ok().map(|c| json!(c)),
            _ => r.local_minima_2d().ok().map(|c| json!(c)),
        };
        let sidecar = json!({
            "objective": r.objective,
            "preset": spec.preset,
            "order": spec.order,
            "axes": r.axes,
            "base_params": spec.base_params,
            "param_names": r.axes.iter().map(|a| ParameterMask::all(spec.order).param_name(a.index)).collect::<Vec<_>>(),
            "failed_cells": r.failed_cells(),
            "argmin": r.argmin().map(|(c, v)| json!({"cell": c, "coords": r.coords(c), "value": v})),
            "local_minima": minima,
            "grid": spec.base.grid,
            "dt": spec.base.dt,
            "T": spec.base.final_time(),
            "equilibrium": spec.base.equilibrium,
            "perturbation": spec.base.perturbation,
        });
        io::write_json(&cfg.out.join(format!("{}.json", r.objective)), &sidecar)?;
        any_failed |= r.all_failed();
        files.push(csv.file_name().map(|f| f.to_string_lossy().into_owned()));
    }
    let summary = json!({
        "status": if any_failed { "failed" } else { "ok" },
        "cells": spec.cells(),
        "files": files,
        "failed_cells": results.iter().map(|r| (r.objective.name(), r.failed_cells())).collect::<BTreeMap<_, _>>(),
    });
    finish(cfg, summary, any_failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_from_empty_config() {
        let cfg = ExperimentConfig::resolve(None, &Overrides::default(), Path::new(".")).unwrap();
        assert_eq!(cfg.preset, Problem::TwoStream);
        assert_eq!(cfg.grid.mx, 256);
        assert_eq!(cfg.optimizer.stepsize, 1e-8);
        assert_eq!(cfg.sweep.preset, "ts-1d-fig");
    }

    #[test]
    fn manifest_config_resolves_to_itself() {
        let raw = json!({
            "preset": "bump-on-tail",
            "epsilon": 0.002,
            "control": {"N": 1, "a": [1e-3], "b": [-2e-4]},
            "objective": "klt",
            "method": "wolfe",
            "init": {"kind": "far", "seed": 11},
            "optimizer": {"max_iters": 7},
            "sweep": {"preset": "bot-2d-near", "samples": 5},
            "horizon": "converged",
            "mystery": 1
        });
        let cfg = ExperimentConfig::resolve(Some(&raw), &Overrides::default(), Path::new(".")).unwrap();
        assert_eq!(cfg.optimizer.max_iters, 7);
        assert_eq!(cfg.optimizer.stepsize, 1e-9);
        assert_eq!(cfg.control.as_ref().unwrap().k0, cfg.grid.k0());
        let again = serde_json::to_value(&cfg).unwrap();
        let cfg2 = ExperimentConfig::resolve(Some(&again), &Overrides::default(), Path::new(".")).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn overrides_win() {
        let raw = json!({"preset": "two-stream", "init": {"kind": "mid", "seed": 1}});
        let ov = Overrides {
            preset: Some("bump-on-tail".into()),
            seed: Some(9),
            workers: Some(3),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(Some(&raw), &ov, Path::new(".")).unwrap();
        assert_eq!(cfg.preset, Problem::BumpOnTail);
        assert_eq!(cfg.init.seed, 9);
        assert_eq!(cfg.workers, 3);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for raw in [
            json!({"preset": "plasma"}),
            json!({"dt": 0.1, "T": 30.05}),
            json!({"objective": "energy"}),
            json!({"init": {"kind": "vector", "seed": 0}}),
            json!([1, 2]),
        ] {
            assert!(ExperimentConfig::resolve(Some(&raw), &Overrides::default(), Path::new(".")).is_err(), "{raw}");
        }
    }

    #[test]
    fn guess_init_respects_mask() {
        let raw = json!({"init": {"kind": "guess", "seed": 0}});
        let cfg = ExperimentConfig::resolve(Some(&raw), &Overrides::default(), Path::new(".")).unwrap();
        let mask = cfg.mask();
        let v = initial_params(&cfg, &mask).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(&v[..2], &[0.0, 0.0]);
        assert!(v[2] < 0.0 && v[3] == 0.0);
    }
}
