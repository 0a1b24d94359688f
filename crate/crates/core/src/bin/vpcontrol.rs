use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use vpcontrol::experiment::{self, ExperimentConfig, Outcome, Overrides};
use vpcontrol::{io, Error};

/// Suppress Vlasov-Poisson instabilities with a static external field.
#[derive(Parser, Debug)]
#[command(name = "vpcontrol", version, about)]
struct Cli {
    /// JSON config file; command-line flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Problem preset: two-stream or bump-on-tail.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Artifact directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for random initializations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Perturbation amplitude.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Final time.
    #[arg(long = "final-time", global = true)]
    final_time: Option<f64>,
    /// Time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Grid resolution used for both axes.
    #[arg(long, global = true)]
    resolution: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the solver and dump energy, field history and final state.
    Simulate {
        /// Control field JSON (a bare field or a guess report).
        #[arg(long)]
        control: Option<PathBuf>,
        /// Growth-rate fit window.
        #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
        window: Option<Vec<f64>>,
    },
    /// Dispersion analysis and the analytic control field.
    Guess {
        /// Integrate the Laplace transforms to convergence instead of the
        /// short default horizon.
        #[arg(long)]
        converged: bool,
    },
    /// Gradient descent over the control coefficients.
    Optimize {
        #[arg(long)]
        objective: Option<String>,
        /// constant-gd | wolfe-gd
        #[arg(long)]
        method: Option<String>,
        /// far | mid | near | guess
        #[arg(long)]
        init: Option<String>,
        /// under | over
        #[arg(long)]
        parametrization: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        stepsize: Option<f64>,
    },
    /// Objective landscape sweep.
    Sweep {
        /// Named geometry, e.g. ts-1d-fig or bot-2d-near.
        #[arg(long = "sweep-preset")]
        sweep_preset: Option<String>,
        /// Comma-separated objectives.
        #[arg(long, value_delimiter = ',')]
        objectives: Option<Vec<String>>,
        /// Samples per axis.
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn merge_object(values: &mut std::collections::BTreeMap<String, Value>, key: &str, config: Option<&Value>, patch: Value) {
    let mut base = config
        .and_then(|c| c.get(key))
        .cloned()
        .unwrap_or_else(|| json!({}));
    if let (Value::Object(b), Value::Object(p)) = (&mut base, patch) {
        for (k, v) in p {
            b.insert(k, v);
        }
    }
    values.insert(key.into(), base);
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let (config, base_dir) = match &cli.config {
        Some(p) => (Some(io::read_json::<Value>(p)?), p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (None, PathBuf::from(".")),
    };
    let mut ov = Overrides {
        preset: cli.preset.clone(),
        out: cli.out.clone(),
        workers: cli.workers,
        seed: cli.seed,
        ..Default::default()
    };
    let c = &cli.common;
    if let Some(e) = c.epsilon {
        ov.values.insert("epsilon".into(), json!(e));
    }
    if let Some(t) = c.final_time {
        ov.values.insert("T".into(), json!(t));
    }
    if let Some(dt) = c.dt {
        ov.values.insert("dt".into(), json!(dt));
    }
    if let Some(m) = c.resolution {
        // resolve the box from the preset first
        let preset = cli
            .preset
            .clone()
            .or_else(|| config.as_ref()?.get("preset")?.as_str().map(str::to_string))
            .unwrap_or_else(|| "two-stream".into());
        let (lx, lv) = preset.parse::<vpcontrol::Problem>()?.box_size();
        ov.values.insert("grid".into(), json!({"Mx": m, "Mv": m, "Lx": lx, "Lv": lv}));
    }
    match &cli.command {
        Command::Simulate { control, window } => {
            if let Some(p) = control {
                let abs = std::path::absolute(p)?;
                ov.values.insert("control".into(), json!({ "from": abs }));
            }
            if let Some(w) = window {
                ov.values.insert("growth_window".into(), json!([w[0], w[1]]));
            }
        }
        Command::Guess { converged } => {
            if *converged {
                ov.values.insert("horizon".into(), json!("converged"));
            }
        }
        Command::Optimize {
            objective,
            method,
            init,
            parametrization,
            max_iters,
            stepsize,
        } => {
            if let Some(o) = objective {
                ov.values.insert("objective".into(), json!(o));
            }
            if let Some(m) = method {
                ov.values.insert("method".into(), json!(m));
            }
            if let Some(p) = parametrization {
                ov.values.insert("parametrization".into(), json!(p));
            }
            if let Some(i) = init {
                merge_object(&mut ov.values, "init", config.as_ref(), json!({"kind": i, "seed": cli.seed.unwrap_or(0)}));
            }
            let mut patch = serde_json::Map::new();
            if let Some(n) = max_iters {
                patch.insert("max_iters".into(), json!(n));
            }
            if let Some(s) = stepsize {
                patch.insert("stepsize".into(), json!(s));
            }
            if !patch.is_empty() {
                merge_object(&mut ov.values, "optimizer", config.as_ref(), Value::Object(patch));
            }
        }
        Command::Sweep {
            sweep_preset,
            objectives,
            samples,
        } => {
            let mut patch = serde_json::Map::new();
            if let Some(p) = sweep_preset {
                patch.insert("preset".into(), json!(p));
            }
            if let Some(o) = objectives {
                patch.insert("objectives".into(), json!(o));
            }
            if let Some(n) = samples {
                patch.insert("samples".into(), json!(n));
            }
            if !patch.is_empty() {
                merge_object(&mut ov.values, "sweep", config.as_ref(), Value::Object(patch));
            }
        }
    }

    let cfg = ExperimentConfig::resolve(config.as_ref(), &ov, &base_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Simulate { .. } => experiment::cmd_simulate(&cfg),
        Command::Guess { .. } => experiment::cmd_guess(&cfg),
        Command::Optimize { .. } => experiment::cmd_optimize(&cfg),
        Command::Sweep { .. } => experiment::cmd_sweep(&cfg),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = cli.out.clone();
    match run(cli) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
            if outcome.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let diag = json!({"status": "failed", "error": e.to_string()});
            if let Some(dir) = out {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let _ = io::write_json(&dir.join("summary.json"), &diag);
                }
            }
            ExitCode::from(2)
        }
    }
}
