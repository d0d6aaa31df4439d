//! Command-line front end: TOML run configs, figure presets, CSV output,
//! JSON run manifests and gnuplot scripts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod plot;
pub mod presets;
pub mod run;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{RunConfig, Sector};
use crate::output::{RunContext, RunManifest};
use crate::presets::{FigurePreset, PresetPlan, Scale, StepKind};

/// Oracle deviations above this fail `oracle-check`.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("plot error: {0}")]
    Plot(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
    #[error(transparent)]
    Core(#[from] ringqed_core::Error),
}

impl CliError {
    /// Process exit code: 2 config, 3 numerical tolerance, 4 resource cap.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Plot(_) => 2,
            CliError::Io(_) => 1,
            CliError::Tolerance(_) => 3,
            CliError::Core(e) if e.is_resource_cap() => 4,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ringqed",
    version,
    about = "Two atoms in a multimode ring cavity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration with [cavity], [run], [initial], [analysis].
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, default_value = "ringqed-out")]
    pub out: PathBuf,
    /// Override one key, e.g. `--set cavity.N_freqs=21`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-excitation trajectory, kinks and mode table.
    SimulateSingle(Common),
    /// Double-excitation trajectory and C1 sign intervals.
    SimulateDouble(Common),
    /// Time-averaged observable against atomic separation.
    Sweep(Common),
    /// Power spectrum of the observable over the averaging window.
    Spectrum(Common),
    /// Compare closed-form concurrences with the Wootters construction.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        single_samples: usize,
        #[arg(long, default_value_t = 200)]
        double_samples: usize,
    },
    /// Reproduce one figure.
    Preset {
        #[arg(value_enum)]
        name: FigurePreset,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Scale::Desk)]
        scale: Scale,
        /// Lift the dimension guard that protects paper-scale runs.
        #[arg(long)]
        allow_large: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateSingle(_) => "simulate-single",
            Command::SimulateDouble(_) => "simulate-double",
            Command::Sweep(_) => "sweep",
            Command::Spectrum(_) => "spectrum",
            Command::OracleCheck { .. } => "oracle-check",
            Command::Preset { .. } => "preset",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::SimulateSingle(c)
            | Command::SimulateDouble(c)
            | Command::Sweep(c)
            | Command::Spectrum(c) => c,
            Command::OracleCheck { common, .. } | Command::Preset { common, .. } => common,
        }
    }
}

fn init_threads(n: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Executes one invocation. The manifest is written even when the run
/// fails after the output directory exists.
pub fn run(cli: Cli) -> Result<RunManifest, CliError> {
    let common = cli.command.common().clone();
    init_threads(common.threads)?;
    let (cfg, plan) = match &cli.command {
        Command::Preset {
            name,
            scale,
            allow_large,
            common,
        } => {
            if common.config.is_some() {
                return Err(CliError::Config(
                    "--config: presets pin their own configuration, use --set to adjust".into(),
                ));
            }
            let mut plan = presets::plan(*name, *scale);
            plan.customize(&common.set, *allow_large)?;
            (plan.steps[0].config.clone(), Some(plan))
        }
        _ => (
            RunConfig::load(common.config.as_deref(), &common.set)?,
            None,
        ),
    };
    let mut ctx = RunContext::new(&common.out)?;
    let result = match &cli.command {
        Command::SimulateSingle(_) => simulate_cmd(&mut ctx, &cfg, Sector::Single),
        Command::SimulateDouble(_) => simulate_cmd(&mut ctx, &cfg, Sector::Double),
        Command::Sweep(_) => sweep_cmd(&mut ctx, &cfg),
        Command::Spectrum(_) => spectrum_cmd(&mut ctx, &cfg),
        Command::OracleCheck {
            seed,
            single_samples,
            double_samples,
            ..
        } => oracle_cmd(&mut ctx, &cfg, *seed, *single_samples, *double_samples),
        Command::Preset { .. } => preset_cmd(&mut ctx, plan.as_ref().expect("plan")),
    };
    let preset = plan
        .as_ref()
        .map(|p| (p.preset.name(), p.scale.name().to_string()));
    let summary = match &result {
        Ok(v) => v.clone(),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let manifest = ctx.finish(
        cli.command.name(),
        preset.as_ref().map(|(a, b)| (a.as_str(), b.as_str())),
        &cfg,
        summary,
    )?;
    result.map(|_| manifest)
}

fn simulate_cmd(ctx: &mut RunContext, cfg: &RunConfig, sector: Sector) -> Result<Value, CliError> {
    let sim = run::simulate(ctx, "trajectory", cfg, sector)?;
    run::write_trajectory(ctx, "trajectory.csv", &sim)?;
    run::write_modes(ctx, "modes.csv", cfg)?;
    let mut summary = run::trajectory_summary(&sim, cfg)?;
    let extra = match sector {
        Sector::Single => (
            "kinks_over_trt",
            run::write_kinks(ctx, "kinks.csv", &sim, cfg)?,
        ),
        Sector::Double => (
            "c1_intervals",
            run::write_esd(ctx, "intervals.csv", &sim, cfg)?,
        ),
    };
    summary[extra.0] = extra.1;
    Ok(summary)
}

fn sweep_cmd(ctx: &mut RunContext, cfg: &RunConfig) -> Result<Value, CliError> {
    let sector = cfg.sector(Sector::Single)?;
    let res = run::run_sweep(ctx, "sweep", "sweep.csv", cfg, sector)?;
    Ok(json!({ "kind": res.kind, "points": res.rows.len() }))
}

fn peaks_json(peaks: &[ringqed_core::analysis::SpectrumPoint]) -> Value {
    json!(peaks.iter().map(|p| p.omega_fsr).collect::<Vec<_>>())
}

fn spectrum_cmd(ctx: &mut RunContext, cfg: &RunConfig) -> Result<Value, CliError> {
    let sector = cfg.sector(Sector::Single)?;
    let sim = run::simulate(ctx, "spectrum", cfg, sector)?;
    let peaks = run::write_spectrum(ctx, "spectrum.csv", &sim, cfg)?;
    Ok(json!({
        "observable": cfg.observable(sector)?,
        "peaks_fsr_units": peaks_json(&peaks),
    }))
}

fn oracle_cmd(
    ctx: &mut RunContext,
    cfg: &RunConfig,
    seed: u64,
    single: usize,
    double: usize,
) -> Result<Value, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report =
        ringqed_core::oracle::oracle_check(&mut rng, single, double, cfg.cavity.mode_count())?;
    let value = json!({ "seed": seed, "tolerance": ORACLE_TOL, "report": report });
    ctx.write_text(
        "oracle.json",
        &(serde_json::to_string_pretty(&value).expect("json") + "\n"),
    )?;
    println!("{}", serde_json::to_string(&report).expect("json"));
    let worst = report
        .max_dev_single
        .max(report.max_dev_double)
        .max(report.max_dev_dicke);
    if worst > ORACLE_TOL {
        return Err(CliError::Tolerance(format!(
            "oracle deviation {worst:e} exceeds {ORACLE_TOL:e}"
        )));
    }
    Ok(value)
}

fn preset_cmd(ctx: &mut RunContext, plan: &PresetPlan) -> Result<Value, CliError> {
    if plan.scale == Scale::Paper {
        eprintln!(
            "warning: {} at paper scale uses the published mode counts and windows; \
             expect long runtimes",
            plan.preset.name()
        );
    }
    ctx.notes.extend(plan.notes.iter().cloned());
    let mut summary = serde_json::Map::new();
    summary.insert("description".into(), json!(plan.description));
    for step in &plan.steps {
        let file = format!("{}.csv", step.label);
        let cfg = &step.config;
        let value = match step.kind {
            StepKind::Trajectory {
                coherence,
                spectrum,
            } => {
                let sim = run::simulate(ctx, &step.label, cfg, step.sector)?;
                run::write_trajectory(ctx, &file, &sim)?;
                let mut v = run::trajectory_summary(&sim, cfg)?;
                match step.sector {
                    Sector::Single => {
                        v["kinks_over_trt"] =
                            run::write_kinks(ctx, &format!("{}_kinks.csv", step.label), &sim, cfg)?
                    }
                    Sector::Double => {
                        v["c1_intervals"] = run::write_esd(
                            ctx,
                            &format!("{}_intervals.csv", step.label),
                            &sim,
                            cfg,
                        )?
                    }
                }
                if coherence {
                    run::write_coherence(ctx, "coherence.csv", &sim)?;
                }
                if spectrum {
                    let peaks = run::write_spectrum(ctx, "spectrum.csv", &sim, cfg)?;
                    v["peaks_fsr_units"] = peaks_json(&peaks);
                }
                v
            }
            StepKind::Sweep => {
                let res = run::run_sweep(ctx, &step.label, &file, cfg, step.sector)?;
                json!({ "kind": res.kind, "rows": res.rows })
            }
        };
        summary.insert(step.label.clone(), value);
    }
    let script = plot::emit_plot_script(ctx.dir(), &plan.plot)?;
    ctx.write_text(&format!("{}.gp", plan.preset.name()), &script)?;
    Ok(Value::Object(summary))
}

/// Reads back a manifest written by [`run`].
pub fn read_manifest(dir: &Path) -> Result<Value, CliError> {
    let path = dir.join(output::MANIFEST_NAME);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
