//! Figure presets. Each one pins geometry, initial state, time range and the
//! analysis chain; desk scale shrinks mode counts and averaging windows.

use clap::ValueEnum;
use ringqed_core::{CouplingScaling, Preset};
use serde::Serialize;
use toml::Value;

use crate::config::{apply_override, RunConfig, Sector};
use crate::plot::{Curve, Panel, PlotSpec};
use crate::CliError;

/// Dimension cap applied at paper scale unless large runs are allowed.
pub const PAPER_SCALE_GUARD_CAP: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigurePreset {
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
    Fig6a,
    Fig6b,
    Fig7a,
    Fig7b,
    Fig8,
    Fig9a,
    Fig9b,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
}

impl FigurePreset {
    pub fn name(self) -> String {
        self.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    }
}

#[derive(Clone, Debug)]
pub enum StepKind {
    /// Trajectory CSV plus kinks (single) or sign intervals (double).
    Trajectory {
        coherence: bool,
        spectrum: bool,
    },
    Sweep,
}

#[derive(Clone, Debug)]
pub struct Step {
    pub label: String,
    pub sector: Sector,
    pub config: RunConfig,
    pub kind: StepKind,
}

#[derive(Clone, Debug)]
pub struct PresetPlan {
    pub preset: FigurePreset,
    pub scale: Scale,
    pub description: String,
    pub steps: Vec<Step>,
    pub plot: PlotSpec,
    pub notes: Vec<String>,
}

const L: f64 = 3.48e3;

fn base(n_freqs: usize, x: f64, initial: Preset, t_end_trt: f64, dt_trt: f64) -> RunConfig {
    let mut c = RunConfig::default();
    c.cavity.n_freqs = n_freqs;
    c.cavity = c.cavity.with_separation(x);
    c.initial.preset = Some(initial.to_string());
    c.run.t_end_trt = t_end_trt;
    c.run.dt_trt = dt_trt;
    c
}

fn trajectory(label: &str, sector: Sector, config: RunConfig) -> Step {
    Step {
        label: label.into(),
        sector,
        config,
        kind: StepKind::Trajectory {
            coherence: false,
            spectrum: false,
        },
    }
}

fn time_panel(title: &str, ylabel: &str, curves: Vec<Curve>) -> Panel {
    Panel {
        title: title.into(),
        xlabel: "t / t_rt".into(),
        ylabel: ylabel.into(),
        curves,
    }
}

fn csv(label: &str) -> String {
    format!("{label}.csv")
}

/// Single-sector, one trajectory at separation `x`, plotting `cols`.
fn single_figure(
    x: f64,
    initial: Preset,
    cols: &[(&str, &str)],
    title: &str,
    ylabel: &str,
) -> (Vec<Step>, Vec<Panel>) {
    let cfg = base(99, x, initial, 4.0, 0.002);
    let curves = cols
        .iter()
        .map(|(c, t)| Curve::new(&csv("trajectory"), "t_over_trt", c, t))
        .collect();
    (
        vec![trajectory("trajectory", Sector::Single, cfg)],
        vec![time_panel(title, ylabel, curves)],
    )
}

/// Double-sector frames: N=1 and a multimode lattice, at x = 0, L/4, L/2.
fn c1_figure(initial: Preset, t_end: f64, n_multi: usize) -> (Vec<Step>, Vec<Panel>) {
    let mut steps = Vec::new();
    let mut panels = Vec::new();
    for (frame, n) in [("a", 1), ("b", n_multi)] {
        let mut curves = Vec::new();
        for (tag, x, title) in [
            ("x0", 0.0, "x = 0"),
            ("xL4", L / 4.0, "x = L/4"),
            ("xL2", L / 2.0, "x = L/2"),
        ] {
            let label = format!("{frame}_{tag}");
            steps.push(trajectory(
                &label,
                Sector::Double,
                base(n, x, initial, t_end, 0.002),
            ));
            curves.push(Curve::new(&csv(&label), "t_over_trt", "c1_paper", title));
        }
        panels.push(time_panel(
            &format!("({frame}) N_freqs = {n}"),
            "C1",
            curves,
        ));
    }
    (steps, panels)
}

fn sweep_step(label: &str, sector: Sector, mut cfg: RunConfig, xs: Vec<f64>) -> Step {
    cfg.analysis.sweep_x = xs;
    Step {
        label: label.into(),
        sector,
        config: cfg,
        kind: StepKind::Sweep,
    }
}

fn sweep_panel(file: &str, title: &str, ylabel: &str) -> Panel {
    Panel {
        title: title.into(),
        xlabel: "x / lambda_a".into(),
        ylabel: ylabel.into(),
        curves: vec![Curve::new(file, "x_over_lambda", "mean", "time average")],
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// The fully resolved plan for `preset` at `scale`.
pub fn plan(preset: FigurePreset, scale: Scale) -> PresetPlan {
    use FigurePreset::*;
    let paper = scale == Scale::Paper;
    let mut notes = Vec::new();
    let pops = [("b1_sq", "|b_1|^2"), ("b2_sq", "|b_2|^2")];
    let dicke = [("bs_sq", "|b_s|^2"), ("ba_sq", "|b_a|^2")];
    let conc = [("conc", "C")];
    let (description, steps, panels) = match preset {
        Fig3a | Fig3b | Fig4 | Fig5 | Fig6a | Fig6b | Fig7a | Fig7b => {
            let x = if matches!(preset, Fig3a | Fig4 | Fig6a | Fig7a) {
                0.0
            } else {
                999.0
            };
            let (initial, cols, what, ylabel): (_, &[_], _, _) = match preset {
                Fig3a | Fig3b => (Preset::E1G2, &pops, "atomic populations", "probability"),
                Fig4 | Fig5 => (Preset::E1G2, &dicke, "Dicke populations", "probability"),
                Fig6a | Fig6b => (Preset::E1G2, &conc, "concurrence from |e1 g2>", "C"),
                _ => (Preset::Symmetric, &conc, "concurrence from |s>", "C"),
            };
            let title = format!("{what}, x = {x} lambda_a");
            let (s, p) = single_figure(x, initial, cols, &title, ylabel);
            (title, s, p)
        }
        Fig8 => {
            let t_end = if paper { 400.0 } else { 100.0 };
            let mut cfg = base(99, 0.0, Preset::E1G2, t_end, 0.01);
            cfg.cavity.coupling_scaling = CouplingScaling::SqrtOmega;
            cfg.analysis.average_from_trt = 10.0;
            notes.push("couplings scale as sqrt(omega_m / omega_a)".into());
            let steps = vec![Step {
                label: "trajectory".into(),
                sector: Sector::Single,
                config: cfg,
                kind: StepKind::Trajectory {
                    coherence: true,
                    spectrum: true,
                },
            }];
            let panels = vec![
                time_panel(
                    "(a) long-time concurrence",
                    "C",
                    vec![Curve::new("trajectory.csv", "t_over_trt", "conc", "C")],
                ),
                time_panel(
                    "(b) Im rho_as",
                    "Im rho_as",
                    vec![Curve::new(
                        "coherence.csv",
                        "t_over_trt",
                        "im_rho_as",
                        "Im rho_as",
                    )],
                ),
                Panel {
                    title: "power spectrum of C".into(),
                    xlabel: "omega / Delta_FSR".into(),
                    ylabel: "power".into(),
                    curves: vec![Curve::new("spectrum.csv", "freq_fsr_units", "power", "P")],
                },
            ];
            (
                "long-time concurrence, coherence and spectrum".into(),
                steps,
                panels,
            )
        }
        Fig9a | Fig9b => {
            let (n, window) = if paper { (99, 800.0) } else { (21, 100.0) };
            let xs = if preset == Fig9a {
                linspace(0.0, L / 2.0, 11)
            } else {
                linspace(0.0, 0.5, 11)
            };
            let cfg = base(n, 0.0, Preset::E1G2, window, 0.01);
            let title = if preset == Fig9a {
                "time-averaged concurrence, x in [0, L/2]"
            } else {
                "time-averaged concurrence, x in [0, lambda_a/2]"
            };
            (
                title.into(),
                vec![sweep_step("sweep", Sector::Single, cfg, xs)],
                vec![sweep_panel("sweep.csv", title, "<C>")],
            )
        }
        Fig10 | Fig11 | Fig12 => {
            let n_multi = if paper { 45 } else { 11 };
            let (initial, t_end, what) = match preset {
                Fig10 => (Preset::Ee, 5.0, "C1 from |e1 e2>"),
                Fig11 => (Preset::Eq37, 5.0, "C1 from |e1 g2>(|1_0l> + |1_0r>)/sqrt2"),
                _ => (Preset::Gg2r, 10.0, "C1 from |g1 g2, 2_0r>"),
            };
            let (s, p) = c1_figure(initial, t_end, n_multi);
            (what.into(), s, p)
        }
        Fig13 => {
            let (n, t_long, window) = if paper {
                (45, 2000.0, 2000.0)
            } else {
                (11, 50.0, 20.0)
            };
            let long = base(n, L / 2.0, Preset::Eq37, t_long, 0.01);
            let sweep = base(n, 0.0, Preset::Eq37, window, 0.01);
            let xs = linspace(L / 2.0 - 0.25, L / 2.0 + 0.25, 11);
            let steps = vec![
                trajectory("trajectory", Sector::Double, long),
                sweep_step("sweep", Sector::Double, sweep, xs),
            ];
            let panels = vec![
                time_panel(
                    "(a) long-time C1 at x = L/2",
                    "C1",
                    vec![Curve::new("trajectory.csv", "t_over_trt", "c1_paper", "C1")],
                ),
                sweep_panel(
                    "sweep.csv",
                    "(b) time-averaged concurrence near x = L/2",
                    "<C>",
                ),
            ];
            (
                "double-excitation long-time and separation sweep".into(),
                steps,
                panels,
            )
        }
    };
    if !paper {
        match preset {
            Fig8 => notes.push("desk scale: 100 t_rt instead of 400 t_rt".into()),
            Fig9a | Fig9b => notes.push(
                "desk scale: N_freqs = 21 and a 100 t_rt window instead of 99 and 800 t_rt".into(),
            ),
            Fig10 | Fig11 | Fig12 => {
                notes.push("desk scale: multimode frame uses N_freqs = 11 instead of 45".into())
            }
            Fig13 => notes.push(
                "desk scale: N_freqs = 11, 50 t_rt trajectory and 20 t_rt sweep window \
                 instead of 45 and 2000 t_rt"
                    .into(),
            ),
            _ => {}
        }
    }
    PresetPlan {
        preset,
        scale,
        description,
        steps,
        plot: PlotSpec {
            image: format!("{}.png", preset.name()),
            panels,
        },
        notes,
    }
}

impl PresetPlan {
    /// Applies `--set` overrides to every step and, at paper scale, the
    /// dimension guard.
    pub fn customize(&mut self, overrides: &[String], allow_large: bool) -> Result<(), CliError> {
        for step in &mut self.steps {
            if self.scale == Scale::Paper && !allow_large {
                step.config.run.dimension_cap = PAPER_SCALE_GUARD_CAP;
            }
            if overrides.is_empty() {
                continue;
            }
            let mut table = match Value::try_from(&step.config) {
                Ok(Value::Table(t)) => t,
                _ => unreachable!("config serializes to a table"),
            };
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            step.config = RunConfig::from_toml_str(&toml::to_string(&table).expect("table"))?;
        }
        for step in &self.steps {
            step.config.validate()?;
        }
        Ok(())
    }
}
