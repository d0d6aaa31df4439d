//! Simulations driven by a [`RunConfig`] and the files they produce.

use ringqed_core::analysis::{
    detect_kinks, esd_events, find_peaks, negative_runs, power_spectrum, sweep_distance,
    time_average, Interval, Observable, SpectrumPoint, SweepResult, SweepSpec, TimeSeries,
};
use ringqed_core::cavity::retardation_times;
use ringqed_core::double::{simulate_double, DoubleObservables};
use ringqed_core::single::{simulate_single, SingleObservables};
use ringqed_core::{Error, InitialStateSpec, ModeSet, PropagationStats, TimeGrid};
use serde_json::{json, Value};

use crate::config::{RunConfig, Sector};
use crate::output::{fmt_num, RunContext, RunRecord};
use crate::CliError;

pub const SINGLE_TRAJECTORY_COLUMNS: [&str; 8] = [
    "t_Omega0",
    "t_over_trt",
    "b1_sq",
    "b2_sq",
    "cav_pop",
    "bs_sq",
    "ba_sq",
    "conc",
];

pub const DOUBLE_TRAJECTORY_COLUMNS: [&str; 11] = [
    "t_Omega0",
    "t_over_trt",
    "rho11",
    "rho22",
    "rho33",
    "rho44",
    "rho23_abs",
    "c1_paper",
    "c1_trace",
    "conc_paper",
    "conc_trace",
];

pub const SWEEP_COLUMNS: [&str; 4] = ["x_over_lambda", "mean", "min", "max"];
pub const SPECTRUM_COLUMNS: [&str; 3] = ["freq_Omega0", "freq_fsr_units", "power"];
pub const MODE_COLUMNS: [&str; 6] = [
    "m",
    "dir",
    "detuning_Omega0",
    "g_abs",
    "g_phase_atom1",
    "g_phase_atom2",
];

/// Kinks below this many samples are not searched for.
const MIN_KINK_SAMPLES: usize = 16;

#[derive(Clone, Debug)]
pub enum SimData {
    Single(Vec<SingleObservables>),
    Double(Vec<DoubleObservables>),
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub grid: TimeGrid,
    pub t_rt: f64,
    pub stats: PropagationStats,
    pub data: SimData,
}

fn describe_initial(cfg: &RunConfig, spec: &InitialStateSpec) -> String {
    match spec {
        InitialStateSpec::Preset(p) => p.to_string(),
        InitialStateSpec::Terms(_) => cfg
            .initial
            .terms
            .iter()
            .map(|t| format!("({}{:+}i)|{}>", t.re, t.im, t.ket))
            .collect::<Vec<_>>()
            .join(" + "),
    }
}

/// Propagates the configured initial state, which must live in `sector`.
pub fn simulate(
    ctx: &mut RunContext,
    label: &str,
    cfg: &RunConfig,
    sector: Sector,
) -> Result<Simulation, CliError> {
    let spec = cfg.initial_spec(sector)?;
    let actual = cfg.sector(sector)?;
    if actual != sector {
        return Err(CliError::Config(format!(
            "initial: state belongs to the {actual:?} sector, this command runs the {sector:?} sector"
        )));
    }
    let grid = cfg.grid()?;
    let options = cfg.options(sector)?;
    let (stats, data) = match sector {
        Sector::Single => {
            let t = simulate_single(&cfg.cavity, &spec, grid, options)?;
            (t.stats, SimData::Single(t.samples))
        }
        Sector::Double => {
            let t = simulate_double(&cfg.cavity, &spec, grid, options, cfg.run.dimension_cap)?;
            (t.stats, SimData::Double(t.samples))
        }
    };
    ctx.runs.push(RunRecord {
        label: label.to_string(),
        sector,
        initial: describe_initial(cfg, &spec),
        cavity: cfg.cavity.clone(),
        stats: Some(stats.clone()),
    });
    Ok(Simulation {
        grid,
        t_rt: cfg.t_rt(),
        stats,
        data,
    })
}

impl Simulation {
    pub fn sector(&self) -> Sector {
        match self.data {
            SimData::Single(_) => Sector::Single,
            SimData::Double(_) => Sector::Double,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        match &self.data {
            SimData::Single(s) => {
                if name == "im_rho_as" {
                    return Some(s.iter().map(|o| o.im_rho_as).collect());
                }
                let k = SingleObservables::COLUMNS.iter().position(|c| *c == name)?;
                Some(s.iter().map(|o| o.values()[k]).collect())
            }
            SimData::Double(s) => {
                let k = DoubleObservables::COLUMNS.iter().position(|c| *c == name)?;
                Some(s.iter().map(|o| o.values()[k]).collect())
            }
        }
    }

    pub fn series(&self, name: &str) -> Result<TimeSeries, CliError> {
        let values = self.column(name).ok_or_else(|| {
            CliError::Config(format!("analysis.observable: unknown column {name:?}"))
        })?;
        Ok(TimeSeries::on_grid(name, &self.grid, values)?)
    }

    /// Samples with `t0 ≤ t ≤ t1` (times in `Ω0⁻¹`).
    pub fn windowed_series(&self, name: &str, t0: f64, t1: f64) -> Result<TimeSeries, CliError> {
        let full = self.series(name)?;
        let eps = 1e-9 * self.grid.dt();
        let first = (0..full.len())
            .find(|&k| full.time(k) >= t0 - eps)
            .unwrap_or(full.len());
        let last = (0..full.len()).rev().find(|&k| full.time(k) <= t1 + eps);
        let values = match last {
            Some(l) if l >= first => full.values()[first..=l].to_vec(),
            _ => Vec::new(),
        };
        Ok(TimeSeries::new(
            name,
            full.time(first.min(full.len() - 1)),
            full.dt(),
            values,
        )?)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        let times = self.grid.times().map(|t| [t, t / self.t_rt]);
        match &self.data {
            SimData::Single(s) => times
                .zip(s)
                .map(|(tt, o)| {
                    let mut r = tt.to_vec();
                    r.extend_from_slice(&[o.b1_sq, o.b2_sq, o.cav_pop, o.bs_sq, o.ba_sq, o.conc]);
                    r
                })
                .collect(),
            SimData::Double(s) => times
                .zip(s)
                .map(|(tt, o)| {
                    let mut r = tt.to_vec();
                    r.extend_from_slice(&o.values());
                    r
                })
                .collect(),
        }
    }
}

pub fn write_trajectory(
    ctx: &mut RunContext,
    name: &str,
    sim: &Simulation,
) -> Result<(), CliError> {
    let header: &[&str] = match sim.sector() {
        Sector::Single => &SINGLE_TRAJECTORY_COLUMNS,
        Sector::Double => &DOUBLE_TRAJECTORY_COLUMNS,
    };
    ctx.write_numeric_csv(name, header, sim.rows())?;
    Ok(())
}

/// `Im ρ_as` of a single-sector run.
pub fn write_coherence(ctx: &mut RunContext, name: &str, sim: &Simulation) -> Result<(), CliError> {
    let im = sim
        .column("im_rho_as")
        .filter(|_| sim.sector() == Sector::Single)
        .ok_or_else(|| CliError::Config("im_rho_as exists only in the single sector".into()))?;
    let rows = sim
        .grid
        .times()
        .zip(im)
        .map(|(t, v)| vec![t, t / sim.t_rt, v]);
    ctx.write_numeric_csv(name, &["t_Omega0", "t_over_trt", "im_rho_as"], rows)?;
    Ok(())
}

/// Kink times of the atomic populations and the concurrence.
pub fn write_kinks(
    ctx: &mut RunContext,
    name: &str,
    sim: &Simulation,
    cfg: &RunConfig,
) -> Result<Value, CliError> {
    let mut rows = Vec::new();
    let mut summary = serde_json::Map::new();
    if sim.grid.len() < MIN_KINK_SAMPLES {
        ctx.notes
            .push(format!("{name}: too few samples for kink detection"));
    } else {
        for col in ["b1_sq", "b2_sq", "conc"] {
            let kinks = detect_kinks(&sim.series(col)?, cfg.analysis.kink_sensitivity)?;
            summary.insert(
                col.into(),
                json!(kinks.iter().map(|t| t / sim.t_rt).collect::<Vec<_>>()),
            );
            for t in kinks {
                rows.push(vec![col.to_string(), fmt_num(t), fmt_num(t / sim.t_rt)]);
            }
        }
    }
    ctx.write_csv(name, &["observable", "t_Omega0", "t_over_trt"], rows)?;
    Ok(Value::Object(summary))
}

fn interval_row(sign: &str, iv: &Interval, t_rt: f64) -> Vec<String> {
    vec![
        sign.to_string(),
        fmt_num(iv.start),
        fmt_num(iv.end),
        fmt_num(iv.start / t_rt),
        fmt_num(iv.end / t_rt),
        iv.first_index.to_string(),
        iv.last_index.to_string(),
    ]
}

/// Intervals where `C1` is positive (entangled) and negative (separable).
pub fn write_esd(
    ctx: &mut RunContext,
    name: &str,
    sim: &Simulation,
    cfg: &RunConfig,
) -> Result<Value, CliError> {
    let col = match cfg.analysis.coherence_mode {
        ringqed_core::CoherenceMode::PaperSumOfModuli => "c1_paper",
        ringqed_core::CoherenceMode::TraceModulusOfSum => "c1_trace",
    };
    let c1 = sim.series(col)?;
    let pos = esd_events(&c1);
    let neg = negative_runs(&c1);
    let mut rows: Vec<(f64, Vec<String>)> = pos
        .iter()
        .map(|iv| (iv.start, interval_row("positive", iv, sim.t_rt)))
        .chain(
            neg.iter()
                .map(|iv| (iv.start, interval_row("negative", iv, sim.t_rt))),
        )
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    ctx.write_csv(
        name,
        &[
            "sign",
            "start_t_Omega0",
            "end_t_Omega0",
            "start_t_over_trt",
            "end_t_over_trt",
            "first_index",
            "last_index",
        ],
        rows.into_iter().map(|r| r.1),
    )?;
    Ok(json!({
        "c1_column": col,
        "positive_intervals": pos.len(),
        "negative_intervals": neg.len(),
    }))
}

/// Power spectrum of the analysed column over the averaging window.
pub fn write_spectrum(
    ctx: &mut RunContext,
    name: &str,
    sim: &Simulation,
    cfg: &RunConfig,
) -> Result<Vec<SpectrumPoint>, CliError> {
    let col = cfg.observable(sim.sector())?;
    let (t0, t1) = cfg.average_window();
    let series = sim.windowed_series(col, t0, t1)?;
    let fsr = cfg.cavity.fsr();
    let spec = power_spectrum(&series, cfg.analysis.window, fsr);
    ctx.write_numeric_csv(
        name,
        &SPECTRUM_COLUMNS,
        spec.iter().map(|p| vec![p.omega, p.omega_fsr, p.power]),
    )?;
    Ok(find_peaks(
        &spec,
        cfg.analysis.peak_limit_fsr * fsr,
        0.01,
        3,
    ))
}

pub fn write_modes(ctx: &mut RunContext, name: &str, cfg: &RunConfig) -> Result<(), CliError> {
    let modes = ModeSet::build(&cfg.cavity)?;
    let rows = modes.table().into_iter().map(|r| {
        vec![
            r.mode.m.to_string(),
            r.mode.dir.label().to_string(),
            fmt_num(r.detuning),
            fmt_num(r.g_abs),
            fmt_num(r.phase_atom1),
            fmt_num(r.phase_atom2),
        ]
    });
    ctx.write_csv(name, &MODE_COLUMNS, rows)?;
    Ok(())
}

/// Summary of a finished trajectory for the manifest.
pub fn trajectory_summary(sim: &Simulation, cfg: &RunConfig) -> Result<Value, CliError> {
    let col = cfg.observable(sim.sector())?;
    let (t0, t1) = cfg.average_window();
    let series = sim.windowed_series(col, t0, t1)?;
    let mean = time_average(&series, series.t0(), series.end())?;
    let (lo, hi) = series
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let rt = retardation_times(&cfg.cavity);
    Ok(json!({
        "observable": col,
        "window_trt": [t0 / sim.t_rt, t1 / sim.t_rt],
        "mean": mean,
        "min": lo,
        "max": hi,
        "t_x_over_trt": rt.t_x_over_trt(),
        "t_Lx_over_trt": rt.t_lx_over_trt(),
        "max_norm_drift": sim.stats.max_norm_drift,
    }))
}

/// Runs a separation sweep and writes its rows. A failed point still
/// writes the completed rows and marks the run partial.
pub fn run_sweep(
    ctx: &mut RunContext,
    label: &str,
    name: &str,
    cfg: &RunConfig,
    sector: Sector,
) -> Result<SweepResult, CliError> {
    let spec_state = cfg.initial_spec(sector)?;
    let actual = cfg.sector(sector)?;
    let col = cfg.observable(actual)?;
    let observable = match actual {
        Sector::Single => Observable::single(spec_state.clone(), col)?,
        Sector::Double => Observable::double(spec_state.clone(), col, cfg.run.dimension_cap)?,
    };
    let t_rt = cfg.t_rt();
    let spec = SweepSpec {
        base: cfg.cavity.clone(),
        xs: cfg.sweep_points(),
        observable,
        window: cfg.average_window(),
        dt: cfg.run.dt_trt * t_rt,
        options: cfg.options(actual)?,
    };
    ctx.runs.push(RunRecord {
        label: label.to_string(),
        sector: actual,
        initial: describe_initial(cfg, &spec_state),
        cavity: cfg.cavity.clone(),
        stats: None,
    });
    let rows = |r: &SweepResult| -> Vec<Vec<f64>> {
        r.rows
            .iter()
            .map(|r| vec![r.x_over_lambda, r.mean, r.min, r.max])
            .collect()
    };
    match sweep_distance(&spec) {
        Ok(res) => {
            ctx.write_numeric_csv(name, &SWEEP_COLUMNS, rows(&res))?;
            Ok(res)
        }
        Err(Error::Sweep { x, partial, source }) => {
            ctx.write_numeric_csv(name, &SWEEP_COLUMNS, rows(&partial))?;
            ctx.partial = true;
            ctx.notes.push(format!(
                "{name}: partial, {} rows before the failure at x = {x}",
                partial.rows.len()
            ));
            Err(CliError::Core(Error::Sweep { x, partial, source }))
        }
        Err(e) => Err(e.into()),
    }
}
