//! Post-processing of sampled observables: time averages, power spectra,
//! kink detection, sign runs and distance sweeps.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cavity::CavityConfig;
use crate::double::{self, DoubleObservables};
use crate::error::{Error, Result};
use crate::propagate::{PropagationOptions, TimeGrid};
use crate::single::{self, SingleObservables};
use crate::state::InitialStateSpec;
use crate::C64;

/// A real observable on a uniform grid `t_k = t0 + k·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub const MIN_LEN: usize = 8;

    pub fn new(label: impl Into<String>, t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) || !t0.is_finite() {
            return Err(Error::Series(format!(
                "grid t0 = {t0}, dt = {dt} is not uniform and increasing"
            )));
        }
        if values.len() < Self::MIN_LEN {
            return Err(Error::Series(format!(
                "{} samples, at least {} required",
                values.len(),
                Self::MIN_LEN
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Series(format!("non-finite value at sample {k}")));
        }
        Ok(Self {
            label: label.into(),
            t0,
            dt,
            values,
        })
    }

    /// Series on `grid` (which starts at 0).
    pub fn on_grid(label: impl Into<String>, grid: &TimeGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(label, 0.0, grid.dt(), values)
    }

    /// Builds a series from explicit sample times, which must be uniform to
    /// within `1e-9` of a step.
    pub fn from_samples(label: impl Into<String>, times: &[f64], values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::Series(
                "time and value columns differ in length".into(),
            ));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (k, t) in times.iter().enumerate() {
            if (t - (times[0] + k as f64 * dt)).abs() > 1e-9 * dt.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::Series(format!("non-uniform grid at sample {k}")));
            }
        }
        Self::new(label, times[0], dt, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Same samples, grid shifted by `dt_shift`.
    pub fn shifted(&self, dt_shift: f64) -> Self {
        Self {
            t0: self.t0 + dt_shift,
            ..self.clone()
        }
    }

    fn value_at(&self, t: f64) -> f64 {
        let u = ((t - self.t0) / self.dt).clamp(0.0, (self.len() - 1) as f64);
        let k = (u.floor() as usize).min(self.len() - 2);
        let f = u - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }
}

/// Trapezoidal mean of `series` over `[t0, t1]`, with linear interpolation at
/// window edges that fall between samples.
pub fn time_average(series: &TimeSeries, t0: f64, t1: f64) -> Result<f64> {
    let slack = 1e-9 * series.dt();
    if !(t1 > t0) {
        return Err(Error::Series(format!(
            "empty averaging window [{t0}, {t1}]"
        )));
    }
    if t0 < series.t0() - slack || t1 > series.end() + slack {
        return Err(Error::Series(format!(
            "window [{t0}, {t1}] exceeds the series span [{}, {}]",
            series.t0(),
            series.end()
        )));
    }
    let (t0, t1) = (t0.max(series.t0()), t1.min(series.end()));
    let mut knots = vec![(t0, series.value_at(t0))];
    let first = ((t0 - series.t0()) / series.dt()).floor() as usize + 1;
    for k in first..series.len() {
        let t = series.time(k);
        if t >= t1 {
            break;
        }
        if t > t0 {
            knots.push((t, series.values()[k]));
        }
    }
    knots.push((t1, series.value_at(t1)));
    let area: f64 = knots
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    Ok(area / (t1 - t0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rect,
    Hann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumPoint {
    /// Angular frequency in `Ω0`.
    pub omega: f64,
    /// The same frequency in units of `Δ_FSR`.
    pub omega_fsr: f64,
    pub power: f64,
}

/// One-sided power spectrum of the mean-subtracted series.
///
/// Bin `k` sits at `ω_k = 2πk/(n·dt)` up to Nyquist. Powers are normalized so
/// that they sum to the variance of the (windowed) signal.
pub fn power_spectrum(series: &TimeSeries, window: Window, fsr: f64) -> Vec<SpectrumPoint> {
    let n = series.len();
    let mean = series.values().iter().sum::<f64>() / n as f64;
    let w: Vec<f64> = match window {
        Window::Rect => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|k| 0.5 - 0.5 * (TAU * k as f64 / (n - 1) as f64).cos())
            .collect(),
    };
    let w2: f64 = w.iter().map(|x| x * x).sum();
    let mut buf: Vec<C64> = series
        .values()
        .iter()
        .zip(&w)
        .map(|(v, wk)| C64::new((v - mean) * wk, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * w2);
    (0..=n / 2)
        .map(|k| {
            let one_sided = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
            let omega = TAU * k as f64 / (n as f64 * series.dt());
            SpectrumPoint {
                omega,
                omega_fsr: omega / fsr,
                power: one_sided * buf[k].norm_sqr() * scale,
            }
        })
        .collect()
}

/// Local maxima of the spectrum below `max_omega` exceeding `rel_threshold`
/// times the largest power in that region; maxima closer than `merge_bins`
/// keep the stronger one.
pub fn find_peaks(
    spectrum: &[SpectrumPoint],
    max_omega: f64,
    rel_threshold: f64,
    merge_bins: usize,
) -> Vec<SpectrumPoint> {
    let region: Vec<&SpectrumPoint> = spectrum
        .iter()
        .filter(|p| p.omega > 0.0 && p.omega < max_omega)
        .collect();
    let top = region.iter().map(|p| p.power).fold(0.0, f64::max);
    if top <= 0.0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = Vec::new();
    for k in 0..region.len() {
        let p = region[k].power;
        let left = if k > 0 {
            region[k - 1].power
        } else {
            f64::NEG_INFINITY
        };
        let right = region.get(k + 1).map_or(f64::NEG_INFINITY, |q| q.power);
        if p > left && p >= right && p > rel_threshold * top {
            idx.push(k);
        }
    }
    let merged = merge_close(&idx, merge_bins, |k| region[k].power);
    merged.into_iter().map(|k| *region[k]).collect()
}

/// Collapses indices closer than `gap` into clusters, keeping the one with the
/// largest `score` per cluster.
fn merge_close(idx: &[usize], gap: usize, score: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut cluster_last: Option<usize> = None;
    for &k in idx {
        match (cluster_last, out.last_mut()) {
            (Some(prev), Some(best)) if k - prev < gap => {
                if score(k) > score(*best) {
                    *best = k;
                }
            }
            _ => out.push(k),
        }
        cluster_last = Some(k);
    }
    out
}

pub const DEFAULT_KINK_SENSITIVITY: f64 = 20.0;
pub const KINK_MERGE_SAMPLES: usize = 5;

/// Times of abrupt slope changes.
///
/// The discrete curvature `κ_i = |y_{i+1} − 2y_i + y_{i−1}|` is scanned for
/// local maxima above `sensitivity × median(κ)`. A floor of `64·ε` times the
/// signal scale keeps rounding noise out when the median vanishes (piecewise
/// linear input). Detections closer than 5 samples are merged.
pub fn detect_kinks(series: &TimeSeries, sensitivity: f64) -> Result<Vec<f64>> {
    let y = series.values();
    if y.len() < 16 {
        return Err(Error::Series(format!(
            "kink detection needs >= 16 samples, got {}",
            y.len()
        )));
    }
    let kappa: Vec<f64> = y
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .collect();
    let mut sorted = kappa.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let threshold = (sensitivity * median).max(64.0 * f64::EPSILON * scale);
    let mut idx = Vec::new();
    for i in 0..kappa.len() {
        let left = if i > 0 {
            kappa[i - 1]
        } else {
            f64::NEG_INFINITY
        };
        let right = kappa.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if kappa[i] > threshold && kappa[i] > left && kappa[i] >= right {
            idx.push(i);
        }
    }
    let merged = merge_close(&idx, KINK_MERGE_SAMPLES, |i| kappa[i]);
    // κ index i is centred on sample i + 1.
    Ok(merged.into_iter().map(|i| series.time(i + 1)).collect())
}

/// A maximal run of consecutive samples, inclusive at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub first_index: usize,
    pub last_index: usize,
}

/// Maximal runs of samples where `pred` holds.
pub fn sign_runs(series: &TimeSeries, pred: impl Fn(f64) -> bool) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (k, &v) in series.values().iter().enumerate() {
        match (pred(v), start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push(Interval {
                    start: series.time(s),
                    end: series.time(k - 1),
                    first_index: s,
                    last_index: k - 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        let k = series.len() - 1;
        out.push(Interval {
            start: series.time(s),
            end: series.time(k),
            first_index: s,
            last_index: k,
        });
    }
    out
}

/// Intervals where `C1 > 0` (entanglement present). Zero counts as
/// non-positive.
pub fn esd_events(c1: &TimeSeries) -> Vec<Interval> {
    sign_runs(c1, |v| v > 0.0)
}

/// Intervals where `C1 < 0`.
pub fn negative_runs(c1: &TimeSeries) -> Vec<Interval> {
    sign_runs(c1, |v| v < 0.0)
}

/// What a sweep point measures.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Single {
        initial: InitialStateSpec,
        column: &'static str,
    },
    Double {
        initial: InitialStateSpec,
        column: &'static str,
        cap: usize,
    },
}

impl Observable {
    pub fn single(initial: InitialStateSpec, column: &str) -> Result<Self> {
        let column = SingleObservables::COLUMNS
            .iter()
            .copied()
            .find(|c| *c == column)
            .ok_or_else(|| Error::Series(format!("unknown single-sector column {column:?}")))?;
        Ok(Observable::Single { initial, column })
    }

    pub fn double(initial: InitialStateSpec, column: &str, cap: usize) -> Result<Self> {
        let column = DoubleObservables::COLUMNS
            .iter()
            .copied()
            .find(|c| *c == column)
            .ok_or_else(|| Error::Series(format!("unknown double-sector column {column:?}")))?;
        Ok(Observable::Double {
            initial,
            column,
            cap,
        })
    }

    pub fn column(&self) -> &'static str {
        match self {
            Observable::Single { column, .. } | Observable::Double { column, .. } => column,
        }
    }

    /// Simulates `config` and returns the observable sampled on `grid`.
    pub fn evaluate(
        &self,
        config: &CavityConfig,
        grid: TimeGrid,
        options: PropagationOptions,
    ) -> Result<Vec<f64>> {
        match self {
            Observable::Single { initial, column } => {
                let k = SingleObservables::COLUMNS
                    .iter()
                    .position(|c| c == column)
                    .unwrap();
                let traj = single::simulate_single(config, initial, grid, options)?;
                Ok(traj.samples.iter().map(|o| o.values()[k]).collect())
            }
            Observable::Double {
                initial,
                column,
                cap,
            } => {
                let k = DoubleObservables::COLUMNS
                    .iter()
                    .position(|c| c == column)
                    .unwrap();
                let traj = double::simulate_double(config, initial, grid, options, *cap)?;
                Ok(traj.samples.iter().map(|o| o.values()[k]).collect())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    MultiWavelength,
    SubWavelength,
}

impl SweepKind {
    /// Sub-wavelength when every point lies within one `λa`.
    pub fn classify(xs: &[f64]) -> Self {
        match (xs.first(), xs.last()) {
            (Some(a), Some(b)) if b - a <= 1.0 => SweepKind::SubWavelength,
            _ => SweepKind::MultiWavelength,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: CavityConfig,
    /// Separations `x2 − x1` in units of `λa`, strictly increasing.
    pub xs: Vec<f64>,
    pub observable: Observable,
    /// Averaging window in `Ω0⁻¹`; the simulation runs to `window.1`.
    pub window: (f64, f64),
    pub dt: f64,
    pub options: PropagationOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub x_over_lambda: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub rows: Vec<SweepRow>,
}

fn sweep_point(spec: &SweepSpec, x: f64) -> Result<SweepRow> {
    let config = spec.base.with_separation(x);
    config.validate()?;
    let grid = TimeGrid::spanning(spec.window.1, spec.dt)?;
    let values = spec.observable.evaluate(&config, grid, spec.options)?;
    let series = TimeSeries::on_grid(spec.observable.column(), &grid, values)?;
    let mean = time_average(&series, spec.window.0, spec.window.1)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, &v) in series.values().iter().enumerate() {
        let t = series.time(k);
        if t >= spec.window.0 - 1e-9 * spec.dt {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok(SweepRow {
        x_over_lambda: x,
        mean,
        min: lo,
        max: hi,
    })
}

/// Runs one independent simulation per separation, in parallel, and averages
/// the observable over the window. Rows come back in `xs` order. A failure
/// aborts the sweep; the error carries the rows that precede the failing
/// point.
pub fn sweep_distance(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.xs.is_empty() {
        return Err(Error::Series("sweep has no points".into()));
    }
    if let Some(w) = spec.xs.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Series(format!(
            "sweep points must increase strictly, got {} then {}",
            w[0], w[1]
        )));
    }
    if !(spec.window.1 > spec.window.0 && spec.window.0 >= 0.0) {
        return Err(Error::Series(format!(
            "bad averaging window {:?}",
            spec.window
        )));
    }
    let kind = SweepKind::classify(&spec.xs);
    let results: Vec<Result<SweepRow>> =
        spec.xs.par_iter().map(|&x| sweep_point(spec, x)).collect();
    let mut rows = Vec::with_capacity(results.len());
    for (x, r) in spec.xs.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                return Err(Error::Sweep {
                    x: *x,
                    partial: Box::new(SweepResult { kind, rows }),
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(SweepResult { kind, rows })
}
