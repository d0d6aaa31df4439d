//! Run configuration: four flat TOML sections with defaults and strict keys.

use std::path::Path;

use ringqed_core::analysis::Window;
use ringqed_core::double::{self, DEFAULT_DIMENSION_CAP};
use ringqed_core::propagate::PropagationOptions;
use ringqed_core::single::SingleObservables;
use ringqed_core::{
    CavityConfig, CoherenceMode, InitialStateSpec, Method, ModeSet, Preset, StateTerm, TimeGrid,
    C64,
};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cavity: CavityConfig,
    pub run: RunSection,
    pub initial: InitialSection,
    pub analysis: AnalysisSection,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    /// Spectral up to the dense-eigendecomposition limit, RK4 above.
    #[default]
    Auto,
    Spectral,
    Rk4,
}

impl MethodChoice {
    pub fn resolve(self, dim: usize) -> Method {
        match self {
            MethodChoice::Auto => Method::default_for(dim),
            MethodChoice::Spectral => Method::Spectral,
            MethodChoice::Rk4 => Method::Rk4,
        }
    }
}

/// Time grid and propagator settings. Times are in round trips `t_rt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub t_end_trt: f64,
    pub dt_trt: f64,
    pub method: MethodChoice,
    pub spectral_tol: f64,
    pub rk4_tol: f64,
    pub dimension_cap: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let p = PropagationOptions::default();
        Self {
            t_end_trt: 3.0,
            dt_trt: 0.002,
            method: MethodChoice::Auto,
            spectral_tol: p.spectral_tol,
            rk4_tol: p.rk4_tol,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

/// Either a named preset or explicit ket terms, never both.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermSpec>,
}

/// One ket term, e.g. `{ ket = "gg 0r:2", re = 1.0 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub ket: String,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Column analysed by `spectrum` and `sweep`; defaults to the sector's
    /// concurrence column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    pub coherence_mode: CoherenceMode,
    pub window: Window,
    pub kink_sensitivity: f64,
    /// Peaks are reported below this many free spectral ranges.
    pub peak_limit_fsr: f64,
    pub average_from_trt: f64,
    /// Defaults to `run.t_end_trt`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_to_trt: Option<f64>,
    pub sweep_from: f64,
    pub sweep_to: f64,
    pub sweep_points: usize,
    /// Explicit separations; overrides the from/to/points range when set.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep_x: Vec<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            observable: None,
            coherence_mode: CoherenceMode::default(),
            window: Window::Rect,
            kink_sensitivity: ringqed_core::analysis::DEFAULT_KINK_SENSITIVITY,
            peak_limit_fsr: 2.0,
            average_from_trt: 0.0,
            average_to_trt: None,
            sweep_from: 0.0,
            sweep_to: 0.5,
            sweep_points: 11,
            sweep_x: Vec::new(),
        }
    }
}

/// Which excitation sector a run lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Single,
    Double,
}

impl Sector {
    pub fn default_preset(self) -> Preset {
        match self {
            Sector::Single => Preset::E1G2,
            Sector::Double => Preset::Ee,
        }
    }

    pub fn default_observable(self, mode: CoherenceMode) -> &'static str {
        match (self, mode) {
            (Sector::Single, _) => "conc",
            (Sector::Double, CoherenceMode::PaperSumOfModuli) => "conc_paper",
            (Sector::Double, CoherenceMode::TraceModulusOfSum) => "conc_trace",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Sector::Single => &SingleObservables::COLUMNS,
            Sector::Double => &double::DoubleObservables::COLUMNS,
        }
    }
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

impl RunConfig {
    /// Reads `path` (if any), applies `section.key=value` overrides and
    /// resolves defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                text.parse::<Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let table = text
            .parse::<Table>()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: Table) -> Result<Self, CliError> {
        let cfg: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every invariant, naming the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        self.cavity
            .validate()
            .map_err(|e| config_err("cavity", e))?;
        let r = &self.run;
        if !(r.t_end_trt.is_finite() && r.t_end_trt > 0.0) {
            return Err(config_err("run.t_end_trt", "must be positive"));
        }
        if !(r.dt_trt.is_finite() && r.dt_trt > 0.0 && r.dt_trt < r.t_end_trt) {
            return Err(config_err(
                "run.dt_trt",
                "must be positive and below run.t_end_trt",
            ));
        }
        for (key, v) in [
            ("run.spectral_tol", r.spectral_tol),
            ("run.rk4_tol", r.rk4_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(key, "must be positive"));
            }
        }
        if r.dimension_cap == 0 {
            return Err(config_err("run.dimension_cap", "must be positive"));
        }
        if self.initial.preset.is_some() && !self.initial.terms.is_empty() {
            return Err(config_err(
                "initial",
                "give either preset or terms, not both",
            ));
        }
        if self.initial.preset.is_some() || !self.initial.terms.is_empty() {
            let spec = self.initial_spec(Sector::Single)?;
            spec.excitation().map_err(|e| config_err("initial", e))?;
        }
        let a = &self.analysis;
        if !(a.kink_sensitivity.is_finite() && a.kink_sensitivity > 0.0) {
            return Err(config_err("analysis.kink_sensitivity", "must be positive"));
        }
        if !(a.peak_limit_fsr.is_finite() && a.peak_limit_fsr > 0.0) {
            return Err(config_err("analysis.peak_limit_fsr", "must be positive"));
        }
        let to = a.average_to_trt.unwrap_or(r.t_end_trt);
        if !(a.average_from_trt >= 0.0 && to > a.average_from_trt && to <= r.t_end_trt + 1e-12) {
            return Err(config_err(
                "analysis.average_to_trt",
                format!(
                    "window [{}, {to}] must lie inside [0, run.t_end_trt = {}]",
                    a.average_from_trt, r.t_end_trt
                ),
            ));
        }
        if a.sweep_x.is_empty() && a.sweep_points == 0 {
            return Err(config_err("analysis.sweep_points", "must be at least 1"));
        }
        if a.sweep_x.is_empty() && a.sweep_points > 1 && !(a.sweep_to > a.sweep_from) {
            return Err(config_err(
                "analysis.sweep_to",
                "must exceed analysis.sweep_from",
            ));
        }
        Ok(())
    }

    /// The initial state; `sector` supplies the default when none is given.
    pub fn initial_spec(&self, sector: Sector) -> Result<InitialStateSpec, CliError> {
        if let Some(name) = &self.initial.preset {
            let p: Preset = name.parse().map_err(|e| config_err("initial.preset", e))?;
            return Ok(p.into());
        }
        if self.initial.terms.is_empty() {
            return Ok(sector.default_preset().into());
        }
        let terms = self
            .initial
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                StateTerm::from_ket(C64::new(t.re, t.im), &t.ket)
                    .map_err(|e| config_err(&format!("initial.terms[{i}].ket"), e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InitialStateSpec::Terms(terms))
    }

    /// Sector implied by `[initial]`, or `fallback` when it is empty.
    pub fn sector(&self, fallback: Sector) -> Result<Sector, CliError> {
        let spec = self.initial_spec(fallback)?;
        match spec.excitation().map_err(|e| config_err("initial", e))? {
            1 => Ok(Sector::Single),
            2 => Ok(Sector::Double),
            n => Err(config_err(
                "initial",
                format!("excitation number {n} is not 1 or 2"),
            )),
        }
    }

    pub fn t_rt(&self) -> f64 {
        self.cavity.round_trip_time()
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        let t_rt = self.t_rt();
        TimeGrid::spanning(self.run.t_end_trt * t_rt, self.run.dt_trt * t_rt)
            .map_err(|e| config_err("run", e))
    }

    /// Generator dimension of `sector` for the configured cavity.
    pub fn dimension(&self, sector: Sector) -> Result<usize, CliError> {
        let modes = ModeSet::build(&self.cavity).map_err(|e| config_err("cavity", e))?;
        Ok(match sector {
            Sector::Single => ringqed_core::single::dimension(&modes),
            Sector::Double => double::dimension_for(modes.len()),
        })
    }

    pub fn options(&self, sector: Sector) -> Result<PropagationOptions, CliError> {
        let dim = self.dimension(sector)?;
        Ok(PropagationOptions {
            method: self.run.method.resolve(dim),
            spectral_tol: self.run.spectral_tol,
            rk4_tol: self.run.rk4_tol,
            ..PropagationOptions::default()
        })
    }

    /// Averaging window in `Ω0⁻¹`.
    pub fn average_window(&self) -> (f64, f64) {
        let t_rt = self.t_rt();
        let to = self.analysis.average_to_trt.unwrap_or(self.run.t_end_trt);
        (self.analysis.average_from_trt * t_rt, to * t_rt)
    }

    pub fn sweep_points(&self) -> Vec<f64> {
        let a = &self.analysis;
        if !a.sweep_x.is_empty() {
            return a.sweep_x.clone();
        }
        if a.sweep_points == 1 {
            return vec![a.sweep_from];
        }
        let n = a.sweep_points;
        (0..n)
            .map(|k| a.sweep_from + (a.sweep_to - a.sweep_from) * k as f64 / (n - 1) as f64)
            .collect()
    }

    /// The analysed column, checked against the sector's columns.
    pub fn observable(&self, sector: Sector) -> Result<&str, CliError> {
        let name = self
            .analysis
            .observable
            .as_deref()
            .unwrap_or_else(|| sector.default_observable(self.analysis.coherence_mode));
        if sector.columns().contains(&name) {
            Ok(name)
        } else {
            Err(config_err(
                "analysis.observable",
                format!(
                    "unknown column {name:?} for the {sector:?} sector, expected one of {}",
                    sector.columns().join(", ")
                ),
            ))
        }
    }
}

/// Applies `section.key=value`. The value is read as a TOML literal and
/// falls back to a bare string.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {assignment:?}: expected key=value")))?;
    let path = path.trim();
    let (section, key) = path
        .split_once('.')
        .ok_or_else(|| CliError::Config(format!("--set {path}: expected section.key")))?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(CliError::Config(format!(
            "--set {path}: {section} is not a section"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_resolves_to_defaults() {
        let cfg = RunConfig::from_toml_str("[cavity]\n").unwrap();
        assert_eq!(cfg.cavity.l_over_lambda, 3.48e3);
        assert_eq!(cfg.cavity.omega_a, 1.11e4);
        assert_eq!(cfg.cavity.n_freqs, 11);
        assert_eq!(cfg.cavity.x1, 1.0);
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn even_rung_count_is_rejected() {
        let err = RunConfig::from_toml_str("[cavity]\nN_freqs = 4\n").unwrap_err();
        assert!(err.to_string().contains("N_freqs"), "{err}");
    }

    #[test]
    fn unknown_keys_are_errors() {
        for text in [
            "[cavity]\nN_freq = 5\n",
            "[run]\nsteps = 5\n",
            "[extra]\n",
            "[initial]\npreset = \"ee\"\ncolour = 1\n",
        ] {
            assert!(RunConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let err = RunConfig::from_toml_str("[run]\nt_end_trt = \"long\"\n").unwrap_err();
        assert!(err.to_string().contains("t_end_trt"), "{err}");
    }

    #[test]
    fn resolution_is_idempotent() {
        let text =
            "[cavity]\nN_freqs = 5\nx2_over_lambda = 12.5\ncoupling_scaling = \"sqrt_omega\"\n\
                    [initial]\nterms = [{ ket = \"eg 0l\" }, { ket = \"eg 0r\", im = 1.0 }]\n\
                    [analysis]\nsweep_x = [0.0, 0.25]\nobservable = \"c1_trace\"\n";
        let a = RunConfig::from_toml_str(text).unwrap();
        let b = RunConfig::from_toml_str(&a.to_toml()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_toml(), b.to_toml());
    }

    #[test]
    fn overrides_parse_literals_and_strings() {
        let mut t = Table::new();
        apply_override(&mut t, "cavity.N_freqs=5").unwrap();
        apply_override(&mut t, "initial.preset=eq37").unwrap();
        apply_override(&mut t, "run.method = \"rk4\"").unwrap();
        let cfg = RunConfig::from_table(t).unwrap();
        assert_eq!(cfg.cavity.n_freqs, 5);
        assert_eq!(cfg.initial.preset.as_deref(), Some("eq37"));
        assert_eq!(cfg.run.method, MethodChoice::Rk4);
        assert_eq!(cfg.sector(Sector::Single).unwrap(), Sector::Double);
        assert!(apply_override(&mut Table::new(), "N_freqs=5").is_err());
    }

    #[test]
    fn preset_and_terms_are_exclusive() {
        let err =
            RunConfig::from_toml_str("[initial]\npreset = \"ee\"\nterms = [{ ket = \"ee\" }]\n")
                .unwrap_err();
        assert!(err.to_string().contains("initial"));
    }

    #[test]
    fn mixed_excitation_terms_are_rejected() {
        let err =
            RunConfig::from_toml_str("[initial]\nterms = [{ ket = \"eg\" }, { ket = \"ee\" }]\n")
                .unwrap_err();
        assert!(err.to_string().contains("initial"), "{err}");
    }

    #[test]
    fn eq37_resolves_to_its_amplitudes() {
        let cfg = RunConfig::from_toml_str("[initial]\npreset = \"eq37\"\n").unwrap();
        let spec = cfg.initial_spec(Sector::Double).unwrap();
        assert_eq!(spec, Preset::Eq37.into());
        let modes = ModeSet::build(&cfg.cavity).unwrap();
        let v = double::initial_state_double(&spec, &modes).unwrap();
        let nonzero: Vec<_> = v.iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 2);
        for z in nonzero {
            assert!((z.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn observable_must_match_the_sector() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.observable(Sector::Single).unwrap(), "conc");
        assert_eq!(cfg.observable(Sector::Double).unwrap(), "conc_paper");
        cfg.analysis.observable = Some("rho44".into());
        assert!(cfg.observable(Sector::Single).is_err());
    }

    #[test]
    fn sweep_range_is_inclusive() {
        let cfg = RunConfig::default();
        let xs = cfg.sweep_points();
        assert_eq!(xs.len(), 11);
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[10], 0.5);
    }
}
