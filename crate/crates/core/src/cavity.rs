//! Ring-cavity geometry and the discrete mode lattice.
//!
//! Lengths are in units of the atomic wavelength `λa`, frequencies in units of
//! `Ω0`. The atomic transition coincides with the central mode, so mode
//! frequencies are `ω_m = ωa + m·Δ_FSR` with `Δ_FSR = ωa / (L/λa)` and the
//! detuning of every mode is `m·Δ_FSR`, independent of propagation direction.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "r")]
    Right,
    #[serde(rename = "l")]
    Left,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::Right => "r",
            Direction::Left => "l",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "r" | "right" | "R" => Some(Direction::Right),
            "l" | "left" | "L" => Some(Direction::Left),
            _ => None,
        }
    }
}

/// A cavity mode: frequency rung `m` (offset from resonance) and direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeId {
    pub m: i32,
    pub dir: Direction,
}

impl ModeId {
    pub const fn new(m: i32, dir: Direction) -> Self {
        Self { m, dir }
    }

    pub const fn central(dir: Direction) -> Self {
        Self { m: 0, dir }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.m, self.dir.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Atom {
    First,
    Second,
}

impl Atom {
    pub const BOTH: [Atom; 2] = [Atom::First, Atom::Second];

    pub fn index(self) -> usize {
        match self {
            Atom::First => 0,
            Atom::Second => 1,
        }
    }

    pub fn other(self) -> Atom {
        match self {
            Atom::First => Atom::Second,
            Atom::Second => Atom::First,
        }
    }
}

/// How the coupling magnitude varies across the mode lattice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingScaling {
    /// `g_m = g0` for every mode.
    #[default]
    Flat,
    /// `g_m = g0·sqrt(ω_m/ωa)`, following the `sqrt(ħω/2ε0L)` field amplitude.
    SqrtOmega,
}

/// Relation between the unit `Ω0` and the resonant single-mode coupling `g0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RabiConvention {
    #[serde(rename = "Omega0_equals_2g0")]
    Omega0Equals2G0,
    #[default]
    #[serde(rename = "Omega0_equals_g0")]
    Omega0EqualsG0,
}

impl RabiConvention {
    pub fn g0(self) -> f64 {
        match self {
            RabiConvention::Omega0Equals2G0 => 0.5,
            RabiConvention::Omega0EqualsG0 => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    /// Round-trip length `L/λa`.
    #[serde(rename = "L_over_lambda")]
    pub l_over_lambda: f64,
    /// Atomic transition frequency `ωa/Ω0`.
    #[serde(rename = "omega_a_over_Omega0")]
    pub omega_a: f64,
    /// Frequency rungs per propagation direction (odd). Total modes `2·N_freqs`.
    #[serde(rename = "N_freqs")]
    pub n_freqs: usize,
    #[serde(rename = "x1_over_lambda")]
    pub x1: f64,
    #[serde(rename = "x2_over_lambda")]
    pub x2: f64,
    pub coupling_scaling: CouplingScaling,
    pub rabi_convention: RabiConvention,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            l_over_lambda: 3.48e3,
            omega_a: 1.11e4,
            n_freqs: 11,
            x1: 1.0,
            x2: 1.0,
            coupling_scaling: CouplingScaling::Flat,
            rabi_convention: RabiConvention::Omega0EqualsG0,
        }
    }
}

impl CavityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.l_over_lambda.is_finite() && self.l_over_lambda > 0.0) {
            return bad(format!(
                "L_over_lambda must be > 0, got {}",
                self.l_over_lambda
            ));
        }
        if !(self.omega_a.is_finite() && self.omega_a > 0.0) {
            return bad(format!(
                "omega_a_over_Omega0 must be > 0, got {}",
                self.omega_a
            ));
        }
        if self.n_freqs == 0 || self.n_freqs.is_multiple_of(2) {
            return bad(format!(
                "N_freqs must be odd and >= 1 so that one rung sits on resonance, got {}",
                self.n_freqs
            ));
        }
        if !(self.x1.is_finite() && self.x1 >= 0.0) || !(self.x2.is_finite() && self.x2 >= 0.0) {
            return bad(format!(
                "atom positions must be >= 0, got x1={} x2={}",
                self.x1, self.x2
            ));
        }
        let x = self.x2 - self.x1;
        if !(0.0..self.l_over_lambda).contains(&x) {
            return bad(format!(
                "separation x2 - x1 = {x} must lie in [0, L) with L = {}",
                self.l_over_lambda
            ));
        }
        Ok(())
    }

    /// Atomic separation `x = x2 - x1` in units of `λa`.
    pub fn separation(&self) -> f64 {
        self.x2 - self.x1
    }

    /// Copy with atom 2 placed at `x1 + x`.
    pub fn with_separation(&self, x: f64) -> Self {
        Self {
            x2: self.x1 + x,
            ..self.clone()
        }
    }

    /// Free spectral range `Δ_FSR` in units of `Ω0`.
    pub fn fsr(&self) -> f64 {
        self.omega_a / self.l_over_lambda
    }

    /// Cavity round-trip time `L/c` in units of `Ω0⁻¹`.
    pub fn round_trip_time(&self) -> f64 {
        TAU * self.l_over_lambda / self.omega_a
    }

    pub fn g0(&self) -> f64 {
        self.rabi_convention.g0()
    }

    pub fn position(&self, atom: Atom) -> f64 {
        match atom {
            Atom::First => self.x1,
            Atom::Second => self.x2,
        }
    }

    pub fn half_width(&self) -> i32 {
        ((self.n_freqs - 1) / 2) as i32
    }

    pub fn mode_count(&self) -> usize {
        2 * self.n_freqs
    }
}

/// `ω_m / ωa = 1 + m/(L/λa)`.
fn frequency_ratio(m: i32, config: &CavityConfig) -> f64 {
    1.0 + m as f64 / config.l_over_lambda
}

/// Position-dependent coupling `g_{μj}` in units of `Ω0`.
///
/// The phase `dir·(ω_m/ωa)·2π·x_j` is reduced modulo `2π` piecewise
/// (`x_j` and `m·x_j/L` separately), which keeps it accurate for atoms
/// thousands of wavelengths from the origin.
pub fn coupling(mode: ModeId, atom: Atom, config: &CavityConfig) -> C64 {
    let magnitude = match config.coupling_scaling {
        CouplingScaling::Flat => config.g0(),
        CouplingScaling::SqrtOmega => config.g0() * frequency_ratio(mode.m, config).sqrt(),
    };
    let x = config.position(atom);
    let turns = x.rem_euclid(1.0) + (mode.m as f64 * x / config.l_over_lambda).rem_euclid(1.0);
    C64::from_polar(magnitude, mode.dir.sign() * TAU * turns)
}

/// The mode lattice with detunings and the per-atom coupling table.
#[derive(Clone, Debug)]
pub struct ModeSet {
    config: CavityConfig,
    fsr: f64,
    modes: Vec<ModeId>,
    detunings: Vec<f64>,
    couplings: Vec<[C64; 2]>,
}

/// One row of the mode table export.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeRow {
    pub mode: ModeId,
    pub detuning: f64,
    pub g_abs: f64,
    pub phase_atom1: f64,
    pub phase_atom2: f64,
}

impl ModeSet {
    /// Builds `2·N_freqs` modes ordered by `m` ascending, right before left.
    pub fn build(config: &CavityConfig) -> Result<Self> {
        config.validate()?;
        let fsr = config.fsr();
        let h = config.half_width();
        let mut modes = Vec::with_capacity(config.mode_count());
        for m in -h..=h {
            modes.push(ModeId::new(m, Direction::Right));
            modes.push(ModeId::new(m, Direction::Left));
        }
        let detunings = modes.iter().map(|md| md.m as f64 * fsr).collect();
        let couplings = modes
            .iter()
            .map(|&md| {
                [
                    coupling(md, Atom::First, config),
                    coupling(md, Atom::Second, config),
                ]
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            fsr,
            modes,
            detunings,
            couplings,
        })
    }

    pub fn config(&self) -> &CavityConfig {
        &self.config
    }

    pub fn fsr(&self) -> f64 {
        self.fsr
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn detuning(&self, mu: usize) -> f64 {
        self.detunings[mu]
    }

    pub fn coupling(&self, mu: usize, atom: Atom) -> C64 {
        self.couplings[mu][atom.index()]
    }

    pub fn index_of(&self, mode: ModeId) -> Option<usize> {
        let h = self.config.half_width();
        if mode.m.abs() > h {
            return None;
        }
        let rung = (mode.m + h) as usize;
        Some(2 * rung + usize::from(mode.dir == Direction::Left))
    }

    /// Checks that the tables agree in length and hold finite values.
    pub fn check_consistency(&self) -> Result<()> {
        let n = self.modes.len();
        if self.detunings.len() != n || self.couplings.len() != n {
            return Err(Error::InconsistentCouplings(format!(
                "{} modes, {} detunings, {} coupling rows",
                n,
                self.detunings.len(),
                self.couplings.len()
            )));
        }
        if n != self.config.mode_count() {
            return Err(Error::InconsistentCouplings(format!(
                "{} modes for N_freqs = {}",
                n, self.config.n_freqs
            )));
        }
        let finite = self.detunings.iter().all(|d| d.is_finite())
            && self
                .couplings
                .iter()
                .flatten()
                .all(|g| g.re.is_finite() && g.im.is_finite());
        if !finite {
            return Err(Error::InconsistentCouplings("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn table(&self) -> Vec<ModeRow> {
        self.modes
            .iter()
            .enumerate()
            .map(|(mu, &mode)| ModeRow {
                mode,
                detuning: self.detunings[mu],
                g_abs: self.couplings[mu][0].norm(),
                phase_atom1: self.couplings[mu][0].arg(),
                phase_atom2: self.couplings[mu][1].arg(),
            })
            .collect()
    }
}

/// Photon flight times between the atoms and around the ring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetardationTimes {
    /// `x/c` in `Ω0⁻¹`.
    pub t_x: f64,
    /// `(L-x)/c` in `Ω0⁻¹`.
    pub t_lx: f64,
    /// `L/c` in `Ω0⁻¹`.
    pub t_rt: f64,
}

impl RetardationTimes {
    pub fn t_x_over_trt(&self) -> f64 {
        self.t_x / self.t_rt
    }

    pub fn t_lx_over_trt(&self) -> f64 {
        self.t_lx / self.t_rt
    }
}

pub fn retardation_times(config: &CavityConfig) -> RetardationTimes {
    let t_rt = config.round_trip_time();
    let frac = config.separation() / config.l_over_lambda;
    RetardationTimes {
        t_x: t_rt * frac,
        t_lx: t_rt * (1.0 - frac),
        t_rt,
    }
}
