//! Retarded dynamics of two two-level atoms coupled to the discrete modes of
//! a ring cavity.
//!
//! The crate works in the interaction picture with the rotating-wave
//! approximation, so the single- and double-excitation sectors close and are
//! propagated as linear systems `v' = -i H v` with a time-independent
//! Hermitian generator. Energies are in units of the vacuum Rabi frequency
//! `Ω0` of the resonant mode, times in `Ω0⁻¹`.
//!
//! Module map:
//!
//! * [`cavity`]: geometry, mode lattice, couplings, retardation times.
//! * [`propagate`]: generator storage, spectral and RK4 propagators.
//! * [`single`]: single-excitation sector, Dicke populations, concurrence.
//! * [`double`]: double-excitation sector, reduced density matrix, `C1`.
//! * [`oracle`]: Wootters concurrence on a full 4x4 density matrix.
//! * [`analysis`]: time averages, spectra, kink and sudden-death detection,
//!   distance sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cavity;
pub mod double;
pub mod error;
pub mod oracle;
pub mod propagate;
pub mod single;
pub mod state;

pub use num_complex::Complex64 as C64;

pub use cavity::{
    Atom, CavityConfig, CouplingScaling, Direction, ModeId, ModeSet, RabiConvention,
    RetardationTimes,
};
pub use double::{CoherenceMode, DoubleExcState, DoubleIndexMap, ReducedDensity4};
pub use error::{Error, Result};
pub use oracle::DensityMatrix4;
pub use propagate::{Generator, Method, PropagationStats, TimeGrid, Trajectory};
pub use single::SingleExcState;
pub use state::{AtomState, InitialStateSpec, Preset, StateTerm};
