//! Fixtures shared by the criterion benches.

use ringqed_core::{CavityConfig, TimeGrid};

/// Default geometry with `n_freqs` rungs and atoms `x` wavelengths apart.
pub fn geometry(n_freqs: usize, x: f64) -> CavityConfig {
    CavityConfig {
        n_freqs,
        ..CavityConfig::default()
    }
    .with_separation(x)
}

/// `samples_per_trt` outputs per round trip over `n_trt` round trips.
pub fn grid(config: &CavityConfig, n_trt: f64, samples_per_trt: f64) -> TimeGrid {
    let t_rt = config.round_trip_time();
    TimeGrid::spanning(n_trt * t_rt, t_rt / samples_per_trt).expect("valid grid")
}
