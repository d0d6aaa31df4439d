//! Hermitian generators and their time evolution.
//!
//! Both excitation sectors evolve under `v' = -i H v` with a constant
//! Hermitian `H`. Two propagators are provided:
//!
//! * spectral: diagonalize once, then `v(t) = U·exp(-iΛt)·U†·v(0)` at every
//!   sample, independently and in parallel;
//! * RK4: classical fixed-step integration, used as an independent
//!   cross-check and for generators too large to diagonalize.
//!
//! Norm drift is measured at every output sample and reported; it is never
//! corrected.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Largest dimension for which [`Method::default_for`] picks the spectral route.
pub const SPECTRAL_DIM_LIMIT: usize = 6000;

/// Sparse Hermitian matrix in compressed-row form, units of `Ω0`.
#[derive(Clone, Debug)]
pub struct Generator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Generator {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != C64::new(0.0, 0.0)).collect();
        let mut k = 0;
        let (mut cols2, mut vals2) = (
            Vec::with_capacity(cols.len()),
            Vec::with_capacity(vals.len()),
        );
        for (i, &r) in rows.iter().enumerate() {
            if keep[i] {
                row_ptr[r + 1] += 1;
                cols2.push(cols[i]);
                vals2.push(vals[i]);
                k += 1;
            }
        }
        debug_assert_eq!(k, cols2.len());
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            cols: cols2,
            vals: vals2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// `max |H_rc - conj(H_cr)|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Gershgorin bound on the spectral radius (max absolute row sum).
    pub fn spectral_radius_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `out = H·v`.
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * v[self.cols[i]];
            }
            *o = acc;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spectral,
    Rk4,
}

impl Method {
    pub fn default_for(dim: usize) -> Self {
        if dim <= SPECTRAL_DIM_LIMIT {
            Method::Spectral
        } else {
            Method::Rk4
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::Rk4 => "rk4",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationOptions {
    pub method: Method,
    /// Allowed `| ‖v(t)‖² - 1 |` for the spectral route.
    pub spectral_tol: f64,
    /// Allowed `| ‖v(t)‖² - 1 |` for RK4.
    pub rk4_tol: f64,
    /// Internal RK4 step is at most `rk4_step_factor / ρ(H)`.
    pub rk4_step_factor: f64,
    /// Allowed `| ‖v(0)‖² - 1 |`.
    pub initial_tol: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            method: Method::Spectral,
            spectral_tol: 1e-9,
            rk4_tol: 1e-6,
            rk4_step_factor: 0.05,
            initial_tol: 1e-9,
        }
    }
}

impl PropagationOptions {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

/// Uniform output grid `t_k = k·dt`, `k = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    len: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, len: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::TimeGrid(format!("step must be positive, got {dt}")));
        }
        if len == 0 {
            return Err(Error::TimeGrid("grid needs at least one sample".into()));
        }
        Ok(Self { dt, len })
    }

    /// Grid covering `[0, t_end]` with step `dt`; `t_end` is rounded to the
    /// nearest whole number of steps.
    pub fn spanning(t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::TimeGrid(format!(
                "end time must be >= 0, got {t_end}"
            )));
        }
        let steps = (t_end / dt).round();
        if !steps.is_finite() || steps > 1e9 {
            return Err(Error::TimeGrid(format!("{t_end}/{dt} is too many steps")));
        }
        Self::new(dt, steps as usize + 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.time(k))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropagationStats {
    pub method: Method,
    pub dimension: usize,
    pub samples: usize,
    pub dt_out: f64,
    /// RK4 internal step; `None` for the spectral route.
    pub dt_internal: Option<f64>,
    pub internal_steps: u64,
    pub max_norm_drift: f64,
    pub max_drift_time: f64,
    pub final_norm_drift: f64,
    pub threads: usize,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub grid: TimeGrid,
    pub samples: Vec<T>,
    pub stats: PropagationStats,
}

impl<T> Trajectory<T> {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.times()
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> Trajectory<U> {
        Trajectory {
            grid: self.grid,
            samples: self.samples.into_iter().map(f).collect(),
            stats: self.stats,
        }
    }
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigendecomposition `H = U·Λ·U†`.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl SpectralPropagator {
    pub fn new(generator: &Generator) -> Self {
        let eig = generator.to_dense().symmetric_eigen();
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// `U†·v0`.
    pub fn coefficients(&self, v0: &DVector<C64>) -> DVector<C64> {
        self.vectors.ad_mul(v0)
    }

    pub fn state_at(&self, coefficients: &DVector<C64>, t: f64) -> DVector<C64> {
        let phased = DVector::from_iterator(
            coefficients.len(),
            self.values
                .iter()
                .zip(coefficients.iter())
                .map(|(&lambda, &c)| c * C64::from_polar(1.0, -lambda * t)),
        );
        &self.vectors * phased
    }
}

enum Engine<'a> {
    Spectral(SpectralPropagator),
    Rk4(&'a Generator),
}

/// A generator prepared for repeated propagation of different initial states.
pub struct Propagator<'a> {
    dim: usize,
    options: PropagationOptions,
    engine: Engine<'a>,
}

impl<'a> Propagator<'a> {
    pub fn new(generator: &'a Generator, options: PropagationOptions) -> Self {
        let engine = match options.method {
            Method::Spectral => Engine::Spectral(SpectralPropagator::new(generator)),
            Method::Rk4 => Engine::Rk4(generator),
        };
        Self {
            dim: generator.dim(),
            options,
            engine,
        }
    }

    pub fn options(&self) -> &PropagationOptions {
        &self.options
    }

    /// Propagates `initial` over `grid`, mapping each sample through
    /// `observe(t, v(t))`.
    pub fn run_with<T, F>(
        &self,
        initial: &DVector<C64>,
        grid: TimeGrid,
        observe: F,
    ) -> Result<Trajectory<T>>
    where
        T: Send,
        F: Fn(f64, &DVector<C64>) -> T + Sync,
    {
        if initial.len() != self.dim {
            return Err(Error::InitialState(format!(
                "vector has length {}, generator dimension is {}",
                initial.len(),
                self.dim
            )));
        }
        let n0 = norm_sq(initial.as_slice());
        if (n0 - 1.0).abs() > self.options.initial_tol {
            return Err(Error::NotNormalized {
                norm_sq: n0,
                tol: self.options.initial_tol,
            });
        }
        match &self.engine {
            Engine::Spectral(sp) => self.run_spectral(sp, initial, grid, observe),
            Engine::Rk4(generator) => self.run_rk4(generator, initial, grid, observe),
        }
    }

    pub fn run(&self, initial: &DVector<C64>, grid: TimeGrid) -> Result<Trajectory<DVector<C64>>> {
        self.run_with(initial, grid, |_, v| v.clone())
    }

    fn run_spectral<T, F>(
        &self,
        sp: &SpectralPropagator,
        initial: &DVector<C64>,
        grid: TimeGrid,
        observe: F,
    ) -> Result<Trajectory<T>>
    where
        T: Send,
        F: Fn(f64, &DVector<C64>) -> T + Sync,
    {
        let coeffs = sp.coefficients(initial);
        let out: Vec<(T, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let t = grid.time(k);
                let v = if k == 0 {
                    initial.clone()
                } else {
                    sp.state_at(&coeffs, t)
                };
                let drift = (norm_sq(v.as_slice()) - 1.0).abs();
                (observe(t, &v), drift)
            })
            .collect();
        let (mut max_drift, mut max_k) = (0.0f64, 0usize);
        for (k, (_, d)) in out.iter().enumerate() {
            if *d > max_drift {
                max_drift = *d;
                max_k = k;
            }
        }
        let final_drift = out.last().map(|(_, d)| *d).unwrap_or(0.0);
        if max_drift > self.options.spectral_tol {
            return Err(Error::NormDrift {
                method: "spectral",
                drift: max_drift,
                time: grid.time(max_k),
                tol: self.options.spectral_tol,
                dt_internal: 0.0,
                steps: 0,
            });
        }
        let stats = PropagationStats {
            method: Method::Spectral,
            dimension: self.dim,
            samples: grid.len(),
            dt_out: grid.dt(),
            dt_internal: None,
            internal_steps: 0,
            max_norm_drift: max_drift,
            max_drift_time: grid.time(max_k),
            final_norm_drift: final_drift,
            threads: rayon::current_num_threads(),
        };
        Ok(Trajectory {
            grid,
            samples: out.into_iter().map(|(t, _)| t).collect(),
            stats,
        })
    }

    fn run_rk4<T, F>(
        &self,
        generator: &Generator,
        initial: &DVector<C64>,
        grid: TimeGrid,
        observe: F,
    ) -> Result<Trajectory<T>>
    where
        F: Fn(f64, &DVector<C64>) -> T,
    {
        let dt_out = grid.dt();
        let rho = generator.spectral_radius_bound();
        let h_max = if rho > 0.0 {
            (self.options.rk4_step_factor / rho).min(dt_out)
        } else {
            dt_out
        };
        let substeps = (dt_out / h_max).ceil().max(1.0) as u64;
        let h = dt_out / substeps as f64;

        let n = self.dim;
        let mut v = initial.clone();
        let mut stepper = Rk4Stepper::new(n);
        let mut samples = Vec::with_capacity(grid.len());
        let (mut max_drift, mut max_t, mut final_drift) = (0.0f64, 0.0, 0.0);
        let mut steps = 0u64;
        for k in 0..grid.len() {
            if k > 0 {
                for _ in 0..substeps {
                    stepper.step(generator, v.as_mut_slice(), h);
                }
                steps += substeps;
            }
            let t = grid.time(k);
            let drift = (norm_sq(v.as_slice()) - 1.0).abs();
            final_drift = drift;
            if drift > max_drift {
                max_drift = drift;
                max_t = t;
            }
            if drift > self.options.rk4_tol {
                return Err(Error::NormDrift {
                    method: "rk4",
                    drift,
                    time: t,
                    tol: self.options.rk4_tol,
                    dt_internal: h,
                    steps,
                });
            }
            samples.push(observe(t, &v));
        }
        let stats = PropagationStats {
            method: Method::Rk4,
            dimension: n,
            samples: grid.len(),
            dt_out,
            dt_internal: Some(h),
            internal_steps: steps,
            max_norm_drift: max_drift,
            max_drift_time: max_t,
            final_norm_drift: final_drift,
            threads: 1,
        };
        Ok(Trajectory {
            grid,
            samples,
            stats,
        })
    }
}

struct Rk4Stepper {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Rk4Stepper {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }

    /// `f(v) = -i·H·v`
    fn rhs(generator: &Generator, v: &[C64], out: &mut [C64]) {
        generator.apply(v, out);
        for o in out.iter_mut() {
            *o = C64::new(o.im, -o.re);
        }
    }

    fn step(&mut self, generator: &Generator, v: &mut [C64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        Self::rhs(generator, v, k1);
        for i in 0..v.len() {
            tmp[i] = v[i] + k1[i] * (0.5 * h);
        }
        Self::rhs(generator, tmp, k2);
        for i in 0..v.len() {
            tmp[i] = v[i] + k2[i] * (0.5 * h);
        }
        Self::rhs(generator, tmp, k3);
        for i in 0..v.len() {
            tmp[i] = v[i] + k3[i] * h;
        }
        Self::rhs(generator, tmp, k4);
        for i in 0..v.len() {
            v[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

pub fn propagate_with<T, F>(
    generator: &Generator,
    initial: &DVector<C64>,
    grid: TimeGrid,
    options: PropagationOptions,
    observe: F,
) -> Result<Trajectory<T>>
where
    T: Send,
    F: Fn(f64, &DVector<C64>) -> T + Sync,
{
    Propagator::new(generator, options).run_with(initial, grid, observe)
}

pub fn propagate(
    generator: &Generator,
    initial: &DVector<C64>,
    grid: TimeGrid,
    options: PropagationOptions,
) -> Result<Trajectory<DVector<C64>>> {
    Propagator::new(generator, options).run(initial, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_level(omega: f64) -> Generator {
        // H = [[0, Ω/2], [Ω/2, 0]]
        Generator::from_triplets(
            2,
            [(0, 1, c(omega / 2.0, 0.0)), (1, 0, c(omega / 2.0, 0.0))],
        )
    }

    #[test]
    fn triplets_are_summed_and_zeros_dropped() {
        let g = Generator::from_triplets(
            3,
            [
                (0, 1, c(1.0, 0.0)),
                (0, 1, c(0.0, 2.0)),
                (2, 2, c(0.0, 0.0)),
                (1, 0, c(1.0, -2.0)),
            ],
        );
        assert_eq!(g.nnz(), 2);
        assert_eq!(g.get(0, 1), c(1.0, 2.0));
        assert_eq!(g.get(2, 2), c(0.0, 0.0));
        assert_eq!(g.hermiticity_defect(), 0.0);
    }

    #[test]
    fn non_hermitian_defect_is_reported() {
        let g = Generator::from_triplets(2, [(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, 1.0))]);
        assert_relative_eq!(g.hermiticity_defect(), 2.0);
    }

    #[test]
    fn zero_generator_is_identity_flow() {
        let g = Generator::from_triplets(3, std::iter::empty());
        let v0 = DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        let grid = TimeGrid::new(0.5, 5).unwrap();
        for method in [Method::Spectral, Method::Rk4] {
            let traj = propagate(&g, &v0, grid, PropagationOptions::with_method(method)).unwrap();
            for v in &traj.samples {
                assert_relative_eq!((v - &v0).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rabi_oscillation_matches_closed_form() {
        let omega = 2.0;
        let g = two_level(omega);
        let v0 = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let grid = TimeGrid::new(0.01, 400).unwrap();
        for method in [Method::Spectral, Method::Rk4] {
            let traj = propagate_with(
                &g,
                &v0,
                grid,
                PropagationOptions::with_method(method),
                |_, v| v[0].norm_sqr(),
            )
            .unwrap();
            for (t, p) in traj.times().zip(&traj.samples) {
                assert_relative_eq!(*p, (omega * t / 2.0).cos().powi(2), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rejects_unnormalized_initial_state() {
        let g = two_level(1.0);
        let v0 = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let grid = TimeGrid::new(0.1, 3).unwrap();
        let err = propagate(&g, &v0, grid, PropagationOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn rk4_drift_beyond_tolerance_fails_with_diagnostics() {
        let g = two_level(200.0);
        let v0 = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let grid = TimeGrid::new(0.1, 50).unwrap();
        let opts = PropagationOptions {
            method: Method::Rk4,
            rk4_step_factor: 1.5,
            ..Default::default()
        };
        match propagate(&g, &v0, grid, opts) {
            Err(Error::NormDrift {
                method,
                dt_internal,
                steps,
                ..
            }) => {
                assert_eq!(method, "rk4");
                assert!(dt_internal > 0.0 && steps > 0);
            }
            other => panic!("expected drift failure, got {other:?}"),
        }
    }

    #[test]
    fn grid_spanning() {
        let g = TimeGrid::spanning(1.0, 0.25).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.end(), 1.0);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(0.1, 0).is_err());
    }

    #[test]
    fn default_method_by_dimension() {
        assert_eq!(Method::default_for(298), Method::Spectral);
        assert_eq!(Method::default_for(6000), Method::Spectral);
        assert_eq!(Method::default_for(6001), Method::Rk4);
    }
}
