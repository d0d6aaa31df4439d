//! Two-qubit concurrence from the full Wootters construction.
//!
//! This is the reference against which the closed-form sector concurrences
//! are checked; it knows nothing about cavity modes.

use nalgebra::{DVector, Matrix4};
use rand::Rng;
use serde::Serialize;

use crate::double::{self, CoherenceMode};
use crate::error::{Error, Result};
use crate::single;
use crate::C64;

/// A validated two-qubit density matrix in the basis `|ee⟩, |eg⟩, |ge⟩, |gg⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix4 {
    m: Matrix4<C64>,
}

impl DensityMatrix4 {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const PSD_TOL: f64 = 1e-10;

    pub fn new(m: Matrix4<C64>) -> Result<Self> {
        let defect = max_abs(&(m - m.adjoint()));
        if defect > Self::HERMITIAN_TOL {
            return Err(Error::Density(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_TOL {
            return Err(Error::Density(format!("trace {tr} differs from 1")));
        }
        let min_ev = m.symmetric_eigenvalues().min();
        if min_ev < -Self::PSD_TOL {
            return Err(Error::Density(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(Self { m })
    }

    /// `|ψ⟩⟨ψ|` for a normalized two-qubit ket.
    pub fn pure(psi: [C64; 4]) -> Result<Self> {
        let v = nalgebra::Vector4::from(psi);
        Self::new(v * v.adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.m
    }
}

fn max_abs(m: &Matrix4<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sigma_y_y() -> Matrix4<C64> {
    let mut y = Matrix4::zeros();
    y[(0, 3)] = C64::new(-1.0, 0.0);
    y[(1, 2)] = C64::new(1.0, 0.0);
    y[(2, 1)] = C64::new(1.0, 0.0);
    y[(3, 0)] = C64::new(-1.0, 0.0);
    y
}

/// `ρ̃ = (σy⊗σy)·ρ*·(σy⊗σy)`.
pub fn spin_flip(rho: &Matrix4<C64>) -> Matrix4<C64> {
    let y = sigma_y_y();
    y * rho.conjugate() * y
}

/// `C = max{0, √λ1 − √λ2 − √λ3 − √λ4}` with `λi` the eigenvalues of `ρ·ρ̃`.
///
/// `√ρ·ρ̃·√ρ = A·A†` with `A = √ρ·(σy⊗σy)·√ρ*`, so the `√λi` are the singular
/// values of `A`. Taking them directly avoids the `sqrt(ε)` error that square
/// roots of numerically-zero eigenvalues would introduce. Eigenvalues of `ρ`
/// below `16·ε·λmax` are treated as exact zeros for the same reason.
pub fn wootters_concurrence(rho: &DensityMatrix4) -> f64 {
    let eig = rho.m.symmetric_eigen();
    let cutoff = 16.0 * f64::EPSILON * eig.eigenvalues.max().max(0.0);
    let sqrt_d = Matrix4::from_diagonal(
        &eig.eigenvalues
            .map(|x| C64::new(if x > cutoff { x.sqrt() } else { 0.0 }, 0.0)),
    );
    let sqrt_rho = eig.eigenvectors * sqrt_d * eig.eigenvectors.adjoint();
    let a = sqrt_rho * sigma_y_y() * sqrt_rho.conjugate();
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    (s[0] - s[1] - s[2] - s[3]).max(0.0)
}

/// Largest deviations found by [`oracle_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub single_samples: usize,
    pub double_samples: usize,
    pub modes: usize,
    /// `max |C_closed − C_wootters|` in the single sector.
    pub max_dev_single: f64,
    /// `max |C_trace − C_wootters|` in the double sector.
    pub max_dev_double: f64,
    /// `max |c1_dicke − c1_paper|` in the double sector.
    pub max_dev_dicke: f64,
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Reduced density of a single-excitation vector (`b1, b2, b_μ...`).
pub fn single_sector_density(v: &[C64]) -> Result<DensityMatrix4> {
    let mut m = Matrix4::zeros();
    m[(1, 1)] = C64::new(v[0].norm_sqr(), 0.0);
    m[(2, 2)] = C64::new(v[1].norm_sqr(), 0.0);
    m[(1, 2)] = v[0] * v[1].conj();
    m[(2, 1)] = v[1] * v[0].conj();
    m[(3, 3)] = C64::new(v[2..].iter().map(|z| z.norm_sqr()).sum(), 0.0);
    DensityMatrix4::new(m)
}

/// Compares the closed-form concurrences with the Wootters construction on
/// random sector states over `modes` cavity modes.
pub fn oracle_check<R: Rng + ?Sized>(
    rng: &mut R,
    single_samples: usize,
    double_samples: usize,
    modes: usize,
) -> Result<OracleReport> {
    let mut report = OracleReport {
        single_samples,
        double_samples,
        modes,
        max_dev_single: 0.0,
        max_dev_double: 0.0,
        max_dev_dicke: 0.0,
    };
    for _ in 0..single_samples {
        let v = random_unit(rng, 2 + modes);
        let w = wootters_concurrence(&single_sector_density(v.as_slice())?);
        let c = single::concurrence_single(v[0], v[1]);
        report.max_dev_single = report.max_dev_single.max((w - c).abs());
    }
    for _ in 0..double_samples {
        let v = random_unit(rng, double::dimension_for(modes));
        let rho = double::reduced_density(v.as_slice(), modes).to_density()?;
        let w = wootters_concurrence(&rho);
        let c = double::concurrence_double(v.as_slice(), modes, CoherenceMode::TraceModulusOfSum);
        report.max_dev_double = report.max_dev_double.max((w - c).abs());
        let p = double::c1(v.as_slice(), modes, CoherenceMode::PaperSumOfModuli);
        report.max_dev_dicke = report
            .max_dev_dicke
            .max((double::c1_dicke(v.as_slice(), modes) - p).abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bell() -> Matrix4<C64> {
        let h = c(FRAC_1_SQRT_2);
        DensityMatrix4::pure([c(0.0), h, h, c(0.0)]).unwrap().m
    }

    fn werner(p: f64) -> DensityMatrix4 {
        DensityMatrix4::new(bell() * c(p) + Matrix4::identity() * c((1.0 - p) / 4.0)).unwrap()
    }

    #[test]
    fn spin_flip_examples() {
        let gg = DensityMatrix4::pure([c(0.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        let ee = DensityMatrix4::pure([c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(spin_flip(gg.matrix()), *ee.matrix());
        let mixed = Matrix4::identity() * c(0.25);
        assert_eq!(spin_flip(&mixed), mixed);
        assert!(max_abs(&(spin_flip(&bell()) - bell())) < 1e-15);
    }

    #[test]
    fn wootters_examples() {
        assert_relative_eq!(
            wootters_concurrence(&DensityMatrix4::new(bell()).unwrap()),
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(wootters_concurrence(&werner(0.0)), 0.0);
        assert!(wootters_concurrence(&werner(1.0 / 3.0)) < 1e-12);
        assert_relative_eq!(wootters_concurrence(&werner(0.5)), 0.25, epsilon = 1e-12);
        for p in [0.4, 0.6, 0.9] {
            assert_relative_eq!(
                wootters_concurrence(&werner(p)),
                (3.0 * p - 1.0) / 2.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let mut m = Matrix4::identity() * c(0.25);
        m[(0, 1)] = c(0.1);
        assert!(DensityMatrix4::new(m).is_err());
        assert!(DensityMatrix4::new(Matrix4::identity() * c(0.3)).is_err());
        let mut neg = Matrix4::zeros();
        neg[(0, 0)] = c(1.2);
        neg[(1, 1)] = c(-0.2);
        assert!(DensityMatrix4::new(neg).is_err());
    }

    fn random_local_unitary(rng: &mut ChaCha8Rng) -> Matrix2<C64> {
        let a =
            Matrix2::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (a + a.adjoint()) * c(0.5);
        let eig = h.symmetric_eigen();
        let phases = Matrix2::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l)));
        eig.eigenvectors * phases * eig.eigenvectors.adjoint()
    }

    #[test]
    fn local_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let v = random_unit(&mut rng, 6);
            let rho = single_sector_density(v.as_slice()).unwrap();
            let c0 = wootters_concurrence(&rho);
            let u = random_local_unitary(&mut rng).kronecker(&random_local_unitary(&mut rng));
            let u = Matrix4::from_iterator(u.iter().copied());
            let phase = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let rotated = (u * phase) * rho.matrix() * (u * phase).adjoint();
            let rotated = (rotated + rotated.adjoint()) * c(0.5);
            let c1 = wootters_concurrence(&DensityMatrix4::new(rotated).unwrap());
            assert!((c0 - c1).abs() < 1e-10, "{c0} vs {c1}");
        }
    }

    #[test]
    fn random_states_agree_with_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = oracle_check(&mut rng, 100, 50, 6).unwrap();
        assert!(r.max_dev_single < 1e-10, "{r:?}");
        assert!(r.max_dev_double < 1e-10, "{r:?}");
        assert!(r.max_dev_dicke < 1e-12, "{r:?}");
    }
}
