//! Single-excitation sector: `|e1 g2 {0}⟩`, `|g1 e2 {0}⟩` and `|g1 g2 {1}_μ⟩`.
//!
//! Amplitude layout: slot 0 is `b1`, slot 1 is `b2`, slot `2+μ` is `b_μ`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;
use serde::Serialize;

use crate::cavity::{Atom, CavityConfig, ModeSet};
use crate::error::{Error, Result};
use crate::propagate::{
    norm_sq, propagate_with, Generator, PropagationOptions, TimeGrid, Trajectory,
};
use crate::state::{AtomState, InitialStateSpec};
use crate::C64;

pub fn dimension(modes: &ModeSet) -> usize {
    2 + modes.len()
}

/// `H` with `H[j,μ] = i·g_{μj}`, `H[μ,j] = −i·g*_{μj}`, `H[μ,μ] = Δ_μ`.
pub fn build_generator_single(modes: &ModeSet) -> Result<Generator> {
    modes.check_consistency()?;
    let i = C64::new(0.0, 1.0);
    let mut triplets = Vec::with_capacity(5 * modes.len());
    for mu in 0..modes.len() {
        let row = 2 + mu;
        triplets.push((row, row, C64::new(modes.detuning(mu), 0.0)));
        for atom in Atom::BOTH {
            let g = modes.coupling(mu, atom);
            let j = atom.index();
            triplets.push((j, row, i * g));
            triplets.push((row, j, -i * g.conj()));
        }
    }
    Ok(Generator::from_triplets(dimension(modes), triplets))
}

pub fn initial_state_single(spec: &InitialStateSpec, modes: &ModeSet) -> Result<DVector<C64>> {
    let n = spec.excitation()?;
    if n != 1 {
        return Err(Error::InitialState(format!(
            "single-excitation sector needs excitation number 1, spec has {n}"
        )));
    }
    let mut v = DVector::zeros(dimension(modes));
    for term in spec.terms() {
        let occ = term.occupations();
        let slot = match (term.atoms, occ.as_slice()) {
            ([AtomState::Excited, AtomState::Ground], []) => 0,
            ([AtomState::Ground, AtomState::Excited], []) => 1,
            ([AtomState::Ground, AtomState::Ground], [(mode, 1)]) => {
                2 + modes.index_of(*mode).ok_or_else(|| {
                    Error::InitialState(format!("mode {mode} is not in the mode set"))
                })?
            }
            _ => {
                return Err(Error::InitialState(format!(
                    "term {term:?} is not a single-excitation ket"
                )))
            }
        };
        v[slot] += term.coeff;
    }
    let n2 = norm_sq(v.as_slice());
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::InitialState("state has zero norm".into()));
    }
    Ok(v / C64::new(n2.sqrt(), 0.0))
}

/// Builds the sector for `config`, propagates `initial` and reduces every
/// sample to [`SingleObservables`].
pub fn simulate_single(
    config: &CavityConfig,
    initial: &InitialStateSpec,
    grid: TimeGrid,
    options: PropagationOptions,
) -> Result<Trajectory<SingleObservables>> {
    let modes = ModeSet::build(config)?;
    let h = build_generator_single(&modes)?;
    let v0 = initial_state_single(initial, &modes)?;
    propagate_with(&h, &v0, grid, options, |_, v| SingleObservables::of(v))
}

/// `(b_s, b_a) = ((b1+b2)/√2, (b1−b2)/√2)`.
pub fn dicke_transform(b1: C64, b2: C64) -> (C64, C64) {
    ((b1 + b2) * FRAC_1_SQRT_2, (b1 - b2) * FRAC_1_SQRT_2)
}

/// `C = 2|b1·b2*|`.
pub fn concurrence_single(b1: C64, b2: C64) -> f64 {
    2.0 * (b1 * b2.conj()).norm()
}

/// `C = sqrt[(ρ_ss − ρ_aa)² + (2·Im ρ_as)²]`, the same quantity in the Dicke basis.
pub fn concurrence_single_dicke(b1: C64, b2: C64) -> f64 {
    let (bs, ba) = dicke_transform(b1, b2);
    let d = bs.norm_sqr() - ba.norm_sqr();
    let im = 2.0 * (bs * ba.conj()).im;
    d.hypot(im)
}

/// Amplitudes of one single-excitation sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleExcState {
    pub t: f64,
    pub b1: C64,
    pub b2: C64,
    pub b_mu: Vec<C64>,
}

impl SingleExcState {
    pub fn from_vector(t: f64, v: &DVector<C64>) -> Self {
        Self {
            t,
            b1: v[0],
            b2: v[1],
            b_mu: v.as_slice()[2..].to_vec(),
        }
    }

    pub fn observables(&self) -> SingleObservables {
        let cav: f64 = self.b_mu.iter().map(|z| z.norm_sqr()).sum();
        SingleObservables::from_parts(self.b1, self.b2, cav)
    }
}

/// Per-sample derived quantities written to trajectory CSVs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingleObservables {
    pub b1_sq: f64,
    pub b2_sq: f64,
    pub cav_pop: f64,
    pub bs_sq: f64,
    pub ba_sq: f64,
    pub conc: f64,
    pub im_rho_as: f64,
}

impl SingleObservables {
    pub const COLUMNS: [&'static str; 7] = [
        "b1_sq",
        "b2_sq",
        "cav_pop",
        "bs_sq",
        "ba_sq",
        "conc",
        "im_rho_as",
    ];

    pub fn of(v: &DVector<C64>) -> Self {
        let cav = norm_sq(&v.as_slice()[2..]);
        Self::from_parts(v[0], v[1], cav)
    }

    fn from_parts(b1: C64, b2: C64, cav_pop: f64) -> Self {
        let (bs, ba) = dicke_transform(b1, b2);
        Self {
            b1_sq: b1.norm_sqr(),
            b2_sq: b2.norm_sqr(),
            cav_pop,
            bs_sq: bs.norm_sqr(),
            ba_sq: ba.norm_sqr(),
            conc: concurrence_single(b1, b2),
            im_rho_as: (bs * ba.conj()).im,
        }
    }

    pub fn values(&self) -> [f64; 7] {
        [
            self.b1_sq,
            self.b2_sq,
            self.cav_pop,
            self.bs_sq,
            self.ba_sq,
            self.conc,
            self.im_rho_as,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{CavityConfig, Direction, ModeId};
    use crate::propagate::{propagate, Method, PropagationOptions, TimeGrid};
    use crate::state::{Preset, StateTerm};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn modes(n: usize, x2: f64) -> ModeSet {
        ModeSet::build(&CavityConfig {
            n_freqs: n,
            x1: 0.0,
            x2,
            ..CavityConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn generator_is_hermitian_with_expected_shape() {
        for n in [1, 3, 5, 11] {
            let ms = modes(n, 37.25);
            let h = build_generator_single(&ms).unwrap();
            assert_eq!(h.dim(), 2 + 2 * n);
            assert_eq!(h.hermiticity_defect(), 0.0);
            assert_eq!(h.get(0, 0), C64::new(0.0, 0.0));
            for mu in 0..ms.len() {
                assert_eq!(h.get(2 + mu, 2 + mu).re, ms.detuning(mu));
                assert_eq!(
                    h.get(1, 2 + mu),
                    C64::new(0.0, 1.0) * ms.coupling(mu, Atom::Second)
                );
            }
        }
    }

    #[test]
    fn single_rung_spectrum_is_symmetric() {
        let h = build_generator_single(&modes(1, 0.0)).unwrap();
        let ev = crate::propagate::SpectralPropagator::new(&h)
            .eigenvalues()
            .clone();
        let mut sorted: Vec<f64> = ev.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        for k in 0..sorted.len() {
            assert_relative_eq!(sorted[k], -sorted[sorted.len() - 1 - k], epsilon = 1e-12);
        }
    }

    #[test]
    fn decoupled_limit_keeps_atoms_frozen() {
        let cfg = CavityConfig {
            n_freqs: 5,
            x1: 0.0,
            x2: 3.0,
            ..CavityConfig::default()
        };
        let ms = ModeSet::build(&cfg).unwrap();
        let diag = (0..ms.len()).map(|mu| (2 + mu, 2 + mu, C64::new(ms.detuning(mu), 0.0)));
        let h0 = Generator::from_triplets(dimension(&ms), diag);
        let v0 = initial_state_single(&Preset::Symmetric.into(), &ms).unwrap();
        let traj = propagate(
            &h0,
            &v0,
            TimeGrid::new(0.1, 20).unwrap(),
            PropagationOptions::default(),
        )
        .unwrap();
        for v in &traj.samples {
            assert_relative_eq!(v[0].norm(), FRAC_1_SQRT_2, epsilon = 1e-14);
            assert_relative_eq!(v[1].norm(), FRAC_1_SQRT_2, epsilon = 1e-14);
        }
    }

    #[test]
    fn presets_map_to_slots() {
        let ms = modes(3, 1.0);
        let v = initial_state_single(&Preset::E1G2.into(), &ms).unwrap();
        assert_eq!(v[0], C64::new(1.0, 0.0));
        assert_eq!(norm_sq(v.as_slice()), 1.0);
        let v = initial_state_single(&Preset::Symmetric.into(), &ms).unwrap();
        assert_relative_eq!(v[0].re, FRAC_1_SQRT_2);
        assert_relative_eq!(v[1].re, FRAC_1_SQRT_2);
        let v = initial_state_single(&Preset::Antisymmetric.into(), &ms).unwrap();
        assert_relative_eq!(v[1].re, -FRAC_1_SQRT_2);
        let mode = ModeId::new(-1, Direction::Left);
        let v = initial_state_single(&Preset::Photon(mode).into(), &ms).unwrap();
        assert_eq!(v[2 + ms.index_of(mode).unwrap()], C64::new(1.0, 0.0));
    }

    #[test]
    fn unnormalized_terms_are_normalized() {
        let ms = modes(1, 0.0);
        let one = C64::new(1.0, 0.0);
        let spec = InitialStateSpec::Terms(vec![
            StateTerm::from_ket(one, "eg").unwrap(),
            StateTerm::from_ket(one, "ge").unwrap(),
        ]);
        let v = initial_state_single(&spec, &ms).unwrap();
        assert_relative_eq!(v[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(v[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let ms = modes(1, 0.0);
        let one = C64::new(1.0, 0.0);
        let cancel = InitialStateSpec::Terms(vec![
            StateTerm::from_ket(one, "eg").unwrap(),
            StateTerm::from_ket(-one, "eg").unwrap(),
        ]);
        assert!(initial_state_single(&cancel, &ms).is_err());
        let far = InitialStateSpec::Terms(vec![StateTerm::from_ket(one, "gg 3r").unwrap()]);
        assert!(initial_state_single(&far, &ms).is_err());
        assert!(initial_state_single(&Preset::Ee.into(), &ms).is_err());
    }

    #[test]
    fn dicke_examples() {
        let (bs, ba) = dicke_transform(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        assert_relative_eq!(bs.norm_sqr(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(ba.norm_sqr(), 0.5, epsilon = 1e-15);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let (bs, ba) = dicke_transform(h, h);
        assert_relative_eq!(bs.re, 1.0, epsilon = 1e-15);
        assert_eq!(ba.norm(), 0.0);
        let (bs, ba) = dicke_transform(C64::new(0.5, 0.0), C64::new(0.0, 0.5));
        assert_relative_eq!(bs.norm_sqr(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(ba.norm_sqr(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn concurrence_examples() {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        assert_relative_eq!(concurrence_single(h, h), 1.0, epsilon = 1e-15);
        assert_eq!(
            concurrence_single(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            0.0
        );
    }

    #[test]
    fn spectral_and_rk4_agree() {
        let ms = modes(5, 123.4);
        let h = build_generator_single(&ms).unwrap();
        let v0 = initial_state_single(&Preset::E1G2.into(), &ms).unwrap();
        let t_rt = ms.config().round_trip_time();
        let grid = TimeGrid::spanning(3.0 * t_rt, t_rt / 100.0).unwrap();
        let a = propagate(
            &h,
            &v0,
            grid,
            PropagationOptions::with_method(Method::Spectral),
        )
        .unwrap();
        let b = propagate(&h, &v0, grid, PropagationOptions::with_method(Method::Rk4)).unwrap();
        let worst = a
            .samples
            .iter()
            .zip(&b.samples)
            .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).norm()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "max amplitude discrepancy {worst}");
    }

    fn amp() -> impl Strategy<Value = C64> {
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
    }

    proptest! {
        #[test]
        fn dicke_form_matches_bare_form(b1 in amp(), b2 in amp()) {
            let s = (b1.norm_sqr() + b2.norm_sqr()).sqrt().max(1e-3);
            let (b1, b2) = (b1 / s, b2 / s);
            prop_assert!((concurrence_single(b1, b2) - concurrence_single_dicke(b1, b2)).abs() < 1e-12);
        }

        #[test]
        fn dicke_transform_preserves_norm(b1 in amp(), b2 in amp()) {
            let (bs, ba) = dicke_transform(b1, b2);
            let lhs = bs.norm_sqr() + ba.norm_sqr();
            prop_assert!((lhs - b1.norm_sqr() - b2.norm_sqr()).abs() < 1e-14);
        }
    }
}
