//! Double-excitation sector: `|e1 e2 {0}⟩`, `|e_j {1}_α⟩` and `|g1 g2 {1}_α{1}_β⟩`.
//!
//! Slot 0 holds `b12`, then `b_{α1}` for all `α`, then `b_{α2}`, then the
//! photon pairs `b_{αβ}` (`α ≥ β`, lexicographic). The diagonal pair `b_{αα}`
//! is the amplitude of the normalized two-photon ket `|{2}_α⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::{DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::cavity::{Atom, CavityConfig, ModeSet};
use crate::error::{Error, Result};
use crate::oracle::DensityMatrix4;
use crate::propagate::{
    norm_sq, propagate_with, Generator, PropagationOptions, TimeGrid, Trajectory,
};
use crate::state::{AtomState, InitialStateSpec};
use crate::C64;

/// Default cap on the double-sector dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DoubleIndexMap {
    modes: usize,
}

impl DoubleIndexMap {
    pub fn new(modes: usize) -> Self {
        Self { modes }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dimension(&self) -> usize {
        dimension_for(self.modes)
    }

    pub const fn both_excited(&self) -> usize {
        0
    }

    pub fn atom_photon(&self, alpha: usize, atom: Atom) -> usize {
        1 + atom.index() * self.modes + alpha
    }

    /// Slot of the unordered pair `{α, β}`.
    pub fn pair(&self, alpha: usize, beta: usize) -> usize {
        let (a, b) = if alpha >= beta {
            (alpha, beta)
        } else {
            (beta, alpha)
        };
        1 + 2 * self.modes + a * (a + 1) / 2 + b
    }

    pub fn pair_start(&self) -> usize {
        1 + 2 * self.modes
    }

    /// Inverse of [`Self::pair`] for slots at or past [`Self::pair_start`].
    pub fn pair_of(&self, slot: usize) -> (usize, usize) {
        let k = slot - self.pair_start();
        let mut a = (((8 * k + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
        while (a + 1) * (a + 2) / 2 <= k {
            a += 1;
        }
        while a * (a + 1) / 2 > k {
            a -= 1;
        }
        (a, k - a * (a + 1) / 2)
    }
}

pub fn dimension_for(modes: usize) -> usize {
    1 + 2 * modes + modes * (modes + 1) / 2
}

/// Builds the double-sector generator, refusing dimensions above `cap`.
pub fn build_generator_double(modes: &ModeSet, cap: usize) -> Result<Generator> {
    modes.check_consistency()?;
    let map = DoubleIndexMap::new(modes.len());
    let dim = map.dimension();
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let m = modes.len();
    let i = C64::new(0.0, 1.0);
    let mut trip: Vec<(usize, usize, C64)> = Vec::with_capacity(2 * m * (2 * m + 4) + dim);
    // A is anti-Hermitian with v' = A·v; H = i·A. Each coupling is entered in
    // the emitting direction with its Hermitian mirror.
    let mut couple = |row: usize, col: usize, a: C64| {
        trip.push((row, col, i * a));
        trip.push((col, row, i * (-a.conj())));
    };
    for alpha in 0..m {
        for atom in Atom::BOTH {
            let slot = map.atom_photon(alpha, atom);
            // |ee⟩ → atom `other` emits into α, leaving `atom` excited.
            couple(slot, 0, -modes.coupling(alpha, atom.other()).conj());
            // |e_atom {1}_α⟩ → atom emits into β.
            for beta in 0..m {
                let pair = map.pair(alpha, beta);
                let g = modes.coupling(beta, atom).conj();
                let factor = if beta == alpha { SQRT_2 } else { 1.0 };
                couple(pair, slot, -g * factor);
            }
        }
    }
    for alpha in 0..m {
        let d = modes.detuning(alpha);
        for atom in Atom::BOTH {
            let slot = map.atom_photon(alpha, atom);
            trip.push((slot, slot, C64::new(d, 0.0)));
        }
        for beta in 0..=alpha {
            let pair = map.pair(alpha, beta);
            trip.push((pair, pair, C64::new(d + modes.detuning(beta), 0.0)));
        }
    }
    Ok(Generator::from_triplets(dim, trip))
}

pub fn initial_state_double(spec: &InitialStateSpec, modes: &ModeSet) -> Result<DVector<C64>> {
    let n = spec.excitation()?;
    if n != 2 {
        return Err(Error::InitialState(format!(
            "double-excitation sector needs excitation number 2, spec has {n}"
        )));
    }
    let map = DoubleIndexMap::new(modes.len());
    let index = |mode| {
        modes
            .index_of(mode)
            .ok_or_else(|| Error::InitialState(format!("mode {mode} is not in the mode set")))
    };
    let mut v = DVector::zeros(map.dimension());
    for term in spec.terms() {
        use AtomState::{Excited as E, Ground as G};
        let occ = term.occupations();
        let slot = match (term.atoms, occ.as_slice()) {
            ([E, E], []) => map.both_excited(),
            ([E, G], [(mode, 1)]) => map.atom_photon(index(*mode)?, Atom::First),
            ([G, E], [(mode, 1)]) => map.atom_photon(index(*mode)?, Atom::Second),
            ([G, G], [(mode, 2)]) => {
                let a = index(*mode)?;
                map.pair(a, a)
            }
            ([G, G], [(m1, 1), (m2, 1)]) => map.pair(index(*m1)?, index(*m2)?),
            _ => {
                return Err(Error::InitialState(format!(
                    "term {term:?} is not a double-excitation ket"
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
/// sample to [`DoubleObservables`].
pub fn simulate_double(
    config: &CavityConfig,
    initial: &InitialStateSpec,
    grid: TimeGrid,
    options: PropagationOptions,
    cap: usize,
) -> Result<Trajectory<DoubleObservables>> {
    let modes = ModeSet::build(config)?;
    let h = build_generator_double(&modes, cap)?;
    let v0 = initial_state_double(initial, &modes)?;
    let m = modes.len();
    propagate_with(&h, &v0, grid, options, |_, v| {
        DoubleObservables::of(v.as_slice(), m)
    })
}

/// Which form of the coherence term enters `C1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceMode {
    /// `2·Σ_α |b*_{α2}·b_{α1}|`
    #[default]
    PaperSumOfModuli,
    /// `2·|Σ_α b_{α1}·b*_{α2}| = 2|ρ23|`
    TraceModulusOfSum,
}

/// Reduced two-atom state in the basis `|ee⟩, |eg⟩, |ge⟩, |gg⟩`.
///
/// Only `ρ23` survives off the diagonal in this sector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedDensity4 {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho44: f64,
    pub rho23: C64,
}

impl ReducedDensity4 {
    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22 + self.rho33 + self.rho44
    }

    pub fn matrix(&self) -> Matrix4<C64> {
        let r = |x: f64| C64::new(x, 0.0);
        let mut m = Matrix4::zeros();
        m[(0, 0)] = r(self.rho11);
        m[(1, 1)] = r(self.rho22);
        m[(2, 2)] = r(self.rho33);
        m[(3, 3)] = r(self.rho44);
        m[(1, 2)] = self.rho23;
        m[(2, 1)] = self.rho23.conj();
        m
    }

    pub fn to_density(&self) -> Result<DensityMatrix4> {
        DensityMatrix4::new(self.matrix())
    }

    /// `2·max{0, |ρ23| − sqrt(ρ11·ρ44)}`, the X-state concurrence.
    pub fn x_state_concurrence(&self) -> f64 {
        (2.0 * (self.rho23.norm() - (self.rho11 * self.rho44).sqrt())).max(0.0)
    }
}

/// Splits a double-sector vector into `(b12, b_{·1}, b_{·2}, pairs)`.
fn parts(v: &[C64], m: usize) -> (C64, &[C64], &[C64], &[C64]) {
    (v[0], &v[1..1 + m], &v[1 + m..1 + 2 * m], &v[1 + 2 * m..])
}

pub fn reduced_density(v: &[C64], modes: usize) -> ReducedDensity4 {
    let (b12, b1, b2, pairs) = parts(v, modes);
    ReducedDensity4 {
        rho11: b12.norm_sqr(),
        rho22: norm_sq(b1),
        rho33: norm_sq(b2),
        rho44: norm_sq(pairs),
        rho23: b1.iter().zip(b2).map(|(a, b)| a * b.conj()).sum(),
    }
}

/// `2·|b12|·sqrt(ρ44)`.
fn threshold(v: &[C64], modes: usize) -> f64 {
    let (b12, _, _, pairs) = parts(v, modes);
    2.0 * b12.norm() * norm_sq(pairs).sqrt()
}

/// The signed coherence-minus-threshold quantity `C1`; `C = max{0, C1}`.
pub fn c1(v: &[C64], modes: usize, mode: CoherenceMode) -> f64 {
    let (_, b1, b2, _) = parts(v, modes);
    let coherence = match mode {
        CoherenceMode::PaperSumOfModuli => {
            2.0 * b1
                .iter()
                .zip(b2)
                .map(|(a, b)| (b.conj() * a).norm())
                .sum::<f64>()
        }
        CoherenceMode::TraceModulusOfSum => {
            2.0 * b1
                .iter()
                .zip(b2)
                .map(|(a, b)| a * b.conj())
                .sum::<C64>()
                .norm()
        }
    };
    coherence - threshold(v, modes)
}

pub fn concurrence_double(v: &[C64], modes: usize, mode: CoherenceMode) -> f64 {
    c1(v, modes, mode).max(0.0)
}

/// `C1` with the coherence written through the per-mode Dicke amplitudes
/// `b_{αs}`, `b_{αa}`.
pub fn c1_dicke(v: &[C64], modes: usize) -> f64 {
    let (_, b1, b2, _) = parts(v, modes);
    let coherence: f64 = b1
        .iter()
        .zip(b2)
        .map(|(&a, &b)| {
            let s = (a + b) * FRAC_1_SQRT_2;
            let d = (a - b) * FRAC_1_SQRT_2;
            (s.norm_sqr() - d.norm_sqr()).hypot(2.0 * (s.conj() * d).im)
        })
        .sum();
    coherence - threshold(v, modes)
}

/// Amplitudes of one double-excitation sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleExcState {
    pub t: f64,
    pub map: DoubleIndexMap,
    pub amplitudes: DVector<C64>,
}

impl DoubleExcState {
    pub fn new(t: f64, map: DoubleIndexMap, amplitudes: DVector<C64>) -> Self {
        Self { t, map, amplitudes }
    }

    pub fn reduced_density(&self) -> ReducedDensity4 {
        reduced_density(self.amplitudes.as_slice(), self.map.modes())
    }

    pub fn c1(&self, mode: CoherenceMode) -> f64 {
        c1(self.amplitudes.as_slice(), self.map.modes(), mode)
    }
}

/// Per-sample derived quantities written to trajectory CSVs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DoubleObservables {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho44: f64,
    pub rho23_abs: f64,
    pub c1_paper: f64,
    pub c1_trace: f64,
    pub conc_paper: f64,
    pub conc_trace: f64,
}

impl DoubleObservables {
    pub const COLUMNS: [&'static str; 9] = [
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

    pub fn of(v: &[C64], modes: usize) -> Self {
        let rho = reduced_density(v, modes);
        let c1_paper = c1(v, modes, CoherenceMode::PaperSumOfModuli);
        let c1_trace = c1(v, modes, CoherenceMode::TraceModulusOfSum);
        Self {
            rho11: rho.rho11,
            rho22: rho.rho22,
            rho33: rho.rho33,
            rho44: rho.rho44,
            rho23_abs: rho.rho23.norm(),
            c1_paper,
            c1_trace,
            conc_paper: c1_paper.max(0.0),
            conc_trace: c1_trace.max(0.0),
        }
    }

    pub fn values(&self) -> [f64; 9] {
        [
            self.rho11,
            self.rho22,
            self.rho33,
            self.rho44,
            self.rho23_abs,
            self.c1_paper,
            self.c1_trace,
            self.conc_paper,
            self.conc_trace,
        ]
    }

    pub fn c1(&self, mode: CoherenceMode) -> f64 {
        match mode {
            CoherenceMode::PaperSumOfModuli => self.c1_paper,
            CoherenceMode::TraceModulusOfSum => self.c1_trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{CavityConfig, Direction, ModeId};
    use crate::oracle::wootters_concurrence;
    use crate::propagate::{propagate, propagate_with, PropagationOptions, TimeGrid};
    use crate::state::Preset;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn modes(n: usize, x2: f64) -> ModeSet {
        ModeSet::build(&CavityConfig {
            n_freqs: n,
            x1: 0.0,
            x2,
            ..CavityConfig::default()
        })
        .unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DVector<C64> {
        let v = DVector::from_fn(dim, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let n = v.norm();
        v / C64::new(n, 0.0)
    }

    #[test]
    fn index_map_counts_and_is_bijective() {
        assert_eq!(dimension_for(2), 8);
        assert_eq!(dimension_for(90), 4276);
        assert_eq!(dimension_for(22), 298);
        for m in [1usize, 2, 6, 22] {
            let map = DoubleIndexMap::new(m);
            let mut seen = vec![false; map.dimension()];
            seen[map.both_excited()] = true;
            for a in 0..m {
                for atom in Atom::BOTH {
                    let s = map.atom_photon(a, atom);
                    assert!(!seen[s]);
                    seen[s] = true;
                }
            }
            let mut last = map.pair_start() - 1;
            for a in 0..m {
                for b in 0..=a {
                    let s = map.pair(a, b);
                    assert_eq!(s, last + 1, "pairs are contiguous in lexicographic order");
                    assert_eq!(map.pair(b, a), s);
                    assert_eq!(map.pair_of(s), (a, b));
                    assert!(!seen[s]);
                    seen[s] = true;
                    last = s;
                }
            }
            assert!(seen.iter().all(|&x| x));
        }
    }

    #[test]
    fn generator_is_hermitian() {
        for n in [1, 3, 5] {
            let h = build_generator_double(&modes(n, 123.4), DEFAULT_DIMENSION_CAP).unwrap();
            assert_eq!(h.dim(), dimension_for(2 * n));
            assert_eq!(h.hermiticity_defect(), 0.0);
        }
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let err = build_generator_double(&modes(5, 0.0), 50).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { dim: 76, cap: 50 }));
        assert!(err.is_resource_cap());
    }

    #[test]
    fn presets_map_to_slots() {
        let ms = modes(3, 0.0);
        let map = DoubleIndexMap::new(ms.len());
        let r0 = ms.index_of(ModeId::central(Direction::Right)).unwrap();
        let l0 = ms.index_of(ModeId::central(Direction::Left)).unwrap();
        let v = initial_state_double(&Preset::Ee.into(), &ms).unwrap();
        assert_eq!(v[0], C64::new(1.0, 0.0));
        let v = initial_state_double(&Preset::Gg2r.into(), &ms).unwrap();
        assert_eq!(v[map.pair(r0, r0)], C64::new(1.0, 0.0));
        let v = initial_state_double(&Preset::Eq37.into(), &ms).unwrap();
        assert_relative_eq!(v[map.atom_photon(r0, Atom::First)].re, FRAC_1_SQRT_2);
        assert_relative_eq!(v[map.atom_photon(l0, Atom::First)].re, FRAC_1_SQRT_2);
        let v = initial_state_double(&Preset::OneOne.into(), &ms).unwrap();
        assert_eq!(v[map.pair(r0, l0)], C64::new(1.0, 0.0));
        let v = initial_state_double(&Preset::Mix(0.25).into(), &ms).unwrap();
        assert_relative_eq!(v[0].re, 0.5);
        assert_relative_eq!(v[map.atom_photon(l0, Atom::First)].re, 0.75f64.sqrt());
        assert!(initial_state_double(&Preset::E1G2.into(), &ms).is_err());
    }

    #[test]
    fn reduced_density_examples() {
        let ms = modes(3, 0.0);
        let m = ms.len();
        let v = initial_state_double(&Preset::Ee.into(), &ms).unwrap();
        let rho = reduced_density(v.as_slice(), m);
        assert_eq!(
            (rho.rho11, rho.rho22, rho.rho33, rho.rho44),
            (1.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(c1(v.as_slice(), m, CoherenceMode::PaperSumOfModuli), 0.0);

        let v = initial_state_double(&Preset::Eq37.into(), &ms).unwrap();
        let rho = reduced_density(v.as_slice(), m);
        assert_relative_eq!(rho.rho22, 1.0, epsilon = 1e-15);
        assert_eq!(rho.rho23.norm(), 0.0);

        let v = initial_state_double(&Preset::BellXPhoton.into(), &ms).unwrap();
        let rho = reduced_density(v.as_slice(), m);
        assert_relative_eq!(rho.rho23.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(
            concurrence_double(v.as_slice(), m, CoherenceMode::TraceModulusOfSum),
            1.0,
            epsilon = 1e-15
        );

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let v = random_state(&mut rng, dimension_for(m));
            assert_relative_eq!(
                reduced_density(v.as_slice(), m).trace(),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn trace_mode_matches_wootters_and_dicke_matches_sum_of_moduli() {
        let m = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v = random_state(&mut rng, dimension_for(m));
            let rho = reduced_density(v.as_slice(), m);
            let w = wootters_concurrence(&rho.to_density().unwrap());
            let c = concurrence_double(v.as_slice(), m, CoherenceMode::TraceModulusOfSum);
            assert!((w - c).abs() < 1e-10, "wootters {w} vs closed form {c}");
            assert!((c - rho.x_state_concurrence()).abs() < 1e-12);
            let p = c1(v.as_slice(), m, CoherenceMode::PaperSumOfModuli);
            assert!((p - c1_dicke(v.as_slice(), m)).abs() < 1e-12);
        }
    }

    #[test]
    fn dicke_per_mode_reductions() {
        let m = 2;
        let mut v = DVector::zeros(dimension_for(m));
        v[1] = C64::new(0.3, 0.1);
        v[1 + m] = C64::new(0.3, 0.1);
        let bs_sq = (v[1] * SQRT_2).norm_sqr();
        assert_relative_eq!(c1_dicke(v.as_slice(), m), bs_sq, epsilon = 1e-15);
        v[1 + m] = -v[1];
        assert_relative_eq!(c1_dicke(v.as_slice(), m), bs_sq, epsilon = 1e-15);
    }

    /// Atom 1, atom 2, photon numbers per mode.
    type FockState = (u8, u8, Vec<u8>);

    /// Builds the RWA Hamiltonian directly on a truncated Fock space
    /// (two qubits ⊗ photon numbers ≤ 2 per mode) and restricts it to two
    /// excitations, independent of the sector equations above.
    fn fock_oracle(ms: &ModeSet) -> (DMatrix<C64>, Vec<FockState>) {
        let m = ms.len();
        let mut basis: Vec<FockState> = Vec::new();
        let mut occ = vec![0u8; m];
        fn rec(k: usize, left: u8, occ: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if k == occ.len() {
                out.push(occ.clone());
                return;
            }
            for n in 0..=left {
                occ[k] = n;
                rec(k + 1, left - n, occ, out);
            }
            occ[k] = 0;
        }
        for a1 in 0..2u8 {
            for a2 in 0..2u8 {
                let left = 2 - a1 - a2;
                let mut photon_states = Vec::new();
                rec(0, left, &mut occ, &mut photon_states);
                for p in photon_states {
                    if p.iter().sum::<u8>() == left {
                        basis.push((a1, a2, p));
                    }
                }
            }
        }
        let n = basis.len();
        let mut h = DMatrix::zeros(n, n);
        let find = |k: &(u8, u8, Vec<u8>)| basis.iter().position(|b| b == k).unwrap();
        for (col, (a1, a2, p)) in basis.iter().enumerate() {
            let det: f64 = p
                .iter()
                .enumerate()
                .map(|(mu, &c)| c as f64 * ms.detuning(mu))
                .sum();
            h[(col, col)] = C64::new(det, 0.0);
            // σ_j^- a_μ^† : emission, amplitude -i g*_{μj}·sqrt(n+1)
            for (j, aj) in [*a1, *a2].into_iter().enumerate() {
                if aj == 1 {
                    for mu in 0..m {
                        let mut q = p.clone();
                        q[mu] += 1;
                        let mut atoms = [*a1, *a2];
                        atoms[j] = 0;
                        let row = find(&(atoms[0], atoms[1], q.clone()));
                        let atom = if j == 0 { Atom::First } else { Atom::Second };
                        let g = ms.coupling(mu, atom);
                        let amp = -C64::new(0.0, 1.0) * g.conj() * (q[mu] as f64).sqrt();
                        h[(row, col)] += amp;
                        h[(col, row)] += amp.conj();
                    }
                }
            }
        }
        (h, basis)
    }

    #[test]
    fn sector_dynamics_match_fock_space_oracle() {
        let ms = modes(3, 0.37);
        let m = ms.len();
        let map = DoubleIndexMap::new(m);
        let (h_fock, basis) = fock_oracle(&ms);
        assert_eq!(basis.len(), map.dimension());
        // Sector slot → (Fock index, phase convention 1).
        let to_fock = |slot: usize| -> usize {
            let key = if slot == 0 {
                (1, 1, vec![0; m])
            } else if slot < map.pair_start() {
                let (atom, a) = ((slot - 1) / m, (slot - 1) % m);
                let mut p = vec![0; m];
                p[a] = 1;
                if atom == 0 {
                    (1, 0, p)
                } else {
                    (0, 1, p)
                }
            } else {
                let (a, b) = map.pair_of(slot);
                let mut p = vec![0; m];
                p[a] += 1;
                p[b] += 1;
                (0, 0, p)
            };
            basis.iter().position(|k| *k == key).unwrap()
        };
        let h = build_generator_double(&ms, DEFAULT_DIMENSION_CAP)
            .unwrap()
            .to_dense();
        for r in 0..map.dimension() {
            for c in 0..map.dimension() {
                let want = h_fock[(to_fock(r), to_fock(c))];
                assert!(
                    (h[(r, c)] - want).norm() < 1e-14,
                    "H[{r},{c}] = {} vs {}",
                    h[(r, c)],
                    want
                );
            }
        }
    }

    #[test]
    fn ee_single_rung_never_entangles() {
        let ms = modes(1, 0.0);
        let h = build_generator_double(&ms, DEFAULT_DIMENSION_CAP).unwrap();
        let v0 = initial_state_double(&Preset::Ee.into(), &ms).unwrap();
        let t_rt = ms.config().round_trip_time();
        let grid = TimeGrid::spanning(2.0 * t_rt, t_rt / 200.0).unwrap();
        let traj = propagate_with(&h, &v0, grid, PropagationOptions::default(), |_, v| {
            c1(v.as_slice(), ms.len(), CoherenceMode::PaperSumOfModuli)
        })
        .unwrap();
        assert!(traj.samples.iter().all(|&c| c <= 1e-12));
    }

    #[test]
    fn rho14_stays_zero_and_trace_is_one() {
        let ms = modes(3, 10.3);
        let h = build_generator_double(&ms, DEFAULT_DIMENSION_CAP).unwrap();
        let v0 = initial_state_double(&Preset::Corr.into(), &ms).unwrap();
        let traj = propagate(
            &h,
            &v0,
            TimeGrid::new(0.05, 40).unwrap(),
            PropagationOptions::default(),
        )
        .unwrap();
        for v in &traj.samples {
            let rho = reduced_density(v.as_slice(), ms.len());
            assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-9);
            assert_eq!(rho.matrix()[(0, 3)], C64::new(0.0, 0.0));
        }
    }
}
