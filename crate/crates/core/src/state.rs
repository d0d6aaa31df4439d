//! Initial-state specifications shared by both excitation sectors.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cavity::{Direction, ModeId};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomState {
    #[serde(rename = "e")]
    Excited,
    #[serde(rename = "g")]
    Ground,
}

impl AtomState {
    pub fn excitation(self) -> u32 {
        match self {
            AtomState::Excited => 1,
            AtomState::Ground => 0,
        }
    }

    fn parse(c: char) -> Option<Self> {
        match c {
            'e' | 'E' => Some(AtomState::Excited),
            'g' | 'G' => Some(AtomState::Ground),
            _ => None,
        }
    }
}

/// One ket `coeff·|atom1 atom2⟩⊗|photons⟩` of an initial superposition.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTerm {
    pub coeff: C64,
    pub atoms: [AtomState; 2],
    /// Photon occupations; a mode listed twice has its counts added.
    pub photons: Vec<(ModeId, u32)>,
}

impl StateTerm {
    pub fn new(coeff: C64, atoms: [AtomState; 2], photons: Vec<(ModeId, u32)>) -> Self {
        Self {
            coeff,
            atoms,
            photons,
        }
    }

    /// Parses the compact ket notation used in configs: `"eg"`, `"gg 0r"`,
    /// `"gg 0r:2"`, `"gg 0r 0l"`, `"ge -3l"`.
    pub fn from_ket(coeff: C64, ket: &str) -> Result<Self> {
        let mut parts = ket.split_whitespace();
        let atoms_str = parts
            .next()
            .ok_or_else(|| Error::InitialState("empty ket".into()))?;
        let chars: Vec<char> = atoms_str.chars().collect();
        let atoms = match chars.as_slice() {
            [a, b] => match (AtomState::parse(*a), AtomState::parse(*b)) {
                (Some(a), Some(b)) => [a, b],
                _ => {
                    return Err(Error::InitialState(format!(
                        "bad atom labels {atoms_str:?}"
                    )))
                }
            },
            _ => {
                return Err(Error::InitialState(format!(
                    "bad atom labels {atoms_str:?}"
                )))
            }
        };
        let mut photons = Vec::new();
        for p in parts {
            let (mode, count) = match p.split_once(':') {
                Some((m, c)) => (
                    m,
                    c.parse::<u32>()
                        .map_err(|_| Error::InitialState(format!("bad photon count in {p:?}")))?,
                ),
                None => (p, 1),
            };
            photons.push((parse_mode(mode)?, count));
        }
        Ok(Self {
            coeff,
            atoms,
            photons,
        })
    }

    pub fn excitation(&self) -> u32 {
        self.atoms.iter().map(|a| a.excitation()).sum::<u32>()
            + self.photons.iter().map(|(_, n)| n).sum::<u32>()
    }

    /// Photon occupations merged per mode with zero counts dropped, sorted.
    pub fn occupations(&self) -> Vec<(ModeId, u32)> {
        let mut occ: Vec<(ModeId, u32)> = Vec::new();
        for &(mode, n) in &self.photons {
            match occ.iter_mut().find(|(m, _)| *m == mode) {
                Some(slot) => slot.1 += n,
                None => occ.push((mode, n)),
            }
        }
        occ.retain(|(_, n)| *n > 0);
        occ.sort_by_key(|(m, _)| (m.m, m.dir));
        occ
    }
}

/// Parses a mode label such as `0r`, `-3l`, `+2r`.
pub fn parse_mode(s: &str) -> Result<ModeId> {
    let s = s.trim();
    let bad = || Error::InitialState(format!("bad mode label {s:?}"));
    if s.len() < 2 {
        return Err(bad());
    }
    let (num, dir) = s.split_at(s.len() - 1);
    let dir = Direction::parse(dir).ok_or_else(bad)?;
    let m = num
        .trim_start_matches('+')
        .parse::<i32>()
        .map_err(|_| bad())?;
    Ok(ModeId::new(m, dir))
}

/// Named initial states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    /// `|e1 g2 {0}⟩`
    E1G2,
    /// `(|e1 g2⟩ + |g1 e2⟩)/√2 ⊗ |{0}⟩`
    Symmetric,
    /// `(|e1 g2⟩ − |g1 e2⟩)/√2 ⊗ |{0}⟩`
    Antisymmetric,
    /// `|g1 g2 {1}_mode⟩`
    Photon(ModeId),
    /// `|e1 e2 {0}⟩`
    Ee,
    /// `(|{1}0r⟩ + |{1}0l⟩)/√2 ⊗ |e1 g2⟩`
    Eq37,
    /// `|g1 g2 {2}0r⟩`
    Gg2r,
    /// `|{1}0r {1}0l⟩ ⊗ |gg⟩`
    OneOne,
    /// `(|{2}0l⟩ + |{2}0r⟩)/√2 ⊗ |gg⟩`
    NOOn,
    /// `(|e1 g2⟩ + |g1 e2⟩)/√2 ⊗ |{1}0l⟩`
    BellXPhoton,
    /// `(|e1 g2 {1}0l⟩ + |g1 e2 {1}0r⟩)/√2`
    Corr,
    /// `√p·|e1 e2 {0}⟩ + √(1−p)·|e1 g2 {1}0l⟩`
    Mix(f64),
}

impl Preset {
    pub const SINGLE_NAMES: [&'static str; 4] =
        ["e1g2", "symmetric", "antisymmetric", "photon(m,dir)"];
    pub const DOUBLE_NAMES: [&'static str; 8] = [
        "ee",
        "eq37",
        "gg2r",
        "oneone",
        "nOOn",
        "bell_x_photon",
        "corr",
        "mix(p)",
    ];

    pub fn excitation(&self) -> u32 {
        match self {
            Preset::E1G2 | Preset::Symmetric | Preset::Antisymmetric | Preset::Photon(_) => 1,
            _ => 2,
        }
    }

    pub fn terms(&self) -> Vec<StateTerm> {
        use AtomState::{Excited as E, Ground as G};
        let r0 = ModeId::central(Direction::Right);
        let l0 = ModeId::central(Direction::Left);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let one = C64::new(1.0, 0.0);
        let t = StateTerm::new;
        match *self {
            Preset::E1G2 => vec![t(one, [E, G], vec![])],
            Preset::Symmetric => vec![t(h, [E, G], vec![]), t(h, [G, E], vec![])],
            Preset::Antisymmetric => vec![t(h, [E, G], vec![]), t(-h, [G, E], vec![])],
            Preset::Photon(mode) => vec![t(one, [G, G], vec![(mode, 1)])],
            Preset::Ee => vec![t(one, [E, E], vec![])],
            Preset::Eq37 => vec![t(h, [E, G], vec![(l0, 1)]), t(h, [E, G], vec![(r0, 1)])],
            Preset::Gg2r => vec![t(one, [G, G], vec![(r0, 2)])],
            Preset::OneOne => vec![t(one, [G, G], vec![(r0, 1), (l0, 1)])],
            Preset::NOOn => vec![t(h, [G, G], vec![(l0, 2)]), t(h, [G, G], vec![(r0, 2)])],
            Preset::BellXPhoton => vec![t(h, [E, G], vec![(l0, 1)]), t(h, [G, E], vec![(l0, 1)])],
            Preset::Corr => vec![t(h, [E, G], vec![(l0, 1)]), t(h, [G, E], vec![(r0, 1)])],
            Preset::Mix(p) => vec![
                t(C64::new(p.sqrt(), 0.0), [E, E], vec![]),
                t(C64::new((1.0 - p).sqrt(), 0.0), [E, G], vec![(l0, 1)]),
            ],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::E1G2 => f.write_str("e1g2"),
            Preset::Symmetric => f.write_str("symmetric"),
            Preset::Antisymmetric => f.write_str("antisymmetric"),
            Preset::Photon(mode) => write!(f, "photon({},{})", mode.m, mode.dir.label()),
            Preset::Ee => f.write_str("ee"),
            Preset::Eq37 => f.write_str("eq37"),
            Preset::Gg2r => f.write_str("gg2r"),
            Preset::OneOne => f.write_str("oneone"),
            Preset::NOOn => f.write_str("nOOn"),
            Preset::BellXPhoton => f.write_str("bell_x_photon"),
            Preset::Corr => f.write_str("corr"),
            Preset::Mix(p) => write!(f, "mix({p})"),
        }
    }
}

fn call_args<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?
        .trim()
        .strip_prefix('(')?
        .strip_suffix(')')
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let p = match s {
            "e1g2" => Preset::E1G2,
            "symmetric" => Preset::Symmetric,
            "antisymmetric" => Preset::Antisymmetric,
            "ee" => Preset::Ee,
            "eq37" => Preset::Eq37,
            "gg2r" => Preset::Gg2r,
            "oneone" => Preset::OneOne,
            "nOOn" | "noon" => Preset::NOOn,
            "bell_x_photon" => Preset::BellXPhoton,
            "corr" => Preset::Corr,
            _ => {
                if let Some(args) = call_args(s, "photon") {
                    let (m, dir) = args.split_once(',').ok_or_else(|| {
                        Error::InitialState(format!("expected photon(m,dir), got {s:?}"))
                    })?;
                    let m = m
                        .trim()
                        .trim_start_matches('+')
                        .parse::<i32>()
                        .map_err(|_| Error::InitialState(format!("bad rung in {s:?}")))?;
                    let dir = Direction::parse(dir)
                        .ok_or_else(|| Error::InitialState(format!("bad direction in {s:?}")))?;
                    Preset::Photon(ModeId::new(m, dir))
                } else if let Some(args) = call_args(s, "mix") {
                    let p = args
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InitialState(format!("bad weight in {s:?}")))?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InitialState(format!(
                            "mix weight {p} outside [0, 1]"
                        )));
                    }
                    Preset::Mix(p)
                } else {
                    return Err(Error::InitialState(format!("unknown preset {s:?}")));
                }
            }
        };
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialStateSpec {
    Preset(Preset),
    Terms(Vec<StateTerm>),
}

impl InitialStateSpec {
    pub fn terms(&self) -> Vec<StateTerm> {
        match self {
            InitialStateSpec::Preset(p) => p.terms(),
            InitialStateSpec::Terms(t) => t.clone(),
        }
    }

    /// The shared excitation number of all terms.
    pub fn excitation(&self) -> Result<u32> {
        let terms = self.terms();
        let first = terms
            .first()
            .ok_or_else(|| Error::InitialState("no terms".into()))?
            .excitation();
        if let Some(bad) = terms.iter().find(|t| t.excitation() != first) {
            return Err(Error::InitialState(format!(
                "mixed excitation numbers {first} and {}",
                bad.excitation()
            )));
        }
        Ok(first)
    }
}

impl From<Preset> for InitialStateSpec {
    fn from(p: Preset) -> Self {
        InitialStateSpec::Preset(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for name in [
            "e1g2",
            "symmetric",
            "antisymmetric",
            "photon(-2,l)",
            "ee",
            "eq37",
            "gg2r",
            "oneone",
            "nOOn",
            "bell_x_photon",
            "corr",
            "mix(0.25)",
        ] {
            let p: Preset = name.parse().unwrap();
            assert_eq!(p.to_string(), name);
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert!("bogus".parse::<Preset>().is_err());
        assert!("mix(1.5)".parse::<Preset>().is_err());
        assert!("photon(1,x)".parse::<Preset>().is_err());
    }

    #[test]
    fn preset_excitation_numbers() {
        for name in Preset::SINGLE_NAMES
            .iter()
            .chain(Preset::DOUBLE_NAMES.iter())
        {
            let name = name.replace("(m,dir)", "(0,r)").replace("(p)", "(0.5)");
            let p: Preset = name.parse().unwrap();
            let spec = InitialStateSpec::from(p);
            assert_eq!(spec.excitation().unwrap(), p.excitation(), "{name}");
        }
    }

    #[test]
    fn ket_notation() {
        let t = StateTerm::from_ket(C64::new(1.0, 0.0), "gg 0r:2 -1l").unwrap();
        assert_eq!(t.atoms, [AtomState::Ground, AtomState::Ground]);
        assert_eq!(t.excitation(), 3);
        assert_eq!(
            t.occupations(),
            vec![
                (ModeId::new(-1, Direction::Left), 1),
                (ModeId::new(0, Direction::Right), 2)
            ]
        );
        assert!(StateTerm::from_ket(C64::new(1.0, 0.0), "ex").is_err());
        assert!(StateTerm::from_ket(C64::new(1.0, 0.0), "gg 0q").is_err());
    }

    #[test]
    fn mixed_excitation_is_rejected() {
        let spec = InitialStateSpec::Terms(vec![
            StateTerm::from_ket(C64::new(1.0, 0.0), "eg").unwrap(),
            StateTerm::from_ket(C64::new(1.0, 0.0), "ee").unwrap(),
        ]);
        assert!(spec.excitation().is_err());
        assert!(InitialStateSpec::Terms(vec![]).excitation().is_err());
    }
}
