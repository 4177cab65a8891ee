//! Atomic levels, ladder presets and hyperfine basis enumeration.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angular::{triangle, HalfInt};
use crate::error::{domain, Error, Result};

/// Index of each rung in a ladder's level list.
pub const G: usize = 0;
pub const I: usize = 1;
pub const R1: usize = 2;
pub const R2: usize = 3;

/// One fine-structure level, optionally restricted to a single hyperfine
/// manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub label: String,
    pub s: HalfInt,
    pub l: i32,
    pub j: HalfInt,
    /// Set when only one hyperfine manifold of the level takes part.
    pub f_resolved: Option<HalfInt>,
    /// Bare energy in rad/s on a relative scale. Detunings carry all energy
    /// differences in the rotating frame, so presets leave this at zero.
    pub energy_offset: f64,
}

impl LevelSpec {
    pub fn new(label: &str, s: HalfInt, l: i32, j: HalfInt) -> Self {
        LevelSpec {
            label: label.to_string(),
            s,
            l,
            j,
            f_resolved: None,
            energy_offset: 0.0,
        }
    }

    pub fn with_f(mut self, f: HalfInt) -> Self {
        self.f_resolved = Some(f);
        self
    }

    pub fn validate(&self, nuclear_spin: HalfInt) -> Result<()> {
        if self.l < 0 || self.s.twice() < 0 || self.j.twice() < 0 {
            return domain(format!("level {}: negative angular momentum", self.label));
        }
        if !triangle(HalfInt::int(self.l), self.s, self.j) {
            return domain(format!(
                "level {}: J = {} incompatible with L = {}, S = {}",
                self.label, self.j, self.l, self.s
            ));
        }
        if let Some(f) = self.f_resolved {
            if !triangle(self.j, nuclear_spin, f) {
                return domain(format!(
                    "level {}: F = {} incompatible with J = {}, I = {}",
                    self.label, f, self.j, nuclear_spin
                ));
            }
        }
        Ok(())
    }

    /// Hyperfine manifolds present for this level, ascending.
    pub fn f_values(&self, nuclear_spin: HalfInt) -> Vec<HalfInt> {
        match self.f_resolved {
            Some(f) => vec![f],
            None => HalfInt::range_inclusive((self.j - nuclear_spin).abs(), self.j + nuclear_spin).collect(),
        }
    }

    /// All `|F mF>` states of the level in basis order.
    pub fn states(&self, level: usize, nuclear_spin: HalfInt) -> Vec<HyperfineState> {
        self.f_values(nuclear_spin)
            .into_iter()
            .flat_map(|f| f.projections().map(move |mf| HyperfineState { level, f, mf }))
            .collect()
    }

    pub fn size(&self, nuclear_spin: HalfInt) -> usize {
        self.f_values(nuclear_spin)
            .iter()
            .map(|f| f.multiplicity() as usize)
            .sum()
    }
}

/// `|F mF>` of the level at index `level` in the owning ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HyperfineState {
    pub level: usize,
    pub f: HalfInt,
    pub mf: HalfInt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub name: String,
    pub nuclear_spin: HalfInt,
    /// Ordered g, i, r1, r2. Truncated ladders (two or three levels) are
    /// accepted for test systems.
    pub levels: Vec<LevelSpec>,
    pub dummy_state_included: bool,
}

impl LadderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nuclear_spin.twice() < 0 {
            return domain("negative nuclear spin");
        }
        if !(2..=4).contains(&self.levels.len()) {
            return domain(format!("a ladder needs 2 to 4 levels, got {}", self.levels.len()));
        }
        for level in &self.levels {
            level.validate(self.nuclear_spin)?;
        }
        Ok(())
    }

    pub fn level(&self, index: usize) -> Option<&LevelSpec> {
        self.levels.get(index)
    }

    /// The same ladder cut down to its first `n_levels` rungs.
    pub fn truncated(&self, n_levels: usize) -> LadderSpec {
        let mut out = self.clone();
        out.levels.truncate(n_levels);
        out.name = format!("{}[..{}]", self.name, n_levels);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisState {
    Atomic(HyperfineState),
    Dummy,
}

/// Enumerated basis: levels in ladder order, then `F` ascending, then `mF`
/// ascending, with the dummy state last.
#[derive(Clone, Debug)]
pub struct Basis {
    pub states: Vec<BasisState>,
    level_ranges: Vec<Range<usize>>,
    dummy: Option<usize>,
}

impl Basis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn level_range(&self, level: usize) -> Range<usize> {
        self.level_ranges.get(level).cloned().unwrap_or(0..0)
    }

    pub fn n_levels(&self) -> usize {
        self.level_ranges.len()
    }

    pub fn dummy(&self) -> Option<usize> {
        self.dummy
    }

    pub fn atomic_len(&self) -> usize {
        self.level_ranges.last().map_or(0, |r| r.end)
    }

    pub fn hyperfine(&self, index: usize) -> Option<HyperfineState> {
        match self.states.get(index) {
            Some(BasisState::Atomic(s)) => Some(*s),
            _ => None,
        }
    }

    pub fn index_of(&self, state: HyperfineState) -> Option<usize> {
        let range = self.level_range(state.level);
        self.states[range.clone()]
            .iter()
            .position(|s| *s == BasisState::Atomic(state))
            .map(|k| range.start + k)
    }
}

pub fn enumerate_basis(ladder: &LadderSpec) -> Result<Basis> {
    ladder.validate()?;
    let mut states = Vec::new();
    let mut level_ranges = Vec::with_capacity(ladder.levels.len());
    for (k, level) in ladder.levels.iter().enumerate() {
        let start = states.len();
        states.extend(level.states(k, ladder.nuclear_spin).into_iter().map(BasisState::Atomic));
        level_ranges.push(start..states.len());
    }
    let dummy = ladder.dummy_state_included.then(|| {
        states.push(BasisState::Dummy);
        states.len() - 1
    });
    Ok(Basis {
        states,
        level_ranges,
        dummy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[serde(rename = "type1")]
    Type1,
    #[serde(rename = "type2")]
    Type2,
    ModelAtom,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Type1, Preset::Type2, Preset::ModelAtom];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Type1 => "type1",
            Preset::Type2 => "type2",
            Preset::ModelAtom => "model_atom",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Type1 => "87Rb 5S1/2(F=2) - 5P3/2(F=3) - nD5/2 - n'P3/2",
            Preset::Type2 => "87Rb 5S1/2(F=2) - 5P3/2(F=3) - nD3/2 - n'P1/2",
            Preset::ModelAtom => "four-level model atom, degeneracies 3, 1, 3, 1 (J = 1, 0, 1, 0; I = 0)",
        }
    }

    pub fn ladder(self) -> LadderSpec {
        preset(self)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset {
                name: s.to_string(),
                valid: Preset::ALL.map(Preset::name).join(", "),
            })
    }
}

pub fn preset(which: Preset) -> LadderSpec {
    let half = HalfInt::half;
    let rb_low = |name: &str| -> (LevelSpec, LevelSpec) {
        (
            LevelSpec::new("5S1/2", half(1), 0, half(1)).with_f(HalfInt::int(2)),
            LevelSpec::new(name, half(1), 1, half(3)).with_f(HalfInt::int(3)),
        )
    };
    match which {
        Preset::Type1 => {
            let (g, i) = rb_low("5P3/2");
            LadderSpec {
                name: which.name().into(),
                nuclear_spin: half(3),
                levels: vec![
                    g,
                    i,
                    LevelSpec::new("nD5/2", half(1), 2, half(5)),
                    LevelSpec::new("n'P3/2", half(1), 1, half(3)),
                ],
                dummy_state_included: true,
            }
        }
        Preset::Type2 => {
            let (g, i) = rb_low("5P3/2");
            LadderSpec {
                name: which.name().into(),
                nuclear_spin: half(3),
                levels: vec![
                    g,
                    i,
                    LevelSpec::new("nD3/2", half(1), 2, half(3)),
                    LevelSpec::new("n'P1/2", half(1), 1, half(1)),
                ],
                dummy_state_included: true,
            }
        }
        Preset::ModelAtom => LadderSpec {
            name: which.name().into(),
            nuclear_spin: HalfInt::ZERO,
            levels: vec![
                LevelSpec::new("g", HalfInt::ZERO, 1, HalfInt::int(1)),
                LevelSpec::new("i", HalfInt::ZERO, 0, HalfInt::ZERO),
                LevelSpec::new("r1", HalfInt::ZERO, 1, HalfInt::int(1)),
                LevelSpec::new("r2", HalfInt::ZERO, 0, HalfInt::ZERO),
            ],
            dummy_state_included: true,
        },
    }
}
