//! Lindblad master equation over the hyperfine basis of a ladder.
//!
//! The Hamiltonian is written in the rotating frame of all fields with
//! `hbar = 1`, so every energy is an angular frequency in rad/s. Rung `k`
//! sits at minus the sum of the detunings of the fields below it, and the
//! field linking rungs `k` and `k + 1` enters as `H[lower, upper] =
//! (1/2) Omega_r sum_q A^(q) <lower|u^(q)|upper>` plus its conjugate.

mod dump;
mod evolve;
mod liouvillian;
mod weak;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_basis, Basis, LadderSpec, G, I};
use crate::couplings::{angular_matrix, emission_amplitude, spherical_coefficients, FieldConfig};
use crate::error::{domain, Result};
use crate::C64;

pub use dump::{dense_triplets, write_triplets};
pub use evolve::{time_evolve, time_evolve_samples, EvolveOptions};
pub use liouvillian::{liouvillian, steady_state, trace_distance, unvec, vec, Liouvillian, SteadyState};
pub use weak::WeakProbeSolver;

/// D2 natural linewidth of rubidium, 2π × 6.07 MHz.
pub const DEFAULT_INTERMEDIATE_DECAY: f64 = 2.0 * std::f64::consts::PI * 6.07e6;

/// Dummy-state repopulation rate relative to the fastest physical rate.
pub const DUMMY_RATE_FACTOR: f64 = 1000.0;

/// Decay rates in 1/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayRates {
    /// Radiative decay of the intermediate level to the ground level.
    pub intermediate: f64,
    pub transit: f64,
    pub collision: f64,
    pub r1_radiative: f64,
    pub r2_radiative: f64,
    /// Dummy-state lifetime inverse; `None` picks [`DUMMY_RATE_FACTOR`] times
    /// the fastest other rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dummy: Option<f64>,
}

impl DecayRates {
    pub fn new(transit: f64, collision: f64, r1_radiative: f64, r2_radiative: f64) -> Result<Self> {
        let rates = DecayRates {
            intermediate: DEFAULT_INTERMEDIATE_DECAY,
            transit,
            collision,
            r1_radiative,
            r2_radiative,
            dummy: None,
        };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("intermediate", self.intermediate),
            ("transit", self.transit),
            ("collision", self.collision),
            ("r1_radiative", self.r1_radiative),
            ("r2_radiative", self.r2_radiative),
            ("dummy", self.dummy.unwrap_or(0.0)),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return domain(format!("decay rate `{name}` must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Rate into the dummy state shared by every rung.
    pub fn incoherent(&self) -> f64 {
        self.transit + self.collision
    }

    /// Total loss rate of each rung into the dummy state.
    pub fn to_dummy(&self, level: usize) -> f64 {
        self.incoherent()
            + match level {
                2 => self.r1_radiative,
                3 => self.r2_radiative,
                _ => 0.0,
            }
    }

    pub fn dummy_rate(&self) -> f64 {
        self.dummy.unwrap_or_else(|| {
            let fastest = [self.intermediate, self.to_dummy(2), self.to_dummy(3)]
                .into_iter()
                .fold(0.0, f64::max);
            DUMMY_RATE_FACTOR * fastest
        })
    }
}

/// One jump operator `L` stored as its nonzero `(row, col, value)` entries,
/// with rate `gamma` multiplying the dissipator.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseOperator {
    pub label: String,
    pub rate: f64,
    pub entries: Vec<(usize, usize, C64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DissipatorSpec {
    pub dim: usize,
    pub operators: Vec<CollapseOperator>,
}

impl DissipatorSpec {
    /// `sum_k gamma_k L_k^dagger L_k`, the Hermitian loss generator.
    pub fn loss_matrix(&self) -> DMatrix<C64> {
        let mut k = DMatrix::<C64>::zeros(self.dim, self.dim);
        for op in &self.operators {
            for &(r1, c1, v1) in &op.entries {
                for &(r2, c2, v2) in &op.entries {
                    if r1 == r2 {
                        k[(c1, c2)] += v1.conj() * v2 * op.rate;
                    }
                }
            }
        }
        k
    }

    pub fn dense(&self, index: usize) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.operators[index].entries {
            m[(r, c)] += v;
        }
        m
    }
}

/// Probe (g-i), coupling (i-r1) and RF (r1-r2) fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fields {
    pub probe: FieldConfig,
    pub coupling: FieldConfig,
    pub rf: FieldConfig,
}

impl Fields {
    pub fn off() -> Self {
        Fields {
            probe: FieldConfig::off(),
            coupling: FieldConfig::off(),
            rf: FieldConfig::off(),
        }
    }

    pub fn link(&self, k: usize) -> &FieldConfig {
        match k {
            0 => &self.probe,
            1 => &self.coupling,
            _ => &self.rf,
        }
    }
}

/// A ladder with its basis and the angular coupling blocks between adjacent
/// rungs precomputed, ready for repeated model assembly.
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    ladder: LadderSpec,
    basis: Basis,
    /// `links[k][q + 1]` is `<k | u^(q) | k + 1>`, indexed (lower, upper).
    links: Vec<[DMatrix<f64>; 3]>,
}

impl ModelBuilder {
    pub fn new(ladder: &LadderSpec) -> Result<Self> {
        let basis = enumerate_basis(ladder)?;
        let nuc = ladder.nuclear_spin;
        let mut links = Vec::new();
        for k in 0..ladder.levels.len() - 1 {
            let (lower, upper) = (&ladder.levels[k], &ladder.levels[k + 1]);
            let block = |q: i32| -> Result<DMatrix<f64>> {
                let b = angular_matrix(lower, k, upper, k + 1, q, nuc)?;
                Ok(b.matrix.map(|z| z.re).transpose())
            };
            links.push([block(-1)?, block(0)?, block(1)?]);
        }
        Ok(ModelBuilder {
            ladder: ladder.clone(),
            basis,
            links,
        })
    }

    pub fn ladder(&self) -> &LadderSpec {
        &self.ladder
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coupling `sum_q A^(q) u^(q)` of a unit-radial field on link `k`,
    /// indexed (lower, upper).
    pub fn link_angular(&self, k: usize, field: &FieldConfig) -> Result<DMatrix<C64>> {
        let a = spherical_coefficients(&field.polarization)?;
        let blocks = &self.links[k];
        let (rows, cols) = blocks[0].shape();
        Ok(DMatrix::from_fn(rows, cols, |r, c| {
            (0..3).map(|q| a[q] * blocks[q][(r, c)]).sum::<C64>()
        }))
    }

    /// Diagonal of `H` for the given detunings, one entry per basis state.
    pub fn bare_energies(&self, fields: &Fields) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let mut ladder_energy = 0.0;
        for (k, level) in self.ladder.levels.iter().enumerate() {
            if k > 0 {
                ladder_energy -= fields.link(k - 1).detuning;
            }
            for idx in self.basis.level_range(k) {
                out[idx] = ladder_energy + level.energy_offset;
            }
        }
        out
    }

    pub fn hamiltonian(&self, fields: &Fields) -> Result<DMatrix<C64>> {
        for k in 0..self.links.len() {
            let f = fields.link(k);
            if f.radial_rabi.is_nan() || f.radial_rabi < 0.0 {
                return domain(format!("radial Rabi frequency must be >= 0, got {}", f.radial_rabi));
            }
        }
        let n = self.dim();
        let mut h = DMatrix::<C64>::zeros(n, n);
        for (idx, e) in self.bare_energies(fields).into_iter().enumerate() {
            h[(idx, idx)] = C64::new(e, 0.0);
        }
        for k in 0..self.links.len() {
            let field = fields.link(k);
            if field.radial_rabi == 0.0 {
                continue;
            }
            let block = self.link_angular(k, field)? * C64::new(0.5 * field.radial_rabi, 0.0);
            let (lo, up) = (self.basis.level_range(k), self.basis.level_range(k + 1));
            for (a, row) in lo.clone().enumerate() {
                for (b, col) in up.clone().enumerate() {
                    let v = block[(a, b)];
                    h[(row, col)] = v;
                    h[(col, row)] = v.conj();
                }
            }
        }
        Ok(h)
    }

    /// Collapse operators: radiative decay of the intermediate rung to the
    /// ground rung (one operator per polarization), incoherent loss of every
    /// state into the dummy state (one operator per state), and repopulation
    /// of each ground state from the dummy state.
    pub fn collapse_operators(&self, rates: &DecayRates) -> Result<DissipatorSpec> {
        rates.validate()?;
        let ladder = &self.ladder;
        let basis = &self.basis;
        let nuc = ladder.nuclear_spin;
        let mut operators = Vec::new();
        if ladder.levels.len() > 1 && rates.intermediate > 0.0 {
            let (lg, li) = (&ladder.levels[G], &ladder.levels[I]);
            for q in -1..=1 {
                let mut entries = Vec::new();
                for u in basis.level_range(I) {
                    let us = basis.hyperfine(u).expect("atomic state");
                    for l in basis.level_range(G) {
                        let ls = basis.hyperfine(l).expect("atomic state");
                        let amp = emission_amplitude(li, us, lg, ls, q, nuc)?;
                        if amp != 0.0 {
                            entries.push((l, u, C64::new(amp, 0.0)));
                        }
                    }
                }
                operators.push(CollapseOperator {
                    label: format!("radiative i->g q={q:+}"),
                    rate: rates.intermediate,
                    entries,
                });
            }
        }
        if let Some(d) = basis.dummy() {
            for k in 0..ladder.levels.len() {
                let rate = rates.to_dummy(k);
                if rate == 0.0 {
                    continue;
                }
                for idx in basis.level_range(k) {
                    operators.push(CollapseOperator {
                        label: format!("{} #{} -> dummy", ladder.levels[k].label, idx),
                        rate,
                        entries: vec![(d, idx, C64::new(1.0, 0.0))],
                    });
                }
            }
            let ground = basis.level_range(G);
            let share = rates.dummy_rate() / ground.len() as f64;
            if share > 0.0 {
                for idx in ground {
                    operators.push(CollapseOperator {
                        label: format!("dummy -> {} #{}", ladder.levels[G].label, idx),
                        rate: share,
                        entries: vec![(idx, d, C64::new(1.0, 0.0))],
                    });
                }
            }
        }
        Ok(DissipatorSpec {
            dim: basis.len(),
            operators,
        })
    }
}

pub fn build_hamiltonian(
    ladder: &LadderSpec,
    probe: FieldConfig,
    coupling: FieldConfig,
    rf: FieldConfig,
) -> Result<DMatrix<C64>> {
    ModelBuilder::new(ladder)?.hamiltonian(&Fields { probe, coupling, rf })
}

pub fn build_collapse_operators(ladder: &LadderSpec, rates: &DecayRates) -> Result<DissipatorSpec> {
    ModelBuilder::new(ladder)?.collapse_operators(rates)
}

/// Ground-state mixture `rho` with equal weight on every ground sublevel.
pub fn uniform_ground_state(basis: &Basis) -> DMatrix<C64> {
    let n = basis.len();
    let ground = basis.level_range(G);
    let p = 1.0 / ground.len() as f64;
    let mut rho = DMatrix::<C64>::zeros(n, n);
    for idx in ground {
        rho[(idx, idx)] = C64::new(p, 0.0);
    }
    rho
}

/// Population of every rung (dummy state last when present).
pub fn level_populations(basis: &Basis, rho: &DMatrix<C64>) -> Vec<f64> {
    let mut out: Vec<f64> = (0..basis.n_levels())
        .map(|k| basis.level_range(k).map(|i| rho[(i, i)].re).sum())
        .collect();
    if let Some(d) = basis.dummy() {
        out.push(rho[(d, d)].re);
    }
    out
}

pub(crate) fn hermitian_error(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::HalfInt;
    use crate::basis::{preset, Preset, R1, R2};
    use crate::couplings::Polarization;
    use approx::assert_abs_diff_eq;

    fn rates() -> DecayRates {
        DecayRates::new(1e5, 0.0, 1e4, 1e4).unwrap()
    }

    #[test]
    fn zero_fields_give_zero_hamiltonian() {
        let h = build_hamiltonian(
            &preset(Preset::Type1),
            FieldConfig::off(),
            FieldConfig::off(),
            FieldConfig::off(),
        )
        .unwrap();
        assert!(h.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn detuning_blocks_are_scalar() {
        let b = ModelBuilder::new(&preset(Preset::Type2)).unwrap();
        let mut f = Fields::off();
        f.probe.detuning = 1.0;
        f.coupling.detuning = 10.0;
        f.rf.detuning = 100.0;
        let h = b.hamiltonian(&f).unwrap();
        let expect = [0.0, -1.0, -11.0, -111.0];
        for (k, e) in expect.iter().enumerate() {
            for idx in b.basis().level_range(k) {
                assert_eq!(h[(idx, idx)].re, *e);
            }
        }
        let d = b.basis().dummy().unwrap();
        assert_eq!(h[(d, d)].re, 0.0);
    }

    #[test]
    fn pi_rf_conserves_projection() {
        let b = ModelBuilder::new(&preset(Preset::Type1)).unwrap();
        let mut f = Fields::off();
        f.rf = FieldConfig::new(Polarization::z(), 1.0, 0.0).unwrap();
        let h = b.hamiltonian(&f).unwrap();
        let mut coupled = 0;
        for r in b.basis().level_range(R1) {
            for c in b.basis().level_range(R2) {
                if h[(r, c)].norm() > 0.0 {
                    coupled += 1;
                    assert_eq!(b.basis().hyperfine(r).unwrap().mf, b.basis().hyperfine(c).unwrap().mf);
                }
            }
        }
        assert!(coupled > 0);
    }

    #[test]
    fn hamiltonian_is_hermitian_with_missing_blocks() {
        let b = ModelBuilder::new(&preset(Preset::Type1)).unwrap();
        let n = (0.09f64 + 0.01 + 0.25 + 0.64).sqrt();
        let pol = Polarization::new(
            C64::new(0.3 / n, 0.1 / n),
            C64::new(0.0, -0.5 / n),
            C64::new(0.8 / n, 0.0),
        )
        .unwrap();
        let f = Fields {
            probe: FieldConfig::new(pol, 2.0, 0.3).unwrap(),
            coupling: FieldConfig::new(Polarization::x(), 3.0, -0.2).unwrap(),
            rf: FieldConfig::new(Polarization::rf_linear(0.7), 5.0, 0.1).unwrap(),
        };
        let h = b.hamiltonian(&f).unwrap();
        assert!(hermitian_error(&h) < 1e-12 * h.norm());
        let basis = b.basis();
        for (x, y) in [(0, 2), (0, 3), (1, 3)] {
            for r in basis.level_range(x) {
                for c in basis.level_range(y) {
                    assert_eq!(h[(r, c)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn intermediate_decay_branches_sum_to_one() {
        for p in Preset::ALL {
            let b = ModelBuilder::new(&preset(p)).unwrap();
            let d = b.collapse_operators(&rates()).unwrap();
            for u in b.basis().level_range(I) {
                let total: f64 = d
                    .operators
                    .iter()
                    .filter(|op| op.label.starts_with("radiative"))
                    .flat_map(|op| op.entries.iter())
                    .filter(|e| e.1 == u)
                    .map(|e| e.2.norm_sqr())
                    .sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stretched_intermediate_state_decays_to_stretched_ground() {
        let b = ModelBuilder::new(&preset(Preset::Type1)).unwrap();
        let d = b.collapse_operators(&rates()).unwrap();
        let basis = b.basis();
        let top = basis.level_range(I).last().unwrap();
        let targets: Vec<_> = d
            .operators
            .iter()
            .flat_map(|op| op.entries.iter().map(move |e| (op, e)))
            .filter(|(op, e)| e.1 == top && op.label.starts_with("radiative"))
            .collect();
        assert_eq!(targets.len(), 1);
        let (op, e) = targets[0];
        assert_eq!(basis.hyperfine(e.0).unwrap().mf, HalfInt::int(2));
        assert!(op.label.ends_with("q=-1"));
        assert_abs_diff_eq!(e.2.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dummy_repopulates_ground_equally() {
        let b = ModelBuilder::new(&preset(Preset::Type1)).unwrap();
        let r = rates();
        let d = b.collapse_operators(&r).unwrap();
        let repop: Vec<_> = d.operators.iter().filter(|op| op.label.starts_with("dummy")).collect();
        assert_eq!(repop.len(), 5);
        for op in &repop {
            assert_abs_diff_eq!(op.rate, r.dummy_rate() / 5.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(r.dummy_rate(), 1000.0 * DEFAULT_INTERMEDIATE_DECAY, epsilon = 1e-3);
    }

    #[test]
    fn rydberg_loss_is_radiative_without_transit() {
        let b = ModelBuilder::new(&preset(Preset::Type2)).unwrap();
        let r = DecayRates::new(0.0, 0.0, 7.0, 3.0).unwrap();
        let d = b.collapse_operators(&r).unwrap();
        let r1 = b.basis().level_range(R1).start;
        let r2 = b.basis().level_range(R2).start;
        let rate_of = |idx: usize| {
            d.operators
                .iter()
                .find(|op| op.entries.iter().any(|e| e.1 == idx) && op.label.contains("dummy"))
                .map(|op| op.rate)
        };
        assert_eq!(rate_of(r1), Some(7.0));
        assert_eq!(rate_of(r2), Some(3.0));
        assert_eq!(rate_of(b.basis().level_range(I).start), None);
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(DecayRates::new(-1.0, 0.0, 0.0, 0.0).is_err());
        let mut r = rates();
        r.dummy = Some(f64::NAN);
        assert!(build_collapse_operators(&preset(Preset::Type1), &r).is_err());
    }
}
