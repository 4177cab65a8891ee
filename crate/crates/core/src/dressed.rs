//! Analytic dressed-state picture of an RF-coupled Rydberg pair.
//!
//! A π-polarized RF field splits the `r1 <-> r2` problem into independent
//! two-level systems, one per `mJ`, plus uncoupled spectator states of the
//! level with the larger `J`. The functions here build that manifold in the
//! fine-structure basis, re-express it in the hyperfine basis to get optical
//! transition strengths from the intermediate level, and diagonalize the
//! equivalent hyperfine-basis RF coupling as an independent check.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::angular::{clebsch_gordan, parity_sign, wigner_3j, wigner_6j, HalfInt};
use crate::basis::{HyperfineState, LadderSpec, LevelSpec, I, R1, R2};
use crate::couplings::angular_element;
use crate::error::{domain, Result};

/// One state of the dressed lower Rydberg manifold, `|mJ, mI; s>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedEntry {
    pub mj: HalfInt,
    pub mi: HalfInt,
    /// +1 / -1 for the upper / lower member of an RF-coupled pair, 0 for a
    /// spectator.
    pub s: i8,
    /// Energy in rad/s relative to the bare `r1` level.
    pub shift: f64,
}

impl DressedEntry {
    pub fn mf(&self) -> HalfInt {
        self.mj + self.mi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedManifold {
    pub j_r1: HalfInt,
    pub j_r2: HalfInt,
    pub nuclear_spin: HalfInt,
    pub rf_rabi: f64,
    pub rf_detuning: f64,
    pub entries: Vec<DressedEntry>,
    /// `r2` states left uncoupled (`|mJ| > J_r1`), with their bare energy
    /// `-rf_detuning`. Empty for every preset.
    pub r2_spectators: Vec<(HalfInt, HalfInt)>,
}

impl DressedManifold {
    /// Effective Rabi frequency of the pair with projection `mj`, zero for
    /// spectators.
    pub fn pair_rabi(&self, mj: HalfInt) -> f64 {
        let (mut lo, mut hi) = (None, None);
        for e in self.entries.iter().filter(|e| e.mj == mj) {
            match e.s {
                1 => hi = Some(e.shift),
                -1 => lo = Some(e.shift),
                _ => {}
            }
        }
        match (lo, hi) {
            (Some(lo), Some(hi)) => ((hi - lo).powi(2) - self.rf_detuning.powi(2)).max(0.0).sqrt(),
            _ => 0.0,
        }
    }
}

/// π matrix elements `<r1, mJ | u^(0) | r2, mJ>` in the fine-structure basis,
/// one per `mJ` of `r1` (zero where `r2` has no partner).
pub fn fine_structure_pi_elements(r1: &LevelSpec, r2: &LevelSpec) -> Result<Vec<(HalfInt, f64)>> {
    let r1_j = LevelSpec {
        f_resolved: None,
        ..r1.clone()
    };
    let r2_j = LevelSpec {
        f_resolved: None,
        ..r2.clone()
    };
    r1.j.projections()
        .map(|mj| {
            if mj.abs() > r2.j {
                return Ok((mj, 0.0));
            }
            let lower = HyperfineState {
                level: R1,
                f: r1.j,
                mf: mj,
            };
            let upper = HyperfineState {
                level: R2,
                f: r2.j,
                mf: mj,
            };
            let v = angular_element(&r1_j, lower, &r2_j, upper, 0, HalfInt::ZERO)?;
            Ok((mj, v))
        })
        .collect()
}

/// Converts the dressed-picture RF Rabi frequency (carried by the strongest
/// π pair) into the radial Rabi frequency used by the coupling operators.
pub fn rf_radial_rabi(r1: &LevelSpec, r2: &LevelSpec, rf_rabi: f64) -> Result<f64> {
    let largest = fine_structure_pi_elements(r1, r2)?
        .into_iter()
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    if largest == 0.0 {
        return domain(format!("{} and {} have no π coupling", r1.label, r2.label));
    }
    Ok(rf_rabi / largest)
}

fn check_pair(r1: &LevelSpec, r2: &LevelSpec) -> Result<()> {
    if (r1.l - r2.l).abs() != 1 || r1.s != r2.s {
        return domain(format!(
            "{} <-> {} is not a dipole-allowed RF transition",
            r1.label, r2.label
        ));
    }
    Ok(())
}

/// Dresses `r1` with a π-polarized RF field coupling it to `r2`.
///
/// Energies are in the rotating frame where bare `r1` sits at zero and bare
/// `r2` at `-rf_detuning`; a coupled pair with effective Rabi frequency `W`
/// has eigenvalues `-rf_detuning / 2 ± sqrt(rf_detuning² + W²) / 2`.
pub fn dress_rydberg_pair(
    r1: &LevelSpec,
    r2: &LevelSpec,
    nuclear_spin: HalfInt,
    rf_rabi: f64,
    rf_detuning: f64,
) -> Result<DressedManifold> {
    check_pair(r1, r2)?;
    if rf_rabi.is_nan() || rf_rabi < 0.0 {
        return domain(format!("RF Rabi frequency must be >= 0, got {rf_rabi}"));
    }
    let elements = fine_structure_pi_elements(r1, r2)?;
    let largest = elements.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let mut entries = Vec::new();
    for &(mj, element) in &elements {
        let w = if largest > 0.0 {
            rf_rabi * element.abs() / largest
        } else {
            0.0
        };
        for mi in nuclear_spin.projections() {
            if element == 0.0 {
                entries.push(DressedEntry {
                    mj,
                    mi,
                    s: 0,
                    shift: 0.0,
                });
            } else {
                let centre = -rf_detuning / 2.0;
                let half_gap = rf_detuning.hypot(w) / 2.0;
                entries.push(DressedEntry {
                    mj,
                    mi,
                    s: 1,
                    shift: centre + half_gap,
                });
                entries.push(DressedEntry {
                    mj,
                    mi,
                    s: -1,
                    shift: centre - half_gap,
                });
            }
        }
    }
    let r2_spectators =
        r2.j.projections()
            .filter(|mj| mj.abs() > r1.j || elements.iter().any(|&(m, v)| m == *mj && v == 0.0))
            .flat_map(|mj| nuclear_spin.projections().map(move |mi| (mj, mi)))
            .collect();
    Ok(DressedManifold {
        j_r1: r1.j,
        j_r2: r2.j,
        nuclear_spin,
        rf_rabi,
        rf_detuning,
        entries,
        r2_spectators,
    })
}

/// A state `|J' F' mF'>` of the intermediate level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntermediateState {
    pub j: HalfInt,
    pub f: HalfInt,
    pub mf: HalfInt,
}

/// Relative strength of the optical π transition from an intermediate state
/// to a dressed entry:
/// `2^-|s| (J' J 1; -mJ mJ 0)^2 (J' F' I; -mJ mF' mJ-mF')^2`.
pub fn transition_strength(
    i_state: IntermediateState,
    j_r1: HalfInt,
    entry: &DressedEntry,
    nuclear_spin: HalfInt,
) -> Result<f64> {
    if entry.mj + entry.mi != i_state.mf {
        return Ok(0.0);
    }
    if entry.mj.abs() > j_r1
        || entry.mj.abs() > i_state.j
        || entry.mi.abs() > nuclear_spin
        || i_state.mf.abs() > i_state.f
    {
        return Ok(0.0);
    }
    let one = HalfInt::ONE;
    let fine = wigner_3j(i_state.j, j_r1, one, -entry.mj, entry.mj, HalfInt::ZERO)?;
    let hyperfine = wigner_3j(
        i_state.j,
        i_state.f,
        nuclear_spin,
        -entry.mj,
        i_state.mf,
        entry.mj - i_state.mf,
    )?;
    Ok(0.5f64.powi(entry.s.unsigned_abs() as i32) * fine.powi(2) * hyperfine.powi(2))
}

/// Explicit hyperfine-basis evaluation of the same transition:
/// `2^-|s| |sum_F C^{F mF}_{J mJ I mI} <F' mF'| r_0 |F mF>|^2`, with the matrix
/// element reduced through the Wigner-Eckart theorem and the `J`-level 6j
/// recoupling (unit reduced element `<J'||r||J>`).
pub fn explicit_transition_strength(
    i_state: IntermediateState,
    j_r1: HalfInt,
    entry: &DressedEntry,
    nuclear_spin: HalfInt,
) -> Result<f64> {
    let mf = entry.mj + entry.mi;
    if mf != i_state.mf {
        return Ok(0.0);
    }
    let (jp, fp, mfp) = (i_state.j, i_state.f, i_state.mf);
    let one = HalfInt::ONE;
    let mut amplitude = 0.0;
    for f in HalfInt::range_inclusive((j_r1 - nuclear_spin).abs(), j_r1 + nuclear_spin) {
        if mf.abs() > f {
            continue;
        }
        let expansion = clebsch_gordan(j_r1, entry.mj, nuclear_spin, entry.mi, f, mf)?;
        let projection = clebsch_gordan(f, mf, one, HalfInt::ZERO, fp, mfp)? / (fp.multiplicity() as f64).sqrt();
        let reduced = parity_sign(jp.twice() + nuclear_spin.twice() + f.twice() + one.twice())
            * ((fp.multiplicity() * f.multiplicity()) as f64).sqrt()
            * wigner_6j(jp, fp, nuclear_spin, f, j_r1, one)?;
        amplitude += expansion * projection * reduced;
    }
    Ok(0.5f64.powi(entry.s.unsigned_abs() as i32) * amplitude.powi(2))
}

/// Relative residual between the explicit hyperfine sum and the closed-form
/// 3j product. The two agree up to the constant `2F' + 1`.
pub fn hyperfine_sum_residual(
    i_state: IntermediateState,
    j_r1: HalfInt,
    entry: &DressedEntry,
    nuclear_spin: HalfInt,
) -> Result<f64> {
    let explicit = explicit_transition_strength(i_state, j_r1, entry, nuclear_spin)?;
    let closed = i_state.f.multiplicity() as f64 * transition_strength(i_state, j_r1, entry, nuclear_spin)?;
    // strengths are at most one, so exact zeros are compared at machine precision
    let scale = explicit.abs().max(closed.abs()).max(f64::EPSILON);
    Ok((explicit - closed).abs() / scale)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthRow {
    pub i_state: IntermediateState,
    pub entry: DressedEntry,
    pub strength: f64,
}

/// Transition strengths from every state of the intermediate level to every
/// dressed entry with matching projection.
pub fn transition_strength_table(ladder: &LadderSpec, manifold: &DressedManifold) -> Result<Vec<StrengthRow>> {
    let level_i = ladder
        .level(I)
        .ok_or_else(|| crate::Error::Domain("ladder has no intermediate level".into()))?;
    let mut rows = Vec::new();
    for state in level_i.states(I, ladder.nuclear_spin) {
        let i_state = IntermediateState {
            j: level_i.j,
            f: state.f,
            mf: state.mf,
        };
        for entry in manifold.entries.iter().filter(|e| e.mf() == state.mf) {
            let strength = transition_strength(i_state, manifold.j_r1, entry, ladder.nuclear_spin)?;
            rows.push(StrengthRow {
                i_state,
                entry: *entry,
                strength,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MfBlockSpectrum {
    pub mf: HalfInt,
    pub r1_states: Vec<HyperfineState>,
    pub r2_states: Vec<HyperfineState>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl MfBlockSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Distinct eigenvalues with multiplicities, merging values closer than
    /// `tol`.
    pub fn distinct(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &e in &self.eigenvalues {
            match out.last_mut() {
                Some((v, n)) if (e - *v).abs() <= tol => *n += 1,
                _ => out.push((e, 1)),
            }
        }
        out
    }
}

/// Diagonalizes the resonant π RF coupling among the hyperfine states of
/// `r1` and `r2` with total projection `mf`.
pub fn diagonalize_mf_block(ladder: &LadderSpec, mf: HalfInt, rf_rabi: f64) -> Result<MfBlockSpectrum> {
    let (r1, r2) = match (ladder.level(R1), ladder.level(R2)) {
        (Some(a), Some(b)) => (a, b),
        _ => return domain("ladder has no RF-coupled Rydberg pair"),
    };
    check_pair(r1, r2)?;
    let nuc = ladder.nuclear_spin;
    let radial = rf_radial_rabi(r1, r2, rf_rabi)?;
    let r1_states: Vec<_> = r1.states(R1, nuc).into_iter().filter(|s| s.mf == mf).collect();
    let r2_states: Vec<_> = r2.states(R2, nuc).into_iter().filter(|s| s.mf == mf).collect();
    let n1 = r1_states.len();
    let n = n1 + r2_states.len();
    if n == 0 {
        return domain(format!("no Rydberg hyperfine state has mF = {mf}"));
    }
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (a, &s1) in r1_states.iter().enumerate() {
        for (b, &s2) in r2_states.iter().enumerate() {
            let v = 0.5 * radial * angular_element(r1, s1, r2, s2, 0, nuc)?;
            h[(a, n1 + b)] = v;
            h[(n1 + b, a)] = v;
        }
    }
    let mut eigenvalues: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(MfBlockSpectrum {
        mf,
        r1_states,
        r2_states,
        eigenvalues,
    })
}

/// Dressed energies expected in the block with total projection `mf`:
/// entries with `mJ + mI = mF`, and uncoupled `r2` states at `-rf_detuning`.
pub fn dressed_shifts_for_mf(manifold: &DressedManifold, mf: HalfInt) -> Vec<f64> {
    let mut out: Vec<f64> = manifold
        .entries
        .iter()
        .filter(|e| e.mf() == mf)
        .map(|e| e.shift)
        .chain(
            manifold
                .r2_spectators
                .iter()
                .filter(|(mj, mi)| *mj + *mi == mf)
                .map(|_| -manifold.rf_detuning),
        )
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralPeak {
    Absent,
    Present,
    Dominant,
}

/// Predicts the zero-detuning EIT feature for RF polarization at `theta`
/// (radians) from the optical polarization.
///
/// Co-polarized (`theta` a multiple of π): the central peak needs `r1`
/// spectators (`J_r1 > J_r2`) that the intermediate level can reach
/// (`|mJ| <= J_i`); it is dominant when the spectators carry more optical
/// strength than either split side. At any other angle the RF field is no
/// longer along the optical quantization axis and spectators, when they
/// exist, are reachable.
pub fn predict_central_peak(ladder: &LadderSpec, theta: f64) -> Result<CentralPeak> {
    let (li, r1, r2) = match (ladder.level(I), ladder.level(R1), ladder.level(R2)) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return domain("central-peak prediction needs a four-level ladder"),
    };
    if r1.j <= r2.j {
        return Ok(CentralPeak::Absent);
    }
    let co_polarized = (theta / std::f64::consts::PI - (theta / std::f64::consts::PI).round()).abs() < 1e-9;
    if !co_polarized {
        return Ok(CentralPeak::Present);
    }
    if r1.j > li.j {
        // every spectator has |mJ| = J_r1 > J_i
        return Ok(CentralPeak::Absent);
    }
    let manifold = dress_rydberg_pair(r1, r2, ladder.nuclear_spin, 1.0, 0.0)?;
    let rows = transition_strength_table(ladder, &manifold)?;
    let total = |s: i8| rows.iter().filter(|r| r.entry.s == s).map(|r| r.strength).sum::<f64>();
    let (centre, upper, lower) = (total(0), total(1), total(-1));
    if centre <= 0.0 {
        Ok(CentralPeak::Absent)
    } else if centre > upper.max(lower) {
        Ok(CentralPeak::Dominant)
    } else {
        Ok(CentralPeak::Present)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{preset, Preset};
    use approx::assert_abs_diff_eq;

    fn h(n: i32) -> HalfInt {
        HalfInt::half(n)
    }

    #[test]
    fn type1_spectators_and_splittings() {
        let t1 = preset(Preset::Type1);
        let m = dress_rydberg_pair(&t1.levels[R1], &t1.levels[R2], t1.nuclear_spin, 1.0, 0.0).unwrap();
        assert_eq!(m.entries.len(), 4 * (2 * 4 + 2));
        for e in &m.entries {
            if e.mj.abs() == h(5) {
                assert_eq!((e.s, e.shift), (0, 0.0));
            } else {
                assert_ne!(e.s, 0);
            }
        }
        let w_half = m.pair_rabi(h(1));
        let w_three = m.pair_rabi(h(3));
        assert_abs_diff_eq!(w_half, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w_half / w_three, 1.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn type2_spectators() {
        let t2 = preset(Preset::Type2);
        let m = dress_rydberg_pair(&t2.levels[R1], &t2.levels[R2], t2.nuclear_spin, 2.0, 0.0).unwrap();
        for e in &m.entries {
            if e.mj.abs() == h(3) {
                assert_eq!(e.s, 0);
            } else {
                assert_abs_diff_eq!(e.shift.abs(), 1.0, epsilon = 1e-12);
            }
        }
        assert!(m.r2_spectators.is_empty());
    }

    #[test]
    fn off_resonant_pair_eigenvalues() {
        let t2 = preset(Preset::Type2);
        let m = dress_rydberg_pair(&t2.levels[R1], &t2.levels[R2], t2.nuclear_spin, 3.0, 4.0).unwrap();
        let e: Vec<_> = m.entries.iter().filter(|e| e.mj == h(1) && e.mi == h(1)).collect();
        assert_eq!(e.len(), 2);
        assert_abs_diff_eq!(e[0].shift, -2.0 + 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].shift, -2.0 - 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.pair_rabi(h(1)), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn forbidden_pair_rejected() {
        let t1 = preset(Preset::Type1);
        assert!(dress_rydberg_pair(&t1.levels[R1], &t1.levels[R1], t1.nuclear_spin, 1.0, 0.0).is_err());
        assert!(dress_rydberg_pair(&t1.levels[R1], &t1.levels[R2], t1.nuclear_spin, -1.0, 0.0).is_err());
    }

    #[test]
    fn strength_vanishes_for_large_mj() {
        let t1 = preset(Preset::Type1);
        let m = dress_rydberg_pair(&t1.levels[R1], &t1.levels[R2], t1.nuclear_spin, 1.0, 0.0).unwrap();
        let rows = transition_strength_table(&t1, &m).unwrap();
        assert!(!rows.is_empty());
        for r in &rows {
            if r.entry.mj.abs() == h(5) {
                assert_eq!(r.strength, 0.0);
            }
        }
    }

    #[test]
    fn symmetric_entries_carry_half_weight() {
        let i_state = IntermediateState {
            j: h(3),
            f: HalfInt::int(3),
            mf: HalfInt::int(1),
        };
        let base = DressedEntry {
            mj: h(1),
            mi: h(1),
            s: 0,
            shift: 0.0,
        };
        let split = DressedEntry { s: 1, ..base };
        let a = transition_strength(i_state, h(5), &base, h(3)).unwrap();
        let b = transition_strength(i_state, h(5), &split, h(3)).unwrap();
        assert!(a > 0.0);
        assert_abs_diff_eq!(b / a, 0.5, epsilon = 1e-14);
        let wrong = DressedEntry { mi: h(-1), ..base };
        assert_eq!(transition_strength(i_state, h(5), &wrong, h(3)).unwrap(), 0.0);
    }

    #[test]
    fn explicit_sum_matches_closed_form() {
        let i_state = IntermediateState {
            j: h(3),
            f: HalfInt::int(3),
            mf: HalfInt::int(3),
        };
        let entry = DressedEntry {
            mj: h(3),
            mi: h(3),
            s: 1,
            shift: 0.5,
        };
        assert!(hyperfine_sum_residual(i_state, h(5), &entry, h(3)).unwrap() < 1e-10);
        let i_state = IntermediateState {
            j: h(3),
            f: HalfInt::int(3),
            mf: HalfInt::ZERO,
        };
        let entry = DressedEntry {
            mj: h(1),
            mi: h(-1),
            s: -1,
            shift: -0.5,
        };
        assert!(hyperfine_sum_residual(i_state, h(3), &entry, h(3)).unwrap() < 1e-10);
        let mismatched = DressedEntry {
            mj: h(1),
            mi: h(1),
            s: 0,
            shift: 0.0,
        };
        assert_eq!(hyperfine_sum_residual(i_state, h(3), &mismatched, h(3)).unwrap(), 0.0);
    }

    #[test]
    fn mf_one_block_of_type1() {
        let t1 = preset(Preset::Type1);
        let spec = diagonalize_mf_block(&t1, HalfInt::int(1), 1.0).unwrap();
        assert_eq!(spec.dim(), 7);
        assert_eq!((spec.r1_states.len(), spec.r2_states.len()), (4, 3));
        let distinct = spec.distinct(1e-9);
        assert_eq!(distinct.len(), 5);
        let a = 0.5;
        let b = 0.5 * (2.0f64 / 3.0).sqrt();
        let expected = [(-a, 2), (-b, 1), (0.0, 1), (b, 1), (a, 2)];
        for ((v, n), (ev, en)) in distinct.iter().zip(expected) {
            assert_abs_diff_eq!(*v, ev, epsilon = 1e-10);
            assert_eq!(*n, en);
        }
    }

    #[test]
    fn stretched_block_is_uncoupled() {
        let t1 = preset(Preset::Type1);
        let spec = diagonalize_mf_block(&t1, HalfInt::int(4), 1.0).unwrap();
        assert_eq!(spec.dim(), 1);
        assert_eq!(spec.eigenvalues, vec![0.0]);
        assert!(diagonalize_mf_block(&t1, HalfInt::int(5), 1.0).is_err());
    }

    #[test]
    fn central_peak_predictions() {
        use std::f64::consts::FRAC_PI_2;
        let t1 = preset(Preset::Type1);
        let t2 = preset(Preset::Type2);
        let model = preset(Preset::ModelAtom);
        assert_eq!(predict_central_peak(&t1, 0.0).unwrap(), CentralPeak::Absent);
        assert_eq!(predict_central_peak(&t2, 0.0).unwrap(), CentralPeak::Dominant);
        assert_eq!(predict_central_peak(&t1, FRAC_PI_2).unwrap(), CentralPeak::Present);
        assert_eq!(predict_central_peak(&model, 0.0).unwrap(), CentralPeak::Absent);
        assert_eq!(predict_central_peak(&model, FRAC_PI_2).unwrap(), CentralPeak::Present);
        assert_eq!(
            predict_central_peak(&t1, std::f64::consts::PI).unwrap(),
            CentralPeak::Absent
        );
    }
}
