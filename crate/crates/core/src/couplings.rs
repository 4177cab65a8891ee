//! Field polarizations and the angular structure of dipole couplings between
//! hyperfine manifolds.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::angular::{parity_sign, wigner_3j, wigner_6j, HalfInt};
use crate::basis::{HyperfineState, LevelSpec};
use crate::error::{domain, Result};

const NORM_TOL: f64 = 1e-12;

/// Complex unit vector of a field's electric polarization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polarization {
    pub ex: C64,
    pub ey: C64,
    pub ez: C64,
}

impl Polarization {
    pub fn new(ex: C64, ey: C64, ez: C64) -> Result<Self> {
        let p = Polarization { ex, ey, ez };
        p.check_normalized()?;
        Ok(p)
    }

    pub fn real(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(C64::new(x, 0.0), C64::new(y, 0.0), C64::new(z, 0.0))
    }

    pub fn x() -> Self {
        Polarization {
            ex: C64::new(1.0, 0.0),
            ey: C64::new(0.0, 0.0),
            ez: C64::new(0.0, 0.0),
        }
    }

    /// Along the quantization axis.
    pub fn z() -> Self {
        Polarization {
            ex: C64::new(0.0, 0.0),
            ey: C64::new(0.0, 0.0),
            ez: C64::new(1.0, 0.0),
        }
    }

    /// Linear polarization in the z-y plane at `theta` (radians) from z:
    /// `(0, sin theta, cos theta)`. This is the RF polarization for an
    /// emitter rotated by `theta` relative to the optical polarization.
    pub fn rf_linear(theta: f64) -> Self {
        Polarization {
            ex: C64::new(0.0, 0.0),
            ey: C64::new(theta.sin(), 0.0),
            ez: C64::new(theta.cos(), 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ex.norm_sqr() + self.ey.norm_sqr() + self.ez.norm_sqr()
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL || !n.is_finite() {
            return domain(format!("polarization is not a unit vector (|E|^2 = {n})"));
        }
        Ok(())
    }
}

/// Spherical components `A^(q)` of a polarization, indexed by `q + 1`.
pub type SphericalCoefficients = [C64; 3];

pub fn spherical_coefficients(p: &Polarization) -> Result<SphericalCoefficients> {
    p.check_normalized()?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::i();
    let a_plus = -(p.ex + i * p.ey) * r;
    let a_zero = p.ez;
    let a_minus = (p.ex - i * p.ey) * r;
    Ok([a_minus, a_zero, a_plus])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub polarization: Polarization,
    /// Radial Rabi frequency in rad/s; absorbs the reduced dipole element.
    pub radial_rabi: f64,
    /// Detuning in rad/s.
    pub detuning: f64,
}

impl FieldConfig {
    pub fn new(polarization: Polarization, radial_rabi: f64, detuning: f64) -> Result<Self> {
        if radial_rabi.is_nan() || radial_rabi < 0.0 {
            return domain(format!("radial Rabi frequency must be >= 0, got {radial_rabi}"));
        }
        Ok(FieldConfig {
            polarization,
            radial_rabi,
            detuning,
        })
    }

    pub fn off() -> Self {
        FieldConfig {
            polarization: Polarization::z(),
            radial_rabi: 0.0,
            detuning: 0.0,
        }
    }
}

/// Coupling between two manifolds, indexed `(upper state, lower state)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingBlock {
    pub upper: Vec<HyperfineState>,
    pub lower: Vec<HyperfineState>,
    pub matrix: DMatrix<C64>,
}

impl CouplingBlock {
    pub fn zeros(upper: Vec<HyperfineState>, lower: Vec<HyperfineState>) -> Self {
        let matrix = DMatrix::zeros(upper.len(), lower.len());
        CouplingBlock { upper, lower, matrix }
    }

    pub fn scale(&mut self, factor: C64) {
        self.matrix *= factor;
    }
}

fn check_dipole_allowed(lower: &LevelSpec, upper: &LevelSpec) -> Result<()> {
    if (lower.l - upper.l).abs() != 1 {
        return domain(format!(
            "{} -> {} is dipole forbidden (L = {} -> {})",
            lower.label, upper.label, lower.l, upper.l
        ));
    }
    if lower.s != upper.s {
        return domain(format!(
            "{} -> {} changes the electron spin ({} -> {})",
            lower.label, upper.label, lower.s, upper.s
        ));
    }
    Ok(())
}

/// `<lower | u^(q) | upper>` for one pair of hyperfine states, with the
/// radial part factored out.
pub fn angular_element(
    lower: &LevelSpec,
    lower_state: HyperfineState,
    upper: &LevelSpec,
    upper_state: HyperfineState,
    q: i32,
    nuclear_spin: HalfInt,
) -> Result<f64> {
    let q = HalfInt::int(q);
    let (f, mf) = (lower_state.f, lower_state.mf);
    let (fp, mfp) = (upper_state.f, upper_state.mf);
    if mf + q - mfp != HalfInt::ZERO {
        return Ok(0.0);
    }
    let one = HalfInt::ONE;
    let (s, l, j) = (lower.s, HalfInt::int(lower.l), lower.j);
    let (lp, jp) = (HalfInt::int(upper.l), upper.j);
    let three_j = wigner_3j(f, one, fp, mf, q, -mfp)?;
    if three_j == 0.0 {
        return Ok(0.0);
    }
    let fine = wigner_6j(lp, jp, s, j, l, one)?;
    let hyperfine = wigner_6j(jp, fp, nuclear_spin, f, j, one)?;
    let phase =
        parity_sign(one.twice() + lp.twice() + s.twice() + j.twice() + jp.twice() + nuclear_spin.twice() - mfp.twice());
    let degeneracy = (j.multiplicity() * jp.multiplicity() * f.multiplicity() * fp.multiplicity()) as f64;
    Ok(phase * degeneracy.sqrt() * fine * hyperfine * three_j)
}

/// Angular matrix `u^(q)` between all hyperfine states of two levels.
pub fn angular_matrix(
    lower: &LevelSpec,
    lower_index: usize,
    upper: &LevelSpec,
    upper_index: usize,
    q: i32,
    nuclear_spin: HalfInt,
) -> Result<CouplingBlock> {
    if !(-1..=1).contains(&q) {
        return domain(format!("spherical index q = {q} outside -1..=1"));
    }
    check_dipole_allowed(lower, upper)?;
    let lower_states = lower.states(lower_index, nuclear_spin);
    let upper_states = upper.states(upper_index, nuclear_spin);
    let mut block = CouplingBlock::zeros(upper_states, lower_states);
    for (a, &us) in block.upper.iter().enumerate() {
        for (b, &ls) in block.lower.iter().enumerate() {
            let v = angular_element(lower, ls, upper, us, q, nuclear_spin)?;
            block.matrix[(a, b)] = C64::new(v, 0.0);
        }
    }
    Ok(block)
}

/// Rabi coupling block `Omega^(r) * sum_q A^(q) u^(q)` of a field between two
/// levels.
pub fn coupling_operator(
    field: &FieldConfig,
    lower: &LevelSpec,
    lower_index: usize,
    upper: &LevelSpec,
    upper_index: usize,
    nuclear_spin: HalfInt,
) -> Result<CouplingBlock> {
    if field.radial_rabi.is_nan() || field.radial_rabi < 0.0 {
        return domain(format!("radial Rabi frequency must be >= 0, got {}", field.radial_rabi));
    }
    let a = spherical_coefficients(&field.polarization)?;
    let mut total: Option<CouplingBlock> = None;
    for q in -1..=1 {
        let mut u = angular_matrix(lower, lower_index, upper, upper_index, q, nuclear_spin)?;
        u.scale(a[(q + 1) as usize] * field.radial_rabi);
        total = Some(match total {
            None => u,
            Some(mut acc) => {
                acc.matrix += &u.matrix;
                acc
            }
        });
    }
    Ok(total.expect("three spherical components"))
}

/// Signed amplitude for spontaneous emission from `upper_state` to
/// `lower_state` with atomic angular momentum change `q`
/// (`mF_lower = mF_upper + q`). Its square is the branching fraction; summed
/// over `q` and all final states of a complete lower level it is one.
pub fn emission_amplitude(
    upper: &LevelSpec,
    upper_state: HyperfineState,
    lower: &LevelSpec,
    lower_state: HyperfineState,
    q: i32,
    nuclear_spin: HalfInt,
) -> Result<f64> {
    let u = angular_element(lower, lower_state, upper, upper_state, -q, nuclear_spin)?;
    Ok(((2 * upper.l + 1) as f64).sqrt() * u)
}

/// Branching fraction in the squared form of the collapse-operator elements:
/// `(2L+1)(2J+1)(2J'+1)(2F+1)(2F'+1) {L' J' S; J L 1}^2 {J' F' I; F J 1}^2
/// (F 1 F'; mF q -mF')^2`, unprimed quantities belonging to the decaying
/// (initial) state.
pub fn emission_branching(
    upper: &LevelSpec,
    upper_state: HyperfineState,
    lower: &LevelSpec,
    lower_state: HyperfineState,
    q: i32,
    nuclear_spin: HalfInt,
) -> Result<f64> {
    check_dipole_allowed(lower, upper)?;
    let one = HalfInt::ONE;
    let qh = HalfInt::int(q);
    let (s, l, j, f, mf) = (upper.s, HalfInt::int(upper.l), upper.j, upper_state.f, upper_state.mf);
    let (lp, jp, fp, mfp) = (HalfInt::int(lower.l), lower.j, lower_state.f, lower_state.mf);
    if mf + qh - mfp != HalfInt::ZERO {
        return Ok(0.0);
    }
    let three_j = wigner_3j(f, one, fp, mf, qh, -mfp)?;
    let fine = wigner_6j(lp, jp, s, j, l, one)?;
    let hyperfine = wigner_6j(jp, fp, nuclear_spin, f, j, one)?;
    let degeneracy =
        (l.multiplicity() * j.multiplicity() * jp.multiplicity() * f.multiplicity() * fp.multiplicity()) as f64;
    Ok(degeneracy * fine.powi(2) * hyperfine.powi(2) * three_j.powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{preset, Preset, G, I, R1, R2};
    use approx::assert_abs_diff_eq;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn spherical_examples() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let a = spherical_coefficients(&Polarization::z()).unwrap();
        assert!(close(a[0], C64::new(0.0, 0.0)) && close(a[1], C64::new(1.0, 0.0)) && close(a[2], C64::new(0.0, 0.0)));
        let a = spherical_coefficients(&Polarization::x()).unwrap();
        assert!(close(a[0], C64::new(r, 0.0)) && close(a[1], C64::new(0.0, 0.0)) && close(a[2], C64::new(-r, 0.0)));
        let circ = Polarization::new(C64::new(r, 0.0), C64::new(0.0, r), C64::new(0.0, 0.0)).unwrap();
        let a = spherical_coefficients(&circ).unwrap();
        assert!(close(a[0], C64::new(1.0, 0.0)) && close(a[1], C64::new(0.0, 0.0)) && close(a[2], C64::new(0.0, 0.0)));
        let counter = Polarization::new(C64::new(r, 0.0), C64::new(0.0, -r), C64::new(0.0, 0.0)).unwrap();
        let a = spherical_coefficients(&counter).unwrap();
        assert!(close(a[0], C64::new(0.0, 0.0)) && close(a[2], C64::new(-1.0, 0.0)));
    }

    #[test]
    fn unnormalized_polarization_rejected() {
        assert!(Polarization::real(1.0, 1.0, 0.0).is_err());
        let p = Polarization {
            ex: C64::new(0.5, 0.0),
            ey: C64::new(0.0, 0.0),
            ez: C64::new(0.0, 0.0),
        };
        assert!(spherical_coefficients(&p).is_err());
    }

    #[test]
    fn sigma_element_between_zero_projections_vanishes() {
        let t1 = preset(Preset::Type1);
        let nuc = t1.nuclear_spin;
        let block = angular_matrix(&t1.levels[R1], R1, &t1.levels[R2], R2, 1, nuc).unwrap();
        for (a, us) in block.upper.iter().enumerate() {
            for (b, ls) in block.lower.iter().enumerate() {
                if us.mf == HalfInt::ZERO && ls.mf == HalfInt::ZERO {
                    assert_eq!(block.matrix[(a, b)], C64::new(0.0, 0.0));
                }
                if us.mf - ls.mf != HalfInt::ONE {
                    assert_eq!(block.matrix[(a, b)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn laporte_violation_rejected() {
        let t1 = preset(Preset::Type1);
        let err = angular_matrix(&t1.levels[G], G, &t1.levels[R1], R1, 0, t1.nuclear_spin);
        assert!(err.is_err());
        let err = angular_matrix(&t1.levels[I], I, &t1.levels[R2], R2, 0, t1.nuclear_spin);
        assert!(err.is_err());
    }

    #[test]
    fn zero_rabi_gives_zero_block() {
        let t1 = preset(Preset::Type1);
        let field = FieldConfig::new(Polarization::rf_linear(0.3), 0.0, 0.0).unwrap();
        let block = coupling_operator(&field, &t1.levels[G], G, &t1.levels[I], I, t1.nuclear_spin).unwrap();
        assert!(block.matrix.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn pi_field_conserves_projection() {
        let t2 = preset(Preset::Type2);
        let field = FieldConfig::new(Polarization::z(), 1.0, 0.0).unwrap();
        let block = coupling_operator(&field, &t2.levels[I], I, &t2.levels[R1], R1, t2.nuclear_spin).unwrap();
        let mut nonzero = 0;
        for (a, us) in block.upper.iter().enumerate() {
            for (b, ls) in block.lower.iter().enumerate() {
                if block.matrix[(a, b)].norm() > 0.0 {
                    assert_eq!(us.mf, ls.mf);
                    nonzero += 1;
                }
            }
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn negative_rabi_rejected() {
        assert!(FieldConfig::new(Polarization::z(), -1.0, 0.0).is_err());
    }

    #[test]
    fn i_state_stretched_decay() {
        let t1 = preset(Preset::Type1);
        let nuc = t1.nuclear_spin;
        let (g, i) = (&t1.levels[G], &t1.levels[I]);
        let top = HyperfineState {
            level: I,
            f: HalfInt::int(3),
            mf: HalfInt::int(3),
        };
        let mut total = 0.0;
        for gs in g.states(G, nuc) {
            for q in -1..=1 {
                let b = emission_branching(i, top, g, gs, q, nuc).unwrap();
                if b > 0.0 {
                    assert_eq!(gs.mf, HalfInt::int(2));
                    assert_eq!(q, -1);
                }
                total += b;
                let amp = emission_amplitude(i, top, g, gs, q, nuc).unwrap();
                assert_abs_diff_eq!(amp * amp, b, epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }
}
