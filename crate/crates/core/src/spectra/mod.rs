//! Probe absorption, Beer-Lambert transmission, Doppler averaging and
//! polarization spectrograms.

mod analysis;
mod doppler;
mod sweep;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, G, I};
use crate::couplings::FieldConfig;
use crate::error::{domain, Error, Result};
use crate::master::ModelBuilder;
use crate::C64;

pub use analysis::{central_cut, find_peaks, fit_sinusoid, Peak, SinusoidFit};
pub use doppler::{doppler_average, doppler_exact, quadrature_nodes, velocity_shift, Doppler};
pub use sweep::{sweep_spectrogram, SolverKind, Spectrogram, SweepConfig};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Solver noise allowed below zero in an extinction coefficient, 1/m.
const NEGATIVE_ALPHA_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaporConfig {
    /// Atoms per m³.
    pub density: f64,
    /// Cell length in m.
    pub length: f64,
    /// Kelvin.
    pub temperature: f64,
    /// Metres.
    pub probe_wavelength: f64,
    /// Metres.
    pub coupling_wavelength: f64,
    /// Atomic mass units.
    pub atomic_mass: f64,
    /// Radial dipole moment of the probe transition, C·m.
    pub probe_dipole: f64,
    /// Incident probe intensity, W/m² or any relative scale.
    pub intensity: f64,
}

impl Default for VaporConfig {
    fn default() -> Self {
        VaporConfig {
            density: 1e16,
            length: 0.01,
            temperature: 300.0,
            probe_wavelength: 780.241e-9,
            coupling_wavelength: 480e-9,
            atomic_mass: 86.909,
            probe_dipole: 3.584e-29,
            intensity: 1.0,
        }
    }
}

impl VaporConfig {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("density", self.density),
            ("length", self.length),
            ("probe_wavelength", self.probe_wavelength),
            ("coupling_wavelength", self.coupling_wavelength),
            ("atomic_mass", self.atomic_mass),
            ("probe_dipole", self.probe_dipole),
            ("intensity", self.intensity),
        ];
        for (name, v) in named {
            if !v.is_finite() || v <= 0.0 {
                return domain(format!("vapor `{name}` must be finite and > 0, got {v}"));
            }
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return domain(format!("vapor temperature must be >= 0, got {}", self.temperature));
        }
        Ok(())
    }

    pub fn probe_angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.probe_wavelength
    }

    pub fn probe_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.probe_wavelength
    }

    pub fn coupling_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.coupling_wavelength
    }

    /// One-dimensional thermal velocity spread `sqrt(kT/m)` in m/s.
    pub fn velocity_spread(&self) -> f64 {
        (BOLTZMANN * self.temperature / (self.atomic_mass * ATOMIC_MASS_UNIT)).sqrt()
    }

    /// `2 n omega_p mu^2 / (c eps0 hbar)`, converting
    /// `sum Im(rho_gi a_gi) / Omega_r` into an extinction coefficient (1/m).
    pub fn extinction_prefactor(&self) -> f64 {
        2.0 * self.density * self.probe_angular_frequency() * self.probe_dipole.powi(2)
            / (SPEED_OF_LIGHT * VACUUM_PERMITTIVITY * HBAR)
    }
}

/// Extinction coefficient (1/m) from a full density matrix: the sum over
/// ground/intermediate pairs of `|mu|^2 Im(rho_gi / Omega_ig)`, skipping pairs
/// the probe does not couple.
pub fn extinction(rho: &DMatrix<C64>, builder: &ModelBuilder, probe: &FieldConfig, vapor: &VaporConfig) -> Result<f64> {
    vapor.validate()?;
    let basis = builder.basis();
    if rho.nrows() != basis.len() || rho.ncols() != basis.len() {
        return domain(format!("density matrix is not {0}x{0}", basis.len()));
    }
    if basis.n_levels() < 2 {
        return domain("extinction needs a probe transition");
    }
    if probe.radial_rabi == 0.0 {
        return Ok(0.0);
    }
    let angular = builder.link_angular(0, probe)?;
    Ok(vapor.extinction_prefactor() * absorption_sum(basis, rho, &angular) / probe.radial_rabi)
}

fn absorption_sum(basis: &Basis, rho: &DMatrix<C64>, angular: &DMatrix<C64>) -> f64 {
    let mut acc = 0.0;
    for (a, g) in basis.level_range(G).enumerate() {
        for (b, i) in basis.level_range(I).enumerate() {
            let v = angular[(a, b)];
            if v != C64::new(0.0, 0.0) {
                acc += (rho[(g, i)] * v).im;
            }
        }
    }
    acc
}

/// Beer-Lambert transmission `exp(-alpha l)`.
pub fn transmission(alpha: f64, vapor: &VaporConfig) -> Result<f64> {
    if alpha.is_nan() {
        return Err(Error::Numerical("extinction coefficient is NaN".into()));
    }
    if alpha < -NEGATIVE_ALPHA_TOL {
        return Err(Error::Numerical(format!(
            "negative extinction coefficient {alpha:e} 1/m"
        )));
    }
    Ok((-alpha.max(0.0) * vapor.length).exp())
}

/// Subtracts the coupling-off baseline, point by point.
pub fn lock_in_correct(raw: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if raw.len() != reference.len() {
        return domain(format!(
            "raw curve has {} points but the reference has {}",
            raw.len(),
            reference.len()
        ));
    }
    Ok(raw.iter().zip(reference).map(|(r, b)| r - b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{preset, Preset};
    use crate::couplings::Polarization;
    use crate::master::{liouvillian, steady_state, DecayRates, Fields, WeakProbeSolver};
    use approx::assert_abs_diff_eq;

    #[test]
    fn transmission_basics() {
        let v = VaporConfig::default();
        assert_eq!(transmission(0.0, &v).unwrap(), 1.0);
        assert_abs_diff_eq!(transmission(2f64.ln() / v.length, &v).unwrap(), 0.5, epsilon = 1e-15);
        let longer = VaporConfig { length: 0.02, ..v };
        assert!(transmission(10.0, &longer).unwrap() < transmission(10.0, &v).unwrap());
        assert!(matches!(transmission(-1.0, &v), Err(Error::Numerical(_))));
    }

    #[test]
    fn lock_in_is_offset_subtraction() {
        let raw = [0.3, 0.5, 0.4];
        let reference = [0.3, 0.3, 0.3];
        assert_eq!(
            lock_in_correct(&raw, &reference).unwrap(),
            vec![0.0, 0.5 - 0.3, 0.4 - 0.3]
        );
        let shifted: Vec<f64> = raw.iter().map(|x| x + 7.0).collect();
        let shifted_ref: Vec<f64> = reference.iter().map(|x| x + 7.0).collect();
        let a = lock_in_correct(&raw, &reference).unwrap();
        let b = lock_in_correct(&shifted, &shifted_ref).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert!(lock_in_correct(&raw, &reference[..2]).is_err());
    }

    #[test]
    fn thermal_spread_of_rubidium() {
        let v = VaporConfig::default();
        assert_abs_diff_eq!(v.velocity_spread(), 169.3, epsilon = 0.2);
    }

    #[test]
    fn full_and_weak_extinction_agree_for_weak_probe() {
        let ladder = preset(Preset::Type2);
        let b = ModelBuilder::new(&ladder).unwrap();
        let rates = DecayRates::new(2.0 * std::f64::consts::PI * 0.2e6, 0.0, 1e4, 1e4).unwrap();
        let gamma = rates.intermediate;
        let fields = Fields {
            probe: FieldConfig::new(Polarization::z(), gamma * 1e-3, 0.0).unwrap(),
            coupling: FieldConfig::new(Polarization::z(), gamma, gamma * 0.3).unwrap(),
            rf: FieldConfig::new(Polarization::rf_linear(0.4), gamma * 2.0, 0.0).unwrap(),
        };
        let vapor = VaporConfig::default();
        let d = b.collapse_operators(&rates).unwrap();
        let ss = steady_state(&liouvillian(&b.hamiltonian(&fields).unwrap(), &d).unwrap()).unwrap();
        let full = extinction(&ss.rho, &b, &fields.probe, &vapor).unwrap();
        let weak = WeakProbeSolver::new(&b, &fields, &rates).unwrap();
        let lin = vapor.extinction_prefactor() * weak.absorption(&[]).unwrap();
        assert!(full > 0.0);
        assert!(((full - lin) / lin).abs() < 1e-4, "full {full} weak {lin}");
        let denser = VaporConfig {
            density: 2.0 * vapor.density,
            ..vapor
        };
        assert_abs_diff_eq!(
            extinction(&ss.rho, &b, &fields.probe, &denser).unwrap(),
            2.0 * full,
            epsilon = 1e-12 * full
        );
    }
}
