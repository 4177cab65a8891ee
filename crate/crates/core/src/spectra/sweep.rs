use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::doppler::{doppler_average, doppler_exact, velocity_shift, Doppler};
use super::{extinction, lock_in_correct, transmission, VaporConfig};
use crate::basis::{LadderSpec, R1, R2};
use crate::couplings::{FieldConfig, Polarization};
use crate::dressed::rf_radial_rabi;
use crate::error::{domain, Error, Result};
use crate::master::{liouvillian, steady_state, DecayRates, DissipatorSpec, Fields, ModelBuilder, WeakProbeSolver};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// First-order response in the probe field.
    #[default]
    WeakProbe,
    /// Dense steady state of the full Liouvillian at the configured probe
    /// strength.
    Full,
}

/// Everything that defines a polarization spectrogram. Frequencies in rad/s,
/// angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub ladder: LadderSpec,
    /// Radial Rabi frequency of the probe.
    pub probe_rabi: f64,
    pub probe_detuning: f64,
    #[serde(default = "Polarization::z")]
    pub probe_polarization: Polarization,
    /// Radial Rabi frequency of the coupling field.
    pub coupling_rabi: f64,
    #[serde(default = "Polarization::z")]
    pub coupling_polarization: Polarization,
    /// Rabi frequency of the most strongly coupled Rydberg pair.
    pub rf_rabi: f64,
    pub rf_detuning: f64,
    pub rates: DecayRates,
    pub vapor: VaporConfig,
    pub doppler: Doppler,
    pub solver: SolverKind,
    pub theta_deg: Vec<f64>,
    /// Coupling detunings.
    pub detuning: Vec<f64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.ladder.validate()?;
        self.rates.validate()?;
        self.vapor.validate()?;
        for (name, v) in [
            ("probe_rabi", self.probe_rabi),
            ("coupling_rabi", self.coupling_rabi),
            ("rf_rabi", self.rf_rabi),
        ] {
            if !v.is_finite() || v < 0.0 {
                return domain(format!("`{name}` must be finite and >= 0, got {v}"));
            }
        }
        for (name, p) in [
            ("probe_polarization", self.probe_polarization),
            ("coupling_polarization", self.coupling_polarization),
        ] {
            let err = (p.norm_sqr() - 1.0).abs();
            if err.is_nan() || err > 1e-9 {
                return domain(format!("`{name}` must be a unit vector"));
            }
        }
        if self.theta_deg.is_empty() || self.detuning.is_empty() {
            return domain("sweep grids must be non-empty");
        }
        if self.theta_deg.iter().chain(&self.detuning).any(|x| !x.is_finite()) {
            return domain("sweep grids must be finite");
        }
        if self.ladder.levels.len() < 3 {
            return domain("a spectrogram needs at least probe and coupling rungs");
        }
        if self.ladder.levels.len() < 4 && self.rf_rabi > 0.0 {
            return domain("RF dressing needs a fourth rung");
        }
        if self.solver == SolverKind::Full && self.doppler == Doppler::Exact {
            return domain("the exact Doppler average is only available for the weak-probe solver");
        }
        Ok(())
    }

    fn fields(&self, theta_rad: f64, coupling_rabi: f64) -> Result<Fields> {
        let rf = if self.ladder.levels.len() >= 4 && self.rf_rabi > 0.0 {
            let radial = rf_radial_rabi(&self.ladder.levels[R1], &self.ladder.levels[R2], self.rf_rabi)?;
            FieldConfig::new(Polarization::rf_linear(theta_rad), radial, self.rf_detuning)?
        } else {
            FieldConfig::off()
        };
        Ok(Fields {
            probe: FieldConfig::new(self.probe_polarization, self.probe_rabi, self.probe_detuning)?,
            coupling: FieldConfig::new(self.coupling_polarization, coupling_rabi, 0.0)?,
            rf,
        })
    }
}

/// Probe response over the (RF angle, coupling detuning) plane. Rows follow
/// `theta_deg`, columns follow `detuning`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    pub ladder: String,
    pub rf_rabi: f64,
    pub vapor_hash: String,
    pub theta_deg: Vec<f64>,
    pub detuning: Vec<f64>,
    /// Extinction coefficient, 1/m.
    pub alpha: Vec<Vec<f64>>,
    /// `I / I0`.
    pub transmission: Vec<Vec<f64>>,
    /// Transmission minus the coupling-off baseline.
    pub signal: Vec<Vec<f64>>,
    pub reference_alpha: f64,
    pub reference_transmission: f64,
}

/// FNV-1a over the bit patterns of the vapor parameters.
fn vapor_hash(v: &VaporConfig) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in [
        v.density,
        v.length,
        v.temperature,
        v.probe_wavelength,
        v.coupling_wavelength,
        v.atomic_mass,
        v.probe_dipole,
        v.intensity,
    ] {
        for byte in x.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

struct Engine<'a> {
    cfg: &'a SweepConfig,
    builder: ModelBuilder,
    dissipator: DissipatorSpec,
}

/// One row of the spectrogram: fixed angle and coupling strength, all
/// coupling detunings.
enum Row {
    Weak(WeakProbeSolver),
    Full(Fields),
}

impl Engine<'_> {
    fn row(&self, theta_deg: f64, coupling_rabi: f64) -> Result<Row> {
        let fields = self.cfg.fields(theta_deg.to_radians(), coupling_rabi)?;
        Ok(match self.cfg.solver {
            SolverKind::WeakProbe => Row::Weak(WeakProbeSolver::with_dissipator(
                &self.builder,
                &fields,
                &self.dissipator,
                &self.cfg.rates,
            )?),
            SolverKind::Full => Row::Full(fields),
        })
    }

    fn full_alpha(&self, fields: &Fields, dc: f64, v: f64) -> Result<f64> {
        let (kp, kc) = (self.cfg.vapor.probe_wavenumber(), self.cfg.vapor.coupling_wavenumber());
        let mut f = *fields;
        f.probe.detuning -= kp * v;
        f.coupling.detuning = dc + kc * v;
        let h = self.builder.hamiltonian(&f)?;
        let ss = steady_state(&liouvillian(&h, &self.dissipator)?)?;
        extinction(&ss.rho, &self.builder, &f.probe, &self.cfg.vapor)
    }

    fn alpha(&self, row: &Row, dc: f64) -> Result<f64> {
        let vapor = &self.cfg.vapor;
        match row {
            Row::Weak(solver) => {
                let base = [0.0, 0.0, -dc, -dc];
                let at = |v: f64| -> Result<f64> {
                    let s = velocity_shift(vapor, v);
                    let shift: Vec<f64> = base.iter().zip(s).map(|(a, b)| a + b).collect();
                    solver.absorption(&shift)
                };
                let sum = match self.cfg.doppler {
                    Doppler::Off => at(0.0)?,
                    Doppler::Quadrature {
                        n_points,
                        cutoff_sigmas,
                    } => doppler_average(at, vapor, n_points, cutoff_sigmas)?,
                    Doppler::Exact => doppler_exact(solver, &base, vapor)?,
                };
                Ok(vapor.extinction_prefactor() * sum)
            }
            Row::Full(fields) => match self.cfg.doppler {
                Doppler::Off => self.full_alpha(fields, dc, 0.0),
                Doppler::Quadrature {
                    n_points,
                    cutoff_sigmas,
                } => doppler_average(|v| self.full_alpha(fields, dc, v), vapor, n_points, cutoff_sigmas),
                Doppler::Exact => domain("the exact Doppler average needs the weak-probe solver"),
            },
        }
    }
}

/// Sweeps the grid of `cfg`. Rows are independent work items on the current
/// rayon pool and are reassembled in grid order, so the result does not
/// depend on the number of workers.
pub fn sweep_spectrogram(cfg: &SweepConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let builder = ModelBuilder::new(&cfg.ladder)?;
    let dissipator = builder.collapse_operators(&cfg.rates)?;
    let engine = Engine {
        cfg,
        builder,
        dissipator,
    };
    let at_point = |theta: f64, dc: f64, e: Error| Error::GridPoint {
        theta_deg: theta,
        detuning: dc,
        source: Box::new(e),
    };

    let reference_alpha = {
        let theta = cfg.theta_deg[0];
        let row = engine.row(theta, 0.0).map_err(|e| at_point(theta, 0.0, e))?;
        engine.alpha(&row, 0.0).map_err(|e| at_point(theta, 0.0, e))?
    };
    let reference_transmission = transmission(reference_alpha, &cfg.vapor)?;
    let rows: Vec<Vec<f64>> = cfg
        .theta_deg
        .par_iter()
        .map(|&theta| {
            let row = engine
                .row(theta, cfg.coupling_rabi)
                .map_err(|e| at_point(theta, cfg.detuning[0], e))?;
            cfg.detuning
                .iter()
                .map(|&dc| engine.alpha(&row, dc).map_err(|e| at_point(theta, dc, e)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trans = Vec::with_capacity(rows.len());
    let mut signal = Vec::with_capacity(rows.len());
    for (r, alphas) in rows.iter().enumerate() {
        let t = alphas
            .iter()
            .zip(&cfg.detuning)
            .map(|(&a, &dc)| transmission(a, &cfg.vapor).map_err(|e| at_point(cfg.theta_deg[r], dc, e)))
            .collect::<Result<Vec<f64>>>()?;
        signal.push(lock_in_correct(&t, &vec![reference_transmission; t.len()])?);
        trans.push(t);
    }
    Ok(Spectrogram {
        ladder: cfg.ladder.name.clone(),
        rf_rabi: cfg.rf_rabi,
        vapor_hash: vapor_hash(&cfg.vapor),
        theta_deg: cfg.theta_deg.clone(),
        detuning: cfg.detuning.clone(),
        alpha: rows,
        transmission: trans,
        signal,
        reference_alpha,
        reference_transmission,
    })
}
