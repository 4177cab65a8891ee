//! Exact first-order (weak-probe) response of the master equation.
//!
//! To zeroth order in the probe the atoms sit in the ground rung with the
//! populations fixed by the ground-to-dummy loss and the dummy repopulation.
//! The probe then drives only the coherences `c = rho[X, G]` between the
//! excited states `X` and the ground states `G`, which obey
//! `A c - c B^dagger = -H[X, G] rho0` with `A = (H - iK/2)[X, X]` and
//! `B = (H - iK/2)[G, G]`, `K` being the total loss generator. For a
//! diagonal `B` every ground column is an independent linear solve.

use nalgebra::{DMatrix, DVector};

use super::{DecayRates, DissipatorSpec, Fields, ModelBuilder};
use crate::basis::{G, I};
use crate::couplings::FieldConfig;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Debug)]
pub struct WeakProbeSolver {
    x_states: Vec<usize>,
    g_states: Vec<usize>,
    /// Rung of each excited state.
    x_level: Vec<usize>,
    /// `A` at the configured detunings.
    a: DMatrix<C64>,
    /// Diagonal of `B`.
    b: Vec<C64>,
    /// `-H[X, G] rho0` for a unit radial probe Rabi frequency.
    source: DMatrix<C64>,
    /// Angular factor of the probe, `2 H[g, i]` for unit radial Rabi,
    /// indexed (ground, excited).
    probe_angular: DMatrix<C64>,
    ground_population: Vec<f64>,
    dim: usize,
}

impl WeakProbeSolver {
    pub fn new(builder: &ModelBuilder, fields: &Fields, rates: &DecayRates) -> Result<Self> {
        let d = builder.collapse_operators(rates)?;
        Self::with_dissipator(builder, fields, &d, rates)
    }

    pub fn with_dissipator(
        builder: &ModelBuilder,
        fields: &Fields,
        d: &DissipatorSpec,
        rates: &DecayRates,
    ) -> Result<Self> {
        let basis = builder.basis();
        if basis.n_levels() < 2 {
            return Err(Error::Domain("weak-probe response needs at least two rungs".into()));
        }
        let g_states: Vec<usize> = basis.level_range(G).collect();
        let x_states: Vec<usize> = (basis.level_range(I).start..basis.atomic_len()).collect();
        let x_level: Vec<usize> = x_states
            .iter()
            .map(|&x| basis.hyperfine(x).expect("atomic state").level)
            .collect();
        let in_x = |s: usize| x_states.binary_search(&s).is_ok();
        let in_g = |s: usize| g_states.contains(&s);
        for op in &d.operators {
            let xx = op.entries.iter().any(|&(r, c, _)| in_x(r) && in_x(c));
            let gg = op.entries.iter().any(|&(r, c, _)| in_g(r) && in_g(c));
            if xx && gg {
                return Err(Error::Domain(format!(
                    "collapse operator `{}` feeds excited-ground coherences; use the full solver",
                    op.label
                )));
            }
        }

        let mut unit_probe = *fields;
        unit_probe.probe = FieldConfig {
            radial_rabi: 1.0,
            ..fields.probe
        };
        let h = builder.hamiltonian(&unit_probe)?;
        let k = d.loss_matrix();
        let half_i = C64::new(0.0, 0.5);
        let a = DMatrix::from_fn(x_states.len(), x_states.len(), |r, c| {
            h[(x_states[r], x_states[c])] - k[(x_states[r], x_states[c])] * half_i
        });
        let mut b = Vec::with_capacity(g_states.len());
        for (r, &gr) in g_states.iter().enumerate() {
            for (c, &gc) in g_states.iter().enumerate() {
                let v = h[(gr, gc)] - k[(gr, gc)] * half_i;
                if r == c {
                    b.push(v);
                } else if v.norm() > 0.0 {
                    return Err(Error::Domain(
                        "ground rung is internally coupled; use the full solver".into(),
                    ));
                }
            }
        }

        // zeroth order: ground sublevels share the population not parked in
        // the dummy state
        let n_g = g_states.len() as f64;
        let dummy_share = match basis.dummy() {
            Some(_) if rates.dummy_rate() > 0.0 => rates.incoherent() * n_g / rates.dummy_rate(),
            _ => 0.0,
        };
        let p = 1.0 / (n_g + dummy_share);
        let ground_population = vec![p; g_states.len()];
        let source = DMatrix::from_fn(x_states.len(), g_states.len(), |r, c| {
            -h[(x_states[r], g_states[c])] * p
        });
        let probe_angular = DMatrix::from_fn(g_states.len(), x_states.len(), |r, c| {
            h[(g_states[r], x_states[c])] * 2.0
        });
        Ok(WeakProbeSolver {
            x_states,
            g_states,
            x_level,
            a,
            b,
            source,
            probe_angular,
            ground_population,
            dim: basis.len(),
        })
    }

    pub fn excited_states(&self) -> &[usize] {
        &self.x_states
    }

    pub fn ground_states(&self) -> &[usize] {
        &self.g_states
    }

    /// Rung of each excited state, in [`Self::excited_states`] order.
    pub fn excited_levels(&self) -> &[usize] {
        &self.x_level
    }

    pub fn system_matrix(&self) -> &DMatrix<C64> {
        &self.a
    }

    pub fn ground_diagonal(&self) -> &[C64] {
        &self.b
    }

    pub fn source(&self) -> &DMatrix<C64> {
        &self.source
    }

    pub fn probe_angular(&self) -> &DMatrix<C64> {
        &self.probe_angular
    }

    /// Coherences `rho[X, G]` per unit radial probe Rabi frequency, with
    /// `level_shift[k]` added to the energy of every state of rung `k`.
    pub fn coherences(&self, level_shift: &[f64]) -> Result<DMatrix<C64>> {
        let nx = self.x_states.len();
        let mut out = DMatrix::<C64>::zeros(nx, self.g_states.len());
        let mut base = self.a.clone();
        for (r, &lvl) in self.x_level.iter().enumerate() {
            base[(r, r)] += level_shift.get(lvl).copied().unwrap_or(0.0);
        }
        let uniform = self.b.iter().all(|v| *v == self.b[0]);
        let mut cached = None;
        for (l, bl) in self.b.iter().enumerate() {
            let rhs: DVector<C64> = self.source.column(l).into_owned();
            if rhs.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            if !(uniform && cached.is_some()) {
                let mut m = base.clone();
                for r in 0..nx {
                    m[(r, r)] -= bl.conj();
                }
                cached = Some(m.lu());
            }
            let col = cached
                .as_ref()
                .expect("factorization")
                .solve(&rhs)
                .ok_or_else(|| Error::Solver {
                    reason: "excited-state block is singular".into(),
                    dim: nx,
                    min_pivot: 0.0,
                })?;
            out.set_column(l, &col);
        }
        Ok(out)
    }

    /// `sum Im(conj(rho[i, g]) a[g, i])` per unit radial probe Rabi
    /// frequency; the extinction coefficient is this times the vapor
    /// prefactor.
    pub fn absorption(&self, level_shift: &[f64]) -> Result<f64> {
        let c = self.coherences(level_shift)?;
        Ok(self.absorption_from(&c))
    }

    pub fn absorption_from(&self, c: &DMatrix<C64>) -> f64 {
        let mut acc = 0.0;
        for l in 0..self.g_states.len() {
            for m in 0..self.x_states.len() {
                let a = self.probe_angular[(l, m)];
                if a != C64::new(0.0, 0.0) {
                    acc += (c[(m, l)].conj() * a).im;
                }
            }
        }
        acc
    }

    /// Full density matrix to first order for a probe of radial Rabi
    /// frequency `probe_rabi`. Not positive semidefinite in general.
    pub fn density_matrix(&self, probe_rabi: f64, level_shift: &[f64]) -> Result<DMatrix<C64>> {
        let c = self.coherences(level_shift)? * C64::new(probe_rabi, 0.0);
        let mut rho = DMatrix::<C64>::zeros(self.dim, self.dim);
        let total: f64 = self.ground_population.iter().sum();
        for (&g, &p) in self.g_states.iter().zip(&self.ground_population) {
            rho[(g, g)] = C64::new(p, 0.0);
        }
        if total < 1.0 {
            if let Some(d) = (0..self.dim).find(|s| !self.g_states.contains(s) && !self.x_states.contains(s)) {
                rho[(d, d)] = C64::new(1.0 - total, 0.0);
            }
        }
        for (m, &x) in self.x_states.iter().enumerate() {
            for (l, &g) in self.g_states.iter().enumerate() {
                rho[(x, g)] = c[(m, l)];
                rho[(g, x)] = c[(m, l)].conj();
            }
        }
        Ok(rho)
    }
}
