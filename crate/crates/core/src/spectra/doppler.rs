//! Thermal averaging over the velocity component along the beams.
//!
//! Probe and coupling beams counter-propagate, so an atom moving at `v`
//! along the probe sees `delta_p - k_p v` and `delta_c + k_c v`. In the
//! rotating frame this shifts the intermediate rung by `+k_p v` and both
//! Rydberg rungs by `(k_p - k_c) v`.

use errorfunctions::ComplexErrorFunctions;
use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::VaporConfig;
use crate::error::{domain, Error, Result};
use crate::master::WeakProbeSolver;
use crate::C64;

/// Agreement demanded between the pole expansion and direct solves.
const EXPANSION_CHECK_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Doppler {
    /// Atoms at rest.
    Off,
    /// Trapezoidal rule on a uniform grid over `±cutoff_sigmas` spreads,
    /// weights normalized to one.
    Quadrature { n_points: usize, cutoff_sigmas: f64 },
    /// Closed-form Gaussian average of the weak-probe response.
    #[default]
    Exact,
}

impl Doppler {
    /// 41 trapezoid nodes over ±4 spreads.
    pub const COARSE: Doppler = Doppler::Quadrature {
        n_points: 41,
        cutoff_sigmas: 4.0,
    };
}

/// Energy shift of each rung (g, i, r1, r2) for velocity `v` in m/s.
pub fn velocity_shift(vapor: &VaporConfig, v: f64) -> [f64; 4] {
    let kp = vapor.probe_wavenumber();
    let kc = vapor.coupling_wavenumber();
    [0.0, kp * v, (kp - kc) * v, (kp - kc) * v]
}

/// Velocity nodes and normalized trapezoidal weights of the truncated
/// Maxwell-Boltzmann distribution.
pub fn quadrature_nodes(vapor: &VaporConfig, n_points: usize, cutoff_sigmas: f64) -> Result<Vec<(f64, f64)>> {
    if n_points < 3 {
        return domain(format!("Doppler quadrature needs at least 3 points, got {n_points}"));
    }
    if !cutoff_sigmas.is_finite() || cutoff_sigmas <= 0.0 {
        return domain(format!("Doppler cutoff must be > 0 spreads, got {cutoff_sigmas}"));
    }
    let sigma = vapor.velocity_spread();
    if sigma == 0.0 {
        return Ok(vec![(0.0, 1.0)]);
    }
    let half = (n_points - 1) as f64;
    let mut nodes: Vec<(f64, f64)> = (0..n_points)
        .map(|j| {
            let x = (2.0 * j as f64 - half) * cutoff_sigmas / half;
            let end = j == 0 || j == n_points - 1;
            let w = (-0.5 * x * x).exp() * if end { 0.5 } else { 1.0 };
            (x * sigma, w)
        })
        .collect();
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    Ok(nodes)
}

/// `sum_j w_j f(v_j)` over [`quadrature_nodes`], summed in node order.
pub fn doppler_average(
    f: impl Fn(f64) -> Result<f64>,
    vapor: &VaporConfig,
    n_points: usize,
    cutoff_sigmas: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for (v, w) in quadrature_nodes(vapor, n_points, cutoff_sigmas)? {
        acc += w * f(v)?;
    }
    Ok(acc)
}

/// `∫ N(v; 0, sigma) / (v - z) dv` through the Faddeeva function.
fn gaussian_resolvent(z: C64, sigma: f64) -> Result<C64> {
    if z.im == 0.0 {
        return Err(Error::Numerical(format!("undamped velocity pole at v = {:e}", z.re)));
    }
    let scale = std::f64::consts::SQRT_2 * sigma;
    let upper = |z: C64| C64::new(0.0, (std::f64::consts::PI / 2.0).sqrt() / sigma) * (z / scale).w();
    Ok(if z.im > 0.0 { upper(z) } else { upper(z.conj()).conj() })
}

/// Maxwell-Boltzmann average of [`WeakProbeSolver::absorption`] over the
/// full velocity axis.
///
/// The coherences are rational in `v`: with `D` the per-state velocity
/// coefficient, `c(v) = (M + v)^-1 D^-1 s` for `M = D^-1 (A - conj(b))`, so
/// diagonalizing `M` reduces the average to a sum of Gaussian resolvents.
pub fn doppler_exact(solver: &WeakProbeSolver, level_shift: &[f64], vapor: &VaporConfig) -> Result<f64> {
    vapor.validate()?;
    let sigma = vapor.velocity_spread();
    if sigma == 0.0 {
        return solver.absorption(level_shift);
    }
    let unit = velocity_shift(vapor, 1.0);
    let levels = solver.excited_levels();
    let coeff: Vec<f64> = levels.iter().map(|&l| unit[l.min(3)]).collect();
    if coeff.contains(&0.0) {
        return domain("exact Doppler average needs distinct, nonzero probe and coupling wavenumbers");
    }
    let a = solver.system_matrix();
    let nx = a.nrows();
    let source = solver.source();
    let angular = solver.probe_angular();
    let mut total = C64::new(0.0, 0.0);
    let mut expansions: Vec<(usize, Vec<C64>, Vec<C64>)> = Vec::new();
    let mut cache: Option<(C64, Vec<C64>, Mat<C64>)> = None;
    for (l, bl) in solver.ground_diagonal().iter().enumerate() {
        if source.column(l).iter().all(|v| *v == C64::new(0.0, 0.0)) {
            continue;
        }
        if cache.as_ref().is_none_or(|(b, _, _)| b != bl) {
            let m = Mat::<C64>::from_fn(nx, nx, |r, c| {
                let mut v = a[(r, c)];
                if r == c {
                    v += level_shift.get(levels[r]).copied().unwrap_or(0.0) - bl.conj();
                }
                v / coeff[r]
            });
            let eig = m
                .eigen()
                .map_err(|e| Error::Numerical(format!("velocity-pole decomposition failed: {e:?}")))?;
            let lambda: Vec<C64> = eig.S().column_vector().iter().copied().collect();
            cache = Some((*bl, lambda, eig.U().to_owned()));
        }
        let (_, lambda, vecs) = cache.as_ref().expect("decomposition");
        let mut y = Mat::<C64>::from_fn(nx, 1, |r, _| source[(r, l)] / coeff[r]);
        vecs.partial_piv_lu().solve_in_place(&mut y);
        let weights: Vec<C64> = (0..nx)
            .map(|k| {
                let t: C64 = (0..nx).map(|m| angular[(l, m)].conj() * vecs[(m, k)]).sum();
                t * y[(k, 0)]
            })
            .collect();
        for (k, wk) in weights.iter().enumerate() {
            if *wk != C64::new(0.0, 0.0) {
                total += wk * gaussian_resolvent(-lambda[k], sigma)?;
            }
        }
        expansions.push((l, lambda.clone(), weights));
    }

    // the expansion must reproduce direct solves at a few velocities
    for v in [0.0, sigma, -2.0 * sigma] {
        let shift: Vec<f64> = (0..4)
            .map(|k| level_shift.get(k).copied().unwrap_or(0.0) + unit[k] * v)
            .collect();
        let direct = solver.coherences(&shift)?;
        for (l, lambda, weights) in &expansions {
            let exact: C64 = (0..nx).map(|m| angular[(*l, m)].conj() * direct[(m, *l)]).sum();
            let approx: C64 = lambda.iter().zip(weights).map(|(lk, wk)| wk / (lk + v)).sum();
            let scale: f64 = lambda
                .iter()
                .zip(weights)
                .map(|(lk, wk)| wk.norm() / (lk + v).norm())
                .sum();
            if (exact - approx).norm() > EXPANSION_CHECK_TOL * scale.max(exact.norm()) {
                return Err(Error::Numerical(format!(
                    "velocity-pole expansion disagrees with a direct solve at v = {v:.3} m/s ({:.3e} vs {:.3e})",
                    approx.norm(),
                    exact.norm()
                )));
            }
        }
    }
    Ok(-total.im)
}
