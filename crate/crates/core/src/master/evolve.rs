use nalgebra::DMatrix;

use super::liouvillian::{unvec, Liouvillian};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau; the generator is time independent so the
// nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `d vec(rho)/dt = L vec(rho)` with adaptive Dormand-Prince
/// steps and returns `rho` at each of `times` (ascending, from `t = 0`).
pub fn time_evolve_samples(
    l: &Liouvillian,
    rho0: &DMatrix<C64>,
    times: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<DMatrix<C64>>> {
    let n = l.hilbert_dim();
    if rho0.nrows() != n || rho0.ncols() != n {
        return Err(Error::Domain(format!("initial state is not {n}x{n}")));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be finite, >= 0 and ascending".into()));
    }
    let dim = l.dim();
    let mut y: Vec<C64> = rho0.as_slice().to_vec();
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); dim]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); dim];
    let mut y5 = vec![C64::new(0.0, 0.0); dim];
    let scale = l.frobenius_norm() / (dim as f64).sqrt();
    let mut h = if scale > 0.0 { 0.01 / scale } else { 1.0 };
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(times.len());
    l.apply(&y, &mut k[0]);
    for &target in times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Integrator(format!(
                    "exceeded {} steps before t = {target:e}",
                    opts.max_steps
                )));
            }
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                for (idx, st) in stage.iter_mut().enumerate() {
                    let mut acc = y[idx];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[idx] * (A[s][j] * step);
                        }
                    }
                    *st = acc;
                }
                l.apply(&stage, &mut k[s]);
            }
            let mut err = 0.0f64;
            for idx in 0..dim {
                let mut hi = y[idx];
                let mut diff = C64::new(0.0, 0.0);
                for s in 0..7 {
                    hi += k[s][idx] * (B5[s] * step);
                    diff += k[s][idx] * ((B5[s] - B4[s]) * step);
                }
                y5[idx] = hi;
                let tol = opts.atol + opts.rtol * y[idx].norm().max(hi.norm());
                err = err.max(diff.norm() / tol);
            }
            if !err.is_finite() {
                return Err(Error::Integrator(format!("non-finite error estimate at t = {t:e}")));
            }
            steps += 1;
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y5);
                // first-same-as-last: the final stage is the derivative at the new point
                let (first, rest) = k.split_at_mut(6);
                first[0].copy_from_slice(&rest[0]);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let new_h = step * factor;
            if err <= 1.0 && last {
                // keep the pre-clamp step for the next interval
                h = h.max(new_h);
            } else {
                h = new_h;
            }
            if h < 1e-300 || (h + t == t && t < target) {
                return Err(Error::Integrator(format!("step size underflow at t = {t:e}")));
            }
        }
        out.push(unvec(&y, n));
    }
    Ok(out)
}

pub fn time_evolve(l: &Liouvillian, rho0: &DMatrix<C64>, t: f64, opts: EvolveOptions) -> Result<DMatrix<C64>> {
    Ok(time_evolve_samples(l, rho0, &[t], opts)?.remove(0))
}
