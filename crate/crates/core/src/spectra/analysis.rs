use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::Spectrogram;
use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub value: f64,
    pub prominence: f64,
}

/// Local maxima whose topographic prominence is at least `min_fraction` of
/// the curve's global maximum. Flat tops report their middle sample.
pub fn find_peaks(y: &[f64], min_fraction: f64) -> Vec<Peak> {
    let n = y.len();
    let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n < 3 || top.is_nan() || top <= 0.0 {
        return Vec::new();
    }
    let threshold = min_fraction * top;
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let peak = (i + j) / 2;
                let left_base = {
                    let mut lo = y[i];
                    let mut k = i;
                    while k > 0 {
                        k -= 1;
                        if y[k] > y[i] {
                            break;
                        }
                        lo = lo.min(y[k]);
                    }
                    lo
                };
                let right_base = {
                    let mut lo = y[i];
                    let mut k = j;
                    while k + 1 < n {
                        k += 1;
                        if y[k] > y[i] {
                            break;
                        }
                        lo = lo.min(y[k]);
                    }
                    lo
                };
                let prominence = y[i] - left_base.max(right_base);
                if prominence >= threshold {
                    peaks.push(Peak {
                        index: peak,
                        value: y[i],
                        prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Least-squares fit of `offset + amplitude cos(2 theta + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub offset: f64,
    /// Non-negative.
    pub amplitude: f64,
    /// Radians in (-π, π].
    pub phase: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    pub max_residual: f64,
}

pub fn fit_sinusoid(theta_rad: &[f64], y: &[f64]) -> Result<SinusoidFit> {
    if theta_rad.len() != y.len() || y.len() < 3 {
        return domain("sinusoid fit needs at least 3 matching samples");
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&t, &v) in theta_rad.iter().zip(y) {
        let row = Vector3::new(1.0, (2.0 * t).cos(), (2.0 * t).sin());
        ata += row * row.transpose();
        aty += row * v;
    }
    let coef = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::Numerical("angles do not determine a cos(2θ) fit".into()))?;
    let (offset, c, s) = (coef[0], coef[1], coef[2]);
    let mut sum_sq = 0.0;
    let mut max_residual = 0.0f64;
    for (&t, &v) in theta_rad.iter().zip(y) {
        let r = v - (offset + c * (2.0 * t).cos() + s * (2.0 * t).sin());
        sum_sq += r * r;
        max_residual = max_residual.max(r.abs());
    }
    Ok(SinusoidFit {
        offset,
        amplitude: c.hypot(s),
        phase: (-s).atan2(c),
        rms_residual: (sum_sq / y.len() as f64).sqrt(),
        max_residual,
    })
}

/// Signal on the zero coupling-detuning column, one value per angle.
pub fn central_cut(spec: &Spectrogram) -> Result<(Vec<f64>, Vec<f64>)> {
    let col = spec
        .detuning
        .iter()
        .position(|d| *d == 0.0)
        .ok_or_else(|| Error::Domain("coupling-detuning axis does not contain 0".into()))?;
    Ok((spec.theta_deg.clone(), spec.signal.iter().map(|row| row[col]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn peaks_respect_prominence() {
        let y = [0.0, 1.0, 0.0, 0.03, 0.02, 0.5, 0.5, 0.5, 0.0];
        let p = find_peaks(&y, 0.05);
        assert_eq!(p.iter().map(|p| p.index).collect::<Vec<_>>(), vec![1, 6]);
        assert_abs_diff_eq!(p[1].prominence, 0.5);
        assert!(find_peaks(&[0.0, 0.0, 0.0], 0.05).is_empty());
        assert!(find_peaks(&[3.0, 2.0, 1.0], 0.05).is_empty());
    }

    #[test]
    fn shoulder_on_a_slope_is_not_a_peak() {
        let y: Vec<f64> = (0..50).map(|k| k as f64 + if k == 20 { 0.3 } else { 0.0 }).collect();
        assert!(find_peaks(&y, 0.05).is_empty());
    }

    #[test]
    fn sinusoid_recovered() {
        let theta: Vec<f64> = (0..72).map(|k| (5.0 * k as f64).to_radians()).collect();
        let y: Vec<f64> = theta.iter().map(|t| 0.4 + 0.2 * (2.0 * t + 0.7).cos()).collect();
        let fit = fit_sinusoid(&theta, &y).unwrap();
        assert_abs_diff_eq!(fit.offset, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.amplitude, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.phase, 0.7, epsilon = 1e-12);
        assert!(fit.rms_residual < 1e-12);
        assert!(fit_sinusoid(&theta[..2], &y[..2]).is_err());
    }
}
