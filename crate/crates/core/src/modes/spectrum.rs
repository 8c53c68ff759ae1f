//! Spectral peak estimation for sampled correlation signals.
//!
//! Signals follow the propagation convention `p(z) = sum_m a_m exp(-i beta_m z)`;
//! a component of constant `beta_m` shows up as a peak at `+beta_m`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    pub beta_per_um: f64,
    /// Estimate of `|a_m|`.
    pub amplitude: f64,
    /// Half-maximum width of the Hann main lobe at this record length.
    pub width_per_um: f64,
}

pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|j| 0.5 * (1.0 - (2.0 * PI * j as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Windowed, zero-padded spectrum magnitude `|sum_j w_j p_j exp(+i beta z_j)|`
/// on the grid `beta_k = 2 pi k / (M dz)`, `M = pad_factor * len`, with
/// indices above `M/2` standing for negative `beta`.
pub fn spectrum(samples: &[Complex64], pad_factor: usize) -> Vec<f64> {
    let n = samples.len();
    let m = n * pad_factor.max(1);
    let w = hann(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (j, (s, wj)) in samples.iter().zip(&w).enumerate() {
        buf[j] = s * wj;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

/// Local maxima of the windowed spectrum above `rel_threshold` times the
/// strongest one, refined by a parabola through the log-magnitudes of the
/// peak bin and its neighbours. Sorted by descending beta.
pub fn find_peaks(
    samples: &[Complex64],
    dz_um: f64,
    pad_factor: usize,
    rel_threshold: f64,
) -> Vec<SpectralPeak> {
    let n = samples.len();
    if n < 3 {
        return Vec::new();
    }
    let mag = spectrum(samples, pad_factor);
    let m = mag.len();
    let wsum: f64 = hann(n).iter().sum();
    let max = mag.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let bin = 2.0 * PI / (m as f64 * dz_um);
    let width = 1.44 * 2.0 * PI / (n as f64 * dz_um);
    let mut peaks = Vec::new();
    for k in 0..m {
        let (l, c, r) = (mag[(k + m - 1) % m], mag[k], mag[(k + 1) % m]);
        if !(c > l && c >= r && c >= rel_threshold * max) {
            continue;
        }
        let (ll, lc, lr) = (l.max(1e-300).ln(), c.ln(), r.max(1e-300).ln());
        let denom = ll - 2.0 * lc + lr;
        let delta = if denom.abs() > 0.0 {
            (0.5 * (ll - lr) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let peak_log = lc - 0.25 * (ll - lr) * delta;
        let kk = if k > m / 2 {
            k as f64 - m as f64
        } else {
            k as f64
        };
        peaks.push(SpectralPeak {
            beta_per_um: (kk + delta) * bin,
            amplitude: peak_log.exp() / wsum,
            width_per_um: width,
        });
    }
    peaks.sort_by(|a, b| b.beta_per_um.total_cmp(&a.beta_per_um));
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(amps: &[(f64, f64)], n: usize, dz: f64) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let z = j as f64 * dz;
                amps.iter()
                    .map(|&(a, b)| a * Complex64::new(0.0, -b * z).exp())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn single_tone_peak_within_one_padded_bin() {
        let (n, dz, pad) = (512, 0.5, 4);
        for &beta in &[0.0123, -0.731, 1.9] {
            let p = find_peaks(&tone(&[(1.0, beta)], n, dz), dz, pad, 0.05);
            assert_eq!(p.len(), 1, "beta {beta}: {p:?}");
            let res = 2.0 * PI / (pad as f64 * n as f64 * dz);
            assert!((p[0].beta_per_um - beta).abs() < res);
            assert!((p[0].amplitude - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn two_tones_resolved_with_amplitude_ratio() {
        let (n, dz, pad) = (1024, 0.5, 4);
        let p = find_peaks(&tone(&[(0.8, 0.20), (0.2, 0.05)], n, dz), dz, pad, 0.05);
        assert_eq!(p.len(), 2, "{p:?}");
        assert!(p[0].beta_per_um > p[1].beta_per_um);
        let ratio = p[0].amplitude / p[1].amplitude;
        assert!((ratio / 4.0 - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn hann_endpoints() {
        let w = hann(9);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!(w[8].abs() < 1e-15);
    }
}
