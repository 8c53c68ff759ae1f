use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::spectrum::{find_peaks, hann, SpectralPeak};
use super::{deflate_fields, paraxial_to_helmholtz, Method, ModeSolution};
use crate::bpm::{propagate, Axis, PropagationConfig, Stepper};
use crate::error::SolveError;
use crate::field::{
    dot, eigen_residual, make_launch_field, normalize_in_place, rayleigh_quotient_beta2_with,
    ComplexField2D, LaunchSpec,
};
use crate::geometry::IndexProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Hann,
}

/// `p(z_j) = <phi_in, phi(z_j)>` at `z_j = j dz`, `j = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRecord {
    pub dz_um: f64,
    pub samples: Vec<Complex64>,
    pub window: WindowKind,
    pub pad_factor: usize,
}

impl CorrelationRecord {
    pub fn length_um(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dz_um
    }

    /// Padded-bin spacing of the spectrum, `2 pi / (pad_factor L)`.
    pub fn resolution_per_um(&self) -> f64 {
        2.0 * PI / (self.pad_factor as f64 * self.length_um())
    }
}

/// Weighting of the mode-extraction integral over the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Demodulation {
    /// Plain trapezoidal `(1/L) sum phi e^{i beta z} dz`.
    Trapezoid,
    /// Hann-weighted average; far lower leakage from neighbouring peaks.
    Hann,
}

/// Weights for samples `0..=n_steps`, summing to one.
fn demodulation_weights(n_steps: usize, kind: Demodulation) -> Vec<f64> {
    let mut w: Vec<f64> = match kind {
        Demodulation::Trapezoid => (0..=n_steps)
            .map(|j| if j == 0 || j == n_steps { 0.5 } else { 1.0 })
            .collect(),
        Demodulation::Hann => hann(n_steps + 1),
    };
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationOptions {
    pub n_steps: usize,
    pub n_modes: usize,
    pub pad_factor: usize,
    /// Peaks below this fraction of the strongest are ignored.
    pub peak_threshold: f64,
    /// Smallest expected spacing between modal betas; a warning is emitted
    /// when the record is too short to resolve it.
    pub min_expected_spacing: Option<f64>,
    pub cladding_index: Option<f64>,
    pub demodulation: Demodulation,
    /// Imaginary-distance steps of length `k_ref dx^2` applied to each
    /// demodulated field. They damp the grid-scale residue that the split
    /// real-axis stepper leaves at index steps, which otherwise biases the
    /// Rayleigh quotient low. Zero disables.
    pub polish_steps: usize,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self {
            n_steps: 4096,
            n_modes: 1,
            pad_factor: 4,
            peak_threshold: 0.05,
            min_expected_spacing: None,
            cladding_index: None,
            demodulation: Demodulation::Trapezoid,
            polish_steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationOutcome {
    pub record: CorrelationRecord,
    /// All detected peaks, envelope betas, descending.
    pub peaks: Vec<SpectralPeak>,
    /// Extracted modes, descending n_eff.
    pub modes: Vec<ModeSolution>,
    pub diagnostics: Vec<String>,
}

/// Correlation-method solve: a real-distance propagation records
/// `p(z)`, its spectrum gives the modal betas and a second propagation
/// demodulates the field at each of them.
pub fn solve_correlation(
    profile: &IndexProfile,
    config: &PropagationConfig,
    launch: &LaunchSpec,
    opts: &CorrelationOptions,
) -> Result<CorrelationOutcome, SolveError> {
    if opts.n_steps < 2 || opts.n_modes == 0 || opts.pad_factor == 0 {
        return Err(SolveError::Invalid(
            "need n_steps >= 2, n_modes >= 1 and pad_factor >= 1".into(),
        ));
    }
    let mut cfg = *config;
    cfg.axis = Axis::RealDistance;
    let stepper = Stepper::new(profile, &cfg)?;
    let k0 = cfg.k0();
    let k_ref = stepper.k_ref();
    let dz = cfg.dz_um;
    let length = opts.n_steps as f64 * dz;
    let mut diagnostics = Vec::new();
    if let Some(spacing) = opts.min_expected_spacing {
        let res = 2.0 * PI / length;
        if res >= spacing {
            diagnostics.push(format!(
                "record length {length:.1} um resolves {res:.3e} rad/um, not below the expected spacing {spacing:.3e}"
            ));
        }
    }

    let f0 = make_launch_field(launch, &profile.grid)?;
    let area = f0.grid.cell_area();
    let mut samples = Vec::with_capacity(opts.n_steps + 1);
    samples.push(dot(&f0.values, &f0.values) * area);
    {
        let mut rec =
            |_: usize, _: f64, f: &ComplexField2D| samples.push(dot(&f0.values, &f.values) * area);
        propagate(&stepper, &f0, opts.n_steps, &mut rec)?;
    }
    let record = CorrelationRecord {
        dz_um: dz,
        samples,
        window: WindowKind::Hann,
        pad_factor: opts.pad_factor,
    };
    let peaks = find_peaks(&record.samples, dz, opts.pad_factor, opts.peak_threshold);

    let mut chosen = peaks.clone();
    chosen.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    chosen.truncate(opts.n_modes);
    chosen.sort_by(|a, b| b.beta_per_um.total_cmp(&a.beta_per_um));
    if chosen.len() < opts.n_modes {
        diagnostics.push(format!(
            "found {} resolvable peaks, {} requested",
            chosen.len(),
            opts.n_modes
        ));
    }
    if chosen.is_empty() {
        return Ok(CorrelationOutcome {
            record,
            peaks,
            modes: Vec::new(),
            diagnostics,
        });
    }

    // Trapezoidal (1/L) sum of phi(z) exp(+i beta z) dz for every chosen beta.
    let grid = profile.grid;
    let mut acc: Vec<ComplexField2D> = chosen.iter().map(|_| ComplexField2D::zeros(grid)).collect();
    let weights = demodulation_weights(opts.n_steps, opts.demodulation);
    let accumulate = |acc: &mut [ComplexField2D], step: usize, f: &ComplexField2D| {
        let w = weights[step];
        let z = step as f64 * dz;
        for (a, peak) in acc.iter_mut().zip(&chosen) {
            let ph = Complex64::new(0.0, peak.beta_per_um * z).exp() * w;
            for (x, v) in a.values.iter_mut().zip(&f.values) {
                *x += ph * v;
            }
        }
    };
    accumulate(&mut acc, 0, &f0);
    {
        let mut obs = |step: usize, _: f64, f: &ComplexField2D| accumulate(&mut acc, step, f);
        propagate(&stepper, &f0, opts.n_steps, &mut obs)?;
    }

    let polisher = if opts.polish_steps > 0 {
        let h = grid.dx_um.min(grid.dy_um);
        let pcfg = PropagationConfig {
            dz_um: k_ref * h * h,
            axis: Axis::ImaginaryDistance,
            ..cfg
        };
        Some(Stepper::new(profile, &pcfg)?)
    } else {
        None
    };
    let mut modes: Vec<ModeSolution> = Vec::with_capacity(acc.len());
    for (mut field, peak) in acc.into_iter().zip(&chosen) {
        if let Some(p) = &polisher {
            for _ in 0..opts.polish_steps {
                p.step_in_place(&mut field)?;
            }
        }
        {
            let prev: Vec<&ComplexField2D> = modes.iter().map(|m| &m.field).collect();
            deflate_fields(&mut field, &prev)?;
        }
        if normalize_in_place(&mut field).is_err() {
            diagnostics.push(format!(
                "peak at {:.6e} rad/um produced an empty field",
                peak.beta_per_um
            ));
            continue;
        }
        let beta2 = rayleigh_quotient_beta2_with(&field, profile, k0, stepper.edges())?;
        let beta = paraxial_to_helmholtz((beta2 - k_ref * k_ref) / (2.0 * k_ref), k_ref)?;
        let residual = eigen_residual(&field, profile, k0, beta2, stepper.edges()) / beta2.abs();
        field.fix_phase();
        let n_eff = beta / k0;
        modes.push(ModeSolution {
            order: modes.len(),
            field,
            beta_per_um: beta,
            beta_imag_per_um: None,
            n_eff,
            method: Method::Correlation,
            residual,
            iterations: opts.n_steps,
            converged: true,
            guided: opts.cladding_index.is_none_or(|ncl| n_eff > ncl),
        });
    }
    modes.sort_by(|a, b| b.n_eff.total_cmp(&a.n_eff));
    for (k, m) in modes.iter_mut().enumerate() {
        m.order = k;
    }
    Ok(CorrelationOutcome {
        record,
        peaks,
        modes,
        diagnostics,
    })
}
