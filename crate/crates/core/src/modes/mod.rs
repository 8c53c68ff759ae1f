//! Guided-mode extraction: imaginary-distance iteration with deflation and
//! the correlation (spectral) method, plus the two propagation-constant
//! corrections.

mod correlation;
mod imaginary;
pub mod spectrum;

pub use correlation::{
    solve_correlation, CorrelationOptions, CorrelationOutcome, CorrelationRecord, Demodulation,
    WindowKind,
};
pub use imaginary::{solve_imaginary_distance, ImaginaryDistanceOptions, ModeSet, Strategy};
pub use spectrum::{find_peaks, SpectralPeak};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bpm::{complex_permittivity, BoundaryKind, BoundarySpec};
use crate::error::{FieldError, SolveError};
use crate::field::{dot, rayleigh_quotient_complex, ComplexField2D, Edges, GhostFactors};
use crate::geometry::IndexProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ImaginaryDistance,
    Correlation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub order: usize,
    /// Unit power, largest sample real positive.
    pub field: ComplexField2D,
    pub beta_per_um: f64,
    /// Filled by [`imaginary_beta_correction`]; negative for loss.
    pub beta_imag_per_um: Option<f64>,
    pub n_eff: f64,
    pub method: Method,
    /// `||(H - beta^2) phi|| / (beta^2 ||phi||)`
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// False when `n_eff` does not exceed the supplied cladding index.
    pub guided: bool,
}

/// Exact inversion of the envelope substitution:
/// `beta = sqrt(k_ref^2 + 2 k_ref beta_par)`.
pub fn paraxial_to_helmholtz(beta_par: f64, k_ref: f64) -> Result<f64, SolveError> {
    let radicand = k_ref * k_ref + 2.0 * k_ref * beta_par;
    if !(radicand > 0.0) {
        return Err(SolveError::NegativeRadicand(radicand));
    }
    Ok(radicand.sqrt())
}

/// Inverse of [`paraxial_to_helmholtz`].
pub fn helmholtz_to_paraxial(beta: f64, k_ref: f64) -> f64 {
    (beta * beta - k_ref * k_ref) / (2.0 * k_ref)
}

/// `f - sum_k <phi_k, f> phi_k` over unit-power, mutually orthogonal fields.
/// Projection runs twice to keep the result orthogonal when most of `f`
/// lies in the span.
pub fn deflate(f: &ComplexField2D, found: &[ModeSolution]) -> Result<ComplexField2D, FieldError> {
    let fields: Vec<&ComplexField2D> = found.iter().map(|m| &m.field).collect();
    let mut out = f.clone();
    deflate_fields(&mut out, &fields)?;
    Ok(out)
}

pub(crate) fn deflate_fields(
    f: &mut ComplexField2D,
    found: &[&ComplexField2D],
) -> Result<(), FieldError> {
    for phi in found {
        crate::field::check_grid(&f.grid, &phi.grid)?;
    }
    let area = f.grid.cell_area();
    for _ in 0..2 {
        for phi in found {
            let c = dot(&phi.values, &f.values) * area;
            for (a, b) in f.values.iter_mut().zip(&phi.values) {
                *a -= c * b;
            }
        }
    }
    Ok(())
}

/// Complex propagation constant from the mode profile substituted into the
/// wave equation over the full window, absorber included. Returns the
/// principal root (non-negative real part).
pub fn imaginary_beta_correction(
    mode: &ModeSolution,
    profile: &IndexProfile,
    boundary: &BoundarySpec,
    k0: f64,
) -> Result<Complex64, SolveError> {
    crate::field::check_grid(&mode.field.grid, &profile.grid)?;
    let eps = complex_permittivity(profile, boundary);
    let edges = match boundary.kind {
        BoundaryKind::AbsorberRamp => Edges::Dirichlet,
        BoundaryKind::Periodic => Edges::Periodic,
        BoundaryKind::Decay => Edges::Ghost(GhostFactors::decay(profile, k0, mode.beta_per_um)),
    };
    let beta2 = rayleigh_quotient_complex(&mode.field, &eps, k0, &edges)?;
    Ok(beta2.sqrt())
}

/// Apply [`imaginary_beta_correction`] in place.
pub fn apply_imaginary_beta_correction(
    mode: &mut ModeSolution,
    profile: &IndexProfile,
    boundary: &BoundarySpec,
    k0: f64,
) -> Result<(), SolveError> {
    let beta = imaginary_beta_correction(mode, profile, boundary, k0)?;
    mode.beta_per_um = beta.re;
    mode.beta_imag_per_um = Some(beta.im);
    mode.n_eff = beta.re / k0;
    Ok(())
}
