//! V-parameter tools: the step-index V/U/W triple, the cladding index of
//! the hole lattice, the effective V of a PCF, the empirical closed-form
//! V(lambda/pitch, d/pitch) fit, and design-chart sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bpm::{Axis, BoundarySpec, PropagationConfig};
use crate::error::VParamError;
use crate::field::LaunchSpec;
use crate::geometry::{periodic_cladding_cell, PcfGeometry};
use crate::modes::{solve_imaginary_distance, ImaginaryDistanceOptions, Strategy};

/// Single-mode threshold on V.
pub const SINGLE_MODE_CUTOFF: f64 = 2.405;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepFiberSpec {
    pub a_um: f64,
    pub n_co: f64,
    pub n_cl: f64,
}

impl StepFiberSpec {
    pub fn validate(&self) -> Result<(), VParamError> {
        if !(self.a_um > 0.0) {
            return Err(VParamError::InvalidFiber(format!(
                "core radius must be positive, got {}",
                self.a_um
            )));
        }
        if !(self.n_co >= self.n_cl && self.n_cl > 0.0) {
            return Err(VParamError::InvalidFiber(format!(
                "need n_co >= n_cl > 0, got {} and {}",
                self.n_co, self.n_cl
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VBreakdown {
    pub v: f64,
    /// Transverse phase constant, when a mode index was given.
    pub u: Option<f64>,
    /// Transverse attenuation constant, when a mode index was given.
    pub w: Option<f64>,
}

/// `V = k0 a sqrt(n_co^2 - n_cl^2)`, plus `U` and `W` for a mode of index `n_eff`.
pub fn v_number(
    spec: &StepFiberSpec,
    lambda_um: f64,
    n_eff: Option<f64>,
) -> Result<VBreakdown, VParamError> {
    spec.validate()?;
    if !(lambda_um > 0.0) {
        return Err(VParamError::Invalid(format!(
            "wavelength must be positive, got {lambda_um}"
        )));
    }
    let ka = 2.0 * PI / lambda_um * spec.a_um;
    let v = ka * (spec.n_co * spec.n_co - spec.n_cl * spec.n_cl).sqrt();
    let (u, w) = match n_eff {
        None => (None, None),
        Some(n) => {
            if !(n >= spec.n_cl && n <= spec.n_co) {
                return Err(VParamError::IndexOutOfRange {
                    n_eff: n,
                    n_cl: spec.n_cl,
                    n_co: spec.n_co,
                });
            }
            (
                Some(ka * (spec.n_co * spec.n_co - n * n).sqrt()),
                Some(ka * (n * n - spec.n_cl * spec.n_cl).sqrt()),
            )
        }
    };
    Ok(VBreakdown { v, u, w })
}

/// Strictly below the cutoff.
pub fn single_mode(v: f64) -> bool {
    v < SINGLE_MODE_CUTOFF
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsmOptions {
    pub cells_per_pitch: usize,
    pub subsamples: usize,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for FsmOptions {
    fn default() -> Self {
        Self {
            cells_per_pitch: 64,
            subsamples: 4,
            tol: 1e-12,
            max_steps: 20_000,
        }
    }
}

/// Index of the fundamental space-filling mode of the infinite hole lattice:
/// the top Gamma-point mode of one periodic unit cell.
pub fn fsm_index(
    geom: &PcfGeometry,
    lambda_um: f64,
    opts: &FsmOptions,
) -> Result<f64, VParamError> {
    if !(lambda_um > 0.0) {
        return Err(VParamError::Invalid(format!(
            "wavelength must be positive, got {lambda_um}"
        )));
    }
    let lattice = PcfGeometry {
        core_defect: false,
        ..*geom
    };
    let cell = periodic_cladding_cell(&lattice, opts.cells_per_pitch, opts.subsamples)
        .map_err(crate::error::SolveError::from)?;
    let k0 = 2.0 * PI / lambda_um;
    let n_ref = cell.max();
    // Imaginary step sized to the cell, dz' / (4 k_ref) = pitch^2 / 4000;
    // longer steps leave splitting errors near 1e-3 at high hole contrast.
    let dz = k0 * n_ref * geom.pitch_um * geom.pitch_um / 1000.0;
    let config = PropagationConfig {
        lambda_um,
        dz_um: dz,
        n_ref,
        boundary: BoundarySpec::periodic(),
        axis: Axis::ImaginaryDistance,
    };
    let opts = ImaginaryDistanceOptions {
        n_modes: 1,
        tol: opts.tol,
        max_steps: opts.max_steps,
        launch: LaunchSpec::plane_wave(),
        restart_every: 50,
        shift: 0.5,
        settle_factor: 1.0,
        cladding_index: None,
        seed: 0,
        strategy: Strategy::Sequential,
    };
    let set = solve_imaginary_distance(&cell, &config, &opts)?;
    let modes = set.require_converged()?;
    Ok(modes[0].n_eff)
}

/// `V_eff = k0 pitch sqrt(n0^2 - n_cl_eff^2)`.
pub fn v_eff(pitch_um: f64, n0: f64, n_cl_eff: f64, lambda_um: f64) -> Result<f64, VParamError> {
    if n0 < n_cl_eff {
        return Err(VParamError::IndexOutOfRange {
            n_eff: n_cl_eff,
            n_cl: 0.0,
            n_co: n0,
        });
    }
    if !(pitch_um > 0.0 && lambda_um > 0.0) {
        return Err(VParamError::Invalid(
            "pitch and wavelength must be positive".into(),
        ));
    }
    Ok(2.0 * PI / lambda_um * pitch_um * (n0 * n0 - n_cl_eff * n_cl_eff).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Fit coefficients as functions of the relative hole size `r = d / pitch`.
pub fn empirical_coeffs(d_over_pitch: f64) -> Result<EmpiricalCoeffs, VParamError> {
    let r = d_over_pitch;
    if !(r > 0.0 && r < 0.904) {
        return Err(VParamError::FitDomain(r));
    }
    Ok(EmpiricalCoeffs {
        a: r + 0.457 + 3.405 * r / (0.904 - r),
        b: 0.200 * r + 0.100 + 0.027 * (1.045 - r).powf(-2.8),
        c: 0.630 * (0.755 / (0.171 + r)).exp(),
    })
}

/// `V = A / (B exp(C lambda/pitch) + 1)`.
pub fn empirical_v(lambda_over_pitch: f64, d_over_pitch: f64) -> Result<f64, VParamError> {
    if !(lambda_over_pitch > 0.0) {
        return Err(VParamError::Invalid(format!(
            "lambda/pitch must be positive, got {lambda_over_pitch}"
        )));
    }
    let k = empirical_coeffs(d_over_pitch)?;
    Ok(k.a / (k.b * (k.c * lambda_over_pitch).exp() + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VCurveKind {
    NumericVeff,
    EmpiricalV,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Abscissa {
    LambdaOverPitch,
    PitchOverLambda,
}

impl Abscissa {
    pub fn to_lambda_over_pitch(self, x: f64) -> f64 {
        match self {
            Abscissa::LambdaOverPitch => x,
            Abscissa::PitchOverLambda => 1.0 / x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPoint {
    pub abscissa: f64,
    pub v: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Crossing {
    /// Linear interpolation between the bracketing samples; `uncertainty`
    /// is their spacing.
    At {
        abscissa: f64,
        uncertainty: f64,
    },
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VCurve {
    pub kind: VCurveKind,
    pub abscissa: Abscissa,
    pub d_over_pitch: f64,
    pub points: Vec<VPoint>,
    pub crossing: Crossing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: VCurveKind,
    pub d_over_pitch: Vec<f64>,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub abscissa: Abscissa,
    /// Pitch, shape and indices for numeric curves; the hole size is set per curve.
    pub template: PcfGeometry,
    pub fsm: FsmOptions,
}

/// Inclusive arithmetic range `start, start + step, ... <= stop`.
pub fn sweep_values(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, VParamError> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(VParamError::Invalid(format!(
            "bad sweep {start}:{stop}:{step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

fn crossing(points: &[VPoint]) -> Crossing {
    let vals: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.v.map(|v| (p.abscissa, v)))
        .collect();
    for w in vals.windows(2) {
        let ((x0, v0), (x1, v1)) = (w[0], w[1]);
        let (a, b) = (v0 - SINGLE_MODE_CUTOFF, v1 - SINGLE_MODE_CUTOFF);
        if a == 0.0 {
            return Crossing::At {
                abscissa: x0,
                uncertainty: (x1 - x0).abs(),
            };
        }
        if a * b < 0.0 || b == 0.0 {
            let t = a / (a - b);
            return Crossing::At {
                abscissa: x0 + t * (x1 - x0),
                uncertainty: (x1 - x0).abs(),
            };
        }
    }
    Crossing::Never
}

/// One curve per hole size. Point failures are kept in the curve.
pub fn sweep_v(spec: &SweepSpec) -> Result<Vec<VCurve>, VParamError> {
    let xs = sweep_values(spec.start, spec.stop, spec.step)?;
    if xs[0] <= 0.0 {
        return Err(VParamError::Invalid(
            "abscissa values must be positive".into(),
        ));
    }
    for &r in &spec.d_over_pitch {
        if !(r > 0.0 && r < 1.0) {
            return Err(VParamError::Invalid(format!("d/pitch {r} outside (0, 1)")));
        }
    }
    let jobs: Vec<(usize, f64)> = (0..spec.d_over_pitch.len())
        .flat_map(|c| xs.iter().map(move |&x| (c, x)))
        .collect();
    let results: Vec<VPoint> = jobs
        .par_iter()
        .map(|&(c, x)| {
            let r = spec.d_over_pitch[c];
            let lp = spec.abscissa.to_lambda_over_pitch(x);
            let v = match spec.kind {
                VCurveKind::EmpiricalV => empirical_v(lp, r),
                VCurveKind::NumericVeff => {
                    let pitch = spec.template.pitch_um;
                    let geom = PcfGeometry {
                        hole_diameter_um: r * pitch,
                        ..spec.template
                    };
                    let lambda = lp * pitch;
                    fsm_index(&geom, lambda, &spec.fsm)
                        .and_then(|n| v_eff(pitch, geom.n_background, n, lambda))
                }
            };
            match v {
                Ok(v) => VPoint {
                    abscissa: x,
                    v: Some(v),
                    error: None,
                },
                Err(e) => VPoint {
                    abscissa: x,
                    v: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(spec
        .d_over_pitch
        .iter()
        .enumerate()
        .map(|(c, &r)| {
            let points = results[c * xs.len()..(c + 1) * xs.len()].to_vec();
            let crossing = crossing(&points);
            VCurve {
                kind: spec.kind,
                abscissa: spec.abscissa,
                d_over_pitch: r,
                points,
                crossing,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HoleShape;

    #[test]
    fn v_number_examples() {
        let same = StepFiberSpec {
            a_um: 3.0,
            n_co: 1.45,
            n_cl: 1.45,
        };
        assert_eq!(v_number(&same, 1.55, None).unwrap().v, 0.0);
        let smf = StepFiberSpec {
            a_um: 4.1,
            n_co: 1.45,
            n_cl: 1.444,
        };
        let b = v_number(&smf, 1.55, Some(1.4468)).unwrap();
        // 2 pi / 1.55 * 4.1 * sqrt(1.45^2 - 1.444^2), evaluated separately
        assert!((b.v - 2.190_064_550_298_251).abs() < 1e-12);
        let (u, w) = (b.u.unwrap(), b.w.unwrap());
        assert!((u * u + w * w - b.v * b.v).abs() <= 1e-12 * b.v * b.v);
        assert!(matches!(
            v_number(&smf, 1.55, Some(1.46)),
            Err(VParamError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn single_mode_threshold_is_strict() {
        assert!(single_mode(0.0));
        assert!(single_mode(2.404_999));
        assert!(!single_mode(2.405));
        assert!(!single_mode(3.0));
    }

    #[test]
    fn empirical_coefficients_at_reference_points() {
        // direct evaluation of the fit formulas, done by hand beforehand
        let k = empirical_coeffs(0.45).unwrap();
        assert!((k.a - 4.282).abs() < 1e-12);
        assert!((k.b - 0.305_535_716_003_355).abs() < 1e-12);
        assert!((k.c - 2.124_944_190_618_485).abs() < 1e-12);
        assert!((empirical_v(1.0, 0.45).unwrap() - 1.203_459_241_993_973).abs() < 1e-12);
        let k = empirical_coeffs(0.20).unwrap();
        assert!((k.a - 1.624_329_545_454_545_7).abs() < 1e-12);
        assert!((k.b - 0.183_267_816_491_549_72).abs() < 1e-12);
        assert!((k.c - 4.821_113_758_847_97).abs() < 1e-12);
        assert!(empirical_coeffs(0.9039).unwrap().a > 1e3);
        assert!(empirical_coeffs(0.904).is_err());
        assert!(empirical_coeffs(0.0).is_err());
    }

    #[test]
    fn empirical_limits_and_scale_invariance() {
        let k = empirical_coeffs(0.45).unwrap();
        assert!((empirical_v(1e-9, 0.45).unwrap() - k.a / (k.b + 1.0)).abs() < 1e-8);
        assert!(empirical_v(50.0, 0.45).unwrap() < 1e-30);
        let (lambda, pitch, d) = (1.3, 2.2, 0.99);
        let v1 = empirical_v(lambda / pitch, d / pitch).unwrap();
        let v2 = empirical_v((2.0 * lambda) / (2.0 * pitch), (2.0 * d) / (2.0 * pitch)).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn v_eff_basics() {
        assert_eq!(v_eff(2.3, 1.45, 1.45, 1.55).unwrap(), 0.0);
        assert!(v_eff(2.3, 1.44, 1.45, 1.55).is_err());
    }

    #[test]
    fn sweep_ranges() {
        assert_eq!(sweep_values(0.2, 0.8, 0.05).unwrap().len(), 13);
        assert!(sweep_values(0.2, 0.8, 0.0).is_err());
        assert!(sweep_values(0.2, 0.8, -0.1).is_err());
    }

    #[test]
    fn crossing_interpolates() {
        let pts = |vs: &[f64]| {
            vs.iter()
                .enumerate()
                .map(|(k, &v)| VPoint {
                    abscissa: k as f64,
                    v: Some(v),
                    error: None,
                })
                .collect::<Vec<_>>()
        };
        match crossing(&pts(&[3.0, 2.805, 2.005])) {
            Crossing::At {
                abscissa,
                uncertainty,
            } => {
                assert!((abscissa - 1.5).abs() < 1e-12);
                assert_eq!(uncertainty, 1.0);
            }
            Crossing::Never => panic!(),
        }
        assert_eq!(crossing(&pts(&[1.0, 1.5, 2.0])), Crossing::Never);
    }

    #[test]
    fn fsm_uniform_cell_is_background() {
        let geom = PcfGeometry::silica_air(2.0, 0.0, HoleShape::Circular);
        let n = fsm_index(
            &geom,
            1.55,
            &FsmOptions {
                cells_per_pitch: 16,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((n - 1.45).abs() < 1e-9);
    }
}
