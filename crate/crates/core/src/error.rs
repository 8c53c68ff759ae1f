use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    Invalid(String),
    #[error("holes overlap: size {d} um must be below {limit} um")]
    Overlap { d: f64, limit: f64 },
    #[error("hole at ({x:.3}, {y:.3}) um extends outside the grid window")]
    OutsideWindow { x: f64, y: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("field has zero power")]
    ZeroField,
    #[error("launch waist {waist} um is below two grid cells ({min} um)")]
    Unresolved { waist: f64, min: f64 },
    #[error("invalid launch: {0}")]
    InvalidLaunch(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BpmError {
    #[error("invalid propagation config: {0}")]
    Config(String),
    #[error("reference index {n_ref} outside profile range [{min}, {max}]")]
    ReferenceIndex { n_ref: f64, min: f64, max: f64 },
    #[error("step too large: diffraction number {value:.3e} exceeds {limit:.0e}")]
    StepTooLarge { value: f64, limit: f64 },
    #[error("non-finite field after step {step}")]
    NonFinite { step: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver input: {0}")]
    Invalid(String),
    #[error("mode {order} did not converge after {steps} steps (n_eff {n_eff:.9}, residual {residual:.3e})")]
    NotConverged {
        order: usize,
        steps: usize,
        n_eff: f64,
        residual: f64,
    },
    #[error("negative radicand {0:.3e} mapping envelope eigenvalue to a propagation constant")]
    NegativeRadicand(f64),
    #[error(transparent)]
    Bpm(#[from] BpmError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VParamError {
    #[error("invalid fiber: {0}")]
    InvalidFiber(String),
    #[error("n_eff {n_eff} outside [{n_cl}, {n_co}]")]
    IndexOutOfRange { n_eff: f64, n_cl: f64, n_co: f64 },
    #[error("d/pitch {0} outside the fit domain (0, 0.904)")]
    FitDomain(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
