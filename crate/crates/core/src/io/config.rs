//! TOML run configuration. Every table rejects unknown keys, and
//! [`RunConfig::resolve`] validates all sections before anything is computed.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::IoError;
use crate::bpm::{Axis, BoundaryKind, BoundarySpec, PropagationConfig};
use crate::field::LaunchSpec;
use crate::geometry::{
    build_hex_lattice, lattice_window, periodic_supercell, rasterize_clipped, rasterize_index,
    supercell_grid, Grid2D, HoleShape, IndexProfile, PcfGeometry,
};
use crate::modes::{CorrelationOptions, Demodulation, ImaginaryDistanceOptions, Method, Strategy};

/// How `d_um` is read: as the hole diameter (square side) or as its radius
/// (half side).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DInterpretation {
    Diameter,
    Radius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub pitch_um: f64,
    pub d_um: f64,
    #[serde(default = "default_interpretation")]
    pub d_interpretation: DInterpretation,
    #[serde(default = "default_shape")]
    pub hole_shape: HoleShape,
    #[serde(default = "default_rings")]
    pub rings: usize,
    #[serde(default = "yes")]
    pub core_defect: bool,
    #[serde(default = "default_n_background")]
    pub n_background: f64,
    #[serde(default = "default_n_hole")]
    pub n_hole: f64,
}

fn default_interpretation() -> DInterpretation {
    DInterpretation::Diameter
}
fn default_shape() -> HoleShape {
    HoleShape::Circular
}
fn default_rings() -> usize {
    4
}
fn yes() -> bool {
    true
}
fn default_n_background() -> f64 {
    1.45
}
fn default_n_hole() -> f64 {
    1.0
}

impl GeometrySection {
    pub fn to_geometry(&self) -> PcfGeometry {
        let d = match self.d_interpretation {
            DInterpretation::Diameter => self.d_um,
            DInterpretation::Radius => 2.0 * self.d_um,
        };
        PcfGeometry {
            pitch_um: self.pitch_um,
            hole_diameter_um: d,
            hole_shape: self.hole_shape,
            rings: self.rings,
            core_defect: self.core_defect,
            n_background: self.n_background,
            n_hole: self.n_hole,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    /// Square inscribed in the hexagon of outermost hole centres; holes
    /// crossing the edge are clipped. Avoids modes of the outer silica.
    Lattice,
    /// Whole structure plus `margin_um` of background.
    Fit,
    /// `nx`, `ny`, `x0_um`, `y0_um` given.
    Explicit,
    /// Periodic supercell `(rings + 1)` pitches wide with the lattice
    /// filling it; needs periodic edges.
    Supercell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dx_um: f64,
    #[serde(default = "default_window")]
    pub window: WindowKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0_um: Option<f64>,
    #[serde(default = "default_subsamples")]
    pub subsamples: usize,
}

fn default_window() -> WindowKind {
    WindowKind::Lattice
}
fn default_subsamples() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub lambda_um: f64,
    /// Defaults to `4 k_ref dx^2`, small enough for the split stepper at
    /// silica/air contrast.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dz_um: Option<f64>,
    /// Defaults to the background index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ref: Option<f64>,
    #[serde(default)]
    pub boundary: BoundarySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    Sequential,
    Block,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "one")]
    pub n_modes: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_launch")]
    pub launch: LaunchSpec,
    #[serde(default = "default_strategy")]
    pub strategy: StrategyName,
    #[serde(default = "default_guard")]
    pub guard: usize,
    #[serde(default = "default_ritz_every")]
    pub ritz_every: usize,
    #[serde(default = "default_restart_every")]
    pub restart_every: usize,
    #[serde(default = "default_shift")]
    pub shift: f64,
    #[serde(default = "one_f")]
    pub settle_factor: f64,
    /// Compare against the space-filling-mode index to flag unguided modes.
    #[serde(default = "yes")]
    pub flag_unguided: bool,
    /// Correlation method: record length in steps.
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    #[serde(default = "default_polish")]
    pub polish_steps: usize,
    #[serde(default = "default_demodulation")]
    pub demodulation: Demodulation,
}

fn default_method() -> Method {
    Method::ImaginaryDistance
}
fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-12
}
fn default_max_steps() -> usize {
    20_000
}
fn default_seed() -> u64 {
    0x5eed
}
fn default_launch() -> LaunchSpec {
    LaunchSpec::gaussian(0.0, 0.0, 2.0)
}
fn default_strategy() -> StrategyName {
    StrategyName::Block
}
fn default_guard() -> usize {
    2
}
fn default_ritz_every() -> usize {
    10
}
fn default_restart_every() -> usize {
    100
}
fn default_shift() -> f64 {
    0.5
}
fn default_n_steps() -> usize {
    4096
}
fn default_pad() -> usize {
    4
}
fn default_polish() -> usize {
    20
}
fn default_demodulation() -> Demodulation {
    Demodulation::Trapezoid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<FieldFormat>,
    /// Dump the launch field every this many steps while it is propagated
    /// with the configured stepper; zero disables.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub snapshot_steps: usize,
}

fn default_formats() -> Vec<FieldFormat> {
    vec![FieldFormat::Binary]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub grid: GridSection,
    pub propagation: PropagationSection,
    #[serde(default = "default_solver")]
    pub solver: SolverSection,
    pub output: OutputSection,
}

fn default_solver() -> SolverSection {
    toml::from_str("").expect("solver defaults")
}

fn bad(msg: impl Into<String>) -> IoError {
    IoError::Config(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, IoError> {
        toml::to_string(self).map_err(|e| IoError::Serialize(e.to_string()))
    }

    pub fn pcf_geometry(&self) -> PcfGeometry {
        self.geometry.to_geometry()
    }

    /// Validate every section and make all defaulted quantities explicit:
    /// the grid becomes `window = "explicit"`, `dz_um` and `n_ref` are set.
    pub fn resolve(&self) -> Result<RunConfig, IoError> {
        let geom = self.pcf_geometry();
        geom.validate().map_err(|e| bad(e.to_string()))?;
        let grid = self.grid_2d()?;
        let p = &self.propagation;
        if !(p.lambda_um > 0.0 && p.lambda_um.is_finite()) {
            return Err(bad(format!(
                "lambda_um must be positive, got {}",
                p.lambda_um
            )));
        }
        let n_ref = p.n_ref.unwrap_or(geom.n_background);
        let (lo, hi) = (
            geom.n_hole.min(geom.n_background),
            geom.n_hole.max(geom.n_background),
        );
        if !(n_ref >= lo && n_ref <= hi) {
            return Err(bad(format!(
                "n_ref {n_ref} outside the index range [{lo}, {hi}]"
            )));
        }
        let k_ref = 2.0 * std::f64::consts::PI / p.lambda_um * n_ref;
        let dx = grid.dx_um.min(grid.dy_um);
        let dz = p.dz_um.unwrap_or(4.0 * k_ref * dx * dx);
        if !(dz > 0.0 && dz.is_finite()) {
            return Err(bad(format!("dz_um must be positive, got {dz}")));
        }
        let b = &p.boundary;
        if !(b.strength >= 0.0 && b.strength.is_finite()) {
            return Err(bad(format!(
                "boundary strength must be non-negative, got {}",
                b.strength
            )));
        }
        if b.kind == BoundaryKind::AbsorberRamp && 2 * b.width_cells >= grid.nx.min(grid.ny) {
            return Err(bad(format!(
                "absorber of {} cells does not fit a {}x{} grid",
                b.width_cells, grid.nx, grid.ny
            )));
        }
        let s = &self.solver;
        if s.n_modes == 0 {
            return Err(bad("n_modes must be at least 1"));
        }
        if !(s.tol > 0.0) || s.max_steps == 0 {
            return Err(bad("tol must be positive and max_steps at least 1"));
        }
        if s.ritz_every == 0 || s.restart_every == 0 {
            return Err(bad("ritz_every and restart_every must be at least 1"));
        }
        if !(s.shift > 0.0) || !(s.settle_factor >= 0.0) {
            return Err(bad("shift must be positive and settle_factor non-negative"));
        }
        if s.n_steps < 2 || s.pad_factor == 0 {
            return Err(bad("n_steps must be at least 2 and pad_factor at least 1"));
        }
        if !(s.launch.waist_um > 0.0) {
            return Err(bad("launch waist must be positive"));
        }
        if self.output.formats.is_empty() {
            return Err(bad("output.formats must name at least one format"));
        }
        if self.output.snapshot_every > 0 && self.output.snapshot_steps == 0 {
            return Err(bad("snapshot_every needs snapshot_steps"));
        }
        let periodic = b.kind == BoundaryKind::Periodic;
        if periodic != (self.grid.window == WindowKind::Supercell) {
            return Err(bad(
                "periodic edges go with window = \"supercell\" and only with it",
            ));
        }
        let mut out = self.clone();
        out.propagation.dz_um = Some(dz);
        out.propagation.n_ref = Some(n_ref);
        if self.grid.window == WindowKind::Supercell {
            return Ok(out);
        }
        out.grid = GridSection {
            dx_um: grid.dx_um,
            window: WindowKind::Explicit,
            margin_um: None,
            nx: Some(grid.nx),
            ny: Some(grid.ny),
            x0_um: Some(grid.x0_um),
            y0_um: Some(grid.y0_um),
            subsamples: self.grid.subsamples,
        };
        Ok(out)
    }

    pub fn grid_2d(&self) -> Result<Grid2D, IoError> {
        let g = &self.grid;
        if !(g.dx_um > 0.0 && g.dx_um.is_finite()) {
            return Err(bad(format!("dx_um must be positive, got {}", g.dx_um)));
        }
        if g.subsamples == 0 {
            return Err(bad("subsamples must be at least 1"));
        }
        let geom = self.pcf_geometry();
        let explicit = [
            g.nx.is_some(),
            g.ny.is_some(),
            g.x0_um.is_some(),
            g.y0_um.is_some(),
        ];
        let grid = match g.window {
            WindowKind::Lattice | WindowKind::Fit | WindowKind::Supercell
                if explicit.iter().any(|&e| e) =>
            {
                return Err(bad(
                    "nx, ny, x0_um and y0_um belong to window = \"explicit\"",
                ));
            }
            WindowKind::Lattice => {
                if g.margin_um.is_some() {
                    return Err(bad("margin_um belongs to window = \"fit\""));
                }
                lattice_window(&geom, g.dx_um)
            }
            WindowKind::Supercell => {
                if g.margin_um.is_some() {
                    return Err(bad("margin_um belongs to window = \"fit\""));
                }
                supercell_grid(&geom, g.dx_um)
            }
            WindowKind::Fit => {
                let absorber = match self.propagation.boundary.kind {
                    BoundaryKind::AbsorberRamp => self.propagation.boundary.width_cells,
                    _ => 0,
                };
                Grid2D::for_geometry(&geom, g.dx_um, g.margin_um.unwrap_or(2.0), absorber)
            }
            WindowKind::Explicit => {
                if !explicit.iter().all(|&e| e) {
                    return Err(bad("window = \"explicit\" needs nx, ny, x0_um and y0_um"));
                }
                Grid2D::new(
                    g.nx.unwrap(),
                    g.ny.unwrap(),
                    g.dx_um,
                    g.dx_um,
                    g.x0_um.unwrap(),
                    g.y0_um.unwrap(),
                )
            }
        };
        grid.map_err(|e| bad(e.to_string()))
    }

    /// Rasterized cross-section on the configured window.
    pub fn index_profile(&self) -> Result<IndexProfile, IoError> {
        let geom = self.pcf_geometry();
        let g = &self.grid;
        let profile = if g.window == WindowKind::Supercell {
            periodic_supercell(&geom, g.dx_um, g.subsamples)
        } else {
            let grid = self.grid_2d()?;
            let holes = build_hex_lattice(&geom).map_err(|e| bad(e.to_string()))?;
            match g.window {
                WindowKind::Fit => rasterize_index(&holes, &geom, &grid, g.subsamples),
                _ => rasterize_clipped(&holes, &geom, &grid, g.subsamples),
            }
        };
        profile.map_err(|e| bad(e.to_string()))
    }

    /// Propagation settings of a resolved config.
    pub fn propagation_config(&self, axis: Axis) -> PropagationConfig {
        let p = &self.propagation;
        PropagationConfig {
            lambda_um: p.lambda_um,
            dz_um: p.dz_um.expect("resolved config"),
            n_ref: p.n_ref.expect("resolved config"),
            boundary: p.boundary,
            axis,
        }
    }

    pub fn imaginary_options(&self, cladding_index: Option<f64>) -> ImaginaryDistanceOptions {
        let s = &self.solver;
        ImaginaryDistanceOptions {
            n_modes: s.n_modes,
            tol: s.tol,
            max_steps: s.max_steps,
            launch: s.launch,
            restart_every: s.restart_every,
            shift: s.shift,
            settle_factor: s.settle_factor,
            cladding_index,
            seed: s.seed,
            strategy: match s.strategy {
                StrategyName::Sequential => Strategy::Sequential,
                StrategyName::Block => Strategy::Block {
                    guard: s.guard,
                    ritz_every: s.ritz_every,
                },
            },
        }
    }

    pub fn correlation_options(&self, cladding_index: Option<f64>) -> CorrelationOptions {
        let s = &self.solver;
        CorrelationOptions {
            n_steps: s.n_steps,
            n_modes: s.n_modes,
            pad_factor: s.pad_factor,
            cladding_index,
            demodulation: s.demodulation,
            polish_steps: s.polish_steps,
            ..CorrelationOptions::default()
        }
    }
}
