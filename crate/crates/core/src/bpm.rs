//! Finite-difference beam propagation of a scalar envelope.
//!
//! With `phi = u exp(-i k_ref z)` the paraxial envelope obeys
//! `2 i k_ref du/dz = -H u`, `H = lap + k0^2 n^2 - k_ref^2`. Real-distance steps
//! advance `du/dz = -i H u / (2 k_ref)`; imaginary-distance steps advance
//! `du/dz' = H u / (2 k_ref)`, under which every eigenmode grows as
//! `exp(beta_par z')` with `beta_par = eig(H) / (2 k_ref)`.
//!
//! One step is a Strang-split Crank-Nicolson update
//! `Cx(dz/2) Cy(dz) Cx(dz/2)`, each factor a batch of tridiagonal solves
//! along rows or columns. Every factor is a Cayley transform of a real
//! symmetric matrix when the index is real, so real-distance steps are
//! unitary and imaginary-distance steps are symmetric.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::BpmError;
use crate::field::{ComplexField2D, Edges, GhostFactors};
use crate::geometry::{Grid2D, IndexProfile};
use crate::tridiag::{CyclicThomas, LineSolver, Thomas};

/// Upper bound on `dz / (2 k_ref dx^2)`.
pub const MAX_DIFFRACTION_NUMBER: f64 = 1.0e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    RealDistance,
    ImaginaryDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// Quadratic imaginary-index ramp over the outer cells, zero ghosts beyond.
    AbsorberRamp,
    /// Wrap-around in both directions; no absorber.
    Periodic,
    /// Ghost cells continue an evanescent tail `exp(-gamma r)` with
    /// `gamma^2 = k_ref^2 - k0^2 n_edge^2`; no absorber.
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
    pub width_cells: usize,
    /// Peak imaginary index of the ramp.
    pub strength: f64,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        Self {
            kind: BoundaryKind::AbsorberRamp,
            width_cells: 20,
            strength: 0.02,
        }
    }
}

impl BoundarySpec {
    pub fn absorber(width_cells: usize, strength: f64) -> Self {
        Self {
            kind: BoundaryKind::AbsorberRamp,
            width_cells,
            strength,
        }
    }

    pub fn periodic() -> Self {
        Self {
            kind: BoundaryKind::Periodic,
            width_cells: 0,
            strength: 0.0,
        }
    }

    pub fn decay() -> Self {
        Self {
            kind: BoundaryKind::Decay,
            width_cells: 0,
            strength: 0.0,
        }
    }

    /// Imaginary index at every sample (zero outside the ramp).
    pub fn absorber_profile(&self, grid: &Grid2D) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        if self.kind != BoundaryKind::AbsorberRamp || self.strength == 0.0 || self.width_cells == 0
        {
            return out;
        }
        let w = self.width_cells as f64;
        let depth = |i: usize, n: usize| -> f64 {
            let from_low = self.width_cells as f64 - i as f64;
            let from_high = i as f64 + 1.0 + self.width_cells as f64 - n as f64;
            from_low.max(from_high).max(0.0) / w
        };
        for j in 0..grid.ny {
            let dy = depth(j, grid.ny);
            for i in 0..grid.nx {
                let d = depth(i, grid.nx).max(dy);
                out[grid.idx(i, j)] = self.strength * d * d;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    pub lambda_um: f64,
    pub dz_um: f64,
    /// Reference index of the slowly varying envelope.
    pub n_ref: f64,
    pub boundary: BoundarySpec,
    pub axis: Axis,
}

impl PropagationConfig {
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.lambda_um
    }
}

/// Relative permittivity `(n - i kappa)^2` including the absorber ramp.
pub fn complex_permittivity(profile: &IndexProfile, boundary: &BoundarySpec) -> Vec<Complex64> {
    let kappa = boundary.absorber_profile(&profile.grid);
    profile
        .n
        .iter()
        .zip(&kappa)
        .map(|(&n, &k)| {
            let nc = Complex64::new(n, -k);
            nc * nc
        })
        .collect()
}

/// Reusable pre-factored propagation operator for one profile and config.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid2D,
    config: PropagationConfig,
    k0: f64,
    k_ref: f64,
    edges: Edges,
    potential: Vec<Complex64>,
    ax: Complex64,
    ay: Complex64,
    x_solvers: Vec<LineSolver>,
    y_solvers: Vec<LineSolver>,
}

pub fn make_stepper(
    profile: &IndexProfile,
    config: &PropagationConfig,
) -> Result<Stepper, BpmError> {
    Stepper::new(profile, config)
}

impl Stepper {
    pub fn new(profile: &IndexProfile, config: &PropagationConfig) -> Result<Self, BpmError> {
        Self::with_decay_beta(profile, config, config.k0() * config.n_ref)
    }

    /// As [`Stepper::new`], but a decay boundary takes its evanescent tail
    /// from `beta` instead of `k_ref`.
    pub fn with_decay_beta(
        profile: &IndexProfile,
        config: &PropagationConfig,
        beta: f64,
    ) -> Result<Self, BpmError> {
        let grid = profile.grid;
        if !(config.lambda_um > 0.0 && config.lambda_um.is_finite()) {
            return Err(BpmError::Config(format!(
                "wavelength must be positive, got {}",
                config.lambda_um
            )));
        }
        if !(config.dz_um > 0.0 && config.dz_um.is_finite()) {
            return Err(BpmError::Config(format!(
                "step must be positive, got {}",
                config.dz_um
            )));
        }
        let (nmin, nmax) = (profile.min(), profile.max());
        if !(config.n_ref >= nmin && config.n_ref <= nmax) {
            return Err(BpmError::ReferenceIndex {
                n_ref: config.n_ref,
                min: nmin,
                max: nmax,
            });
        }
        let b = &config.boundary;
        if b.kind == BoundaryKind::AbsorberRamp {
            if b.width_cells < 4 {
                return Err(BpmError::Config(format!(
                    "absorber needs at least 4 cells, got {}",
                    b.width_cells
                )));
            }
            if 2 * b.width_cells >= grid.nx.min(grid.ny) {
                return Err(BpmError::Config(
                    "absorber wider than half the window".into(),
                ));
            }
            if !(b.strength >= 0.0 && b.strength.is_finite()) {
                return Err(BpmError::Config(format!(
                    "absorber strength must be non-negative, got {}",
                    b.strength
                )));
            }
        }
        let k0 = config.k0();
        let k_ref = k0 * config.n_ref;
        let dmin = grid.dx_um.min(grid.dy_um);
        let diffraction = config.dz_um / (2.0 * k_ref * dmin * dmin);
        if diffraction > MAX_DIFFRACTION_NUMBER {
            return Err(BpmError::StepTooLarge {
                value: diffraction,
                limit: MAX_DIFFRACTION_NUMBER,
            });
        }

        let eps = complex_permittivity(profile, b);
        let k02 = k0 * k0;
        let potential: Vec<Complex64> = eps.iter().map(|e| k02 * e - k_ref * k_ref).collect();

        let rate = match config.axis {
            Axis::RealDistance => Complex64::new(0.0, -1.0 / (2.0 * k_ref)),
            Axis::ImaginaryDistance => Complex64::new(1.0 / (2.0 * k_ref), 0.0),
        };
        // Cx runs over half a step, Cy over a full one.
        let ax = rate * (0.25 * config.dz_um);
        let ay = rate * (0.5 * config.dz_um);

        if config.axis == Axis::ImaginaryDistance {
            // Keep every 1D factor's implicit matrix positive definite.
            let vmax = potential
                .iter()
                .map(|v| v.re)
                .fold(f64::NEG_INFINITY, f64::max);
            if ay.re * 0.5 * vmax >= 1.0 {
                return Err(BpmError::Config(format!(
                    "imaginary step {} um too large for n_ref {} (max potential {vmax:.3e})",
                    config.dz_um, config.n_ref
                )));
            }
        }

        let edges = match b.kind {
            BoundaryKind::AbsorberRamp => Edges::Dirichlet,
            BoundaryKind::Periodic => Edges::Periodic,
            BoundaryKind::Decay => Edges::Ghost(GhostFactors::decay(profile, k0, beta)),
        };
        if edges == Edges::Periodic && grid.nx.min(grid.ny) < 3 {
            return Err(BpmError::Config("periodic grid too small".into()));
        }

        let (nx, ny) = (grid.nx, grid.ny);
        let (ix2, iy2) = (
            1.0 / (grid.dx_um * grid.dx_um),
            1.0 / (grid.dy_um * grid.dy_um),
        );
        let mut x_solvers = Vec::with_capacity(ny);
        let mut diag = vec![Complex64::new(0.0, 0.0); nx];
        for j in 0..ny {
            for (i, d) in diag.iter_mut().enumerate() {
                let mut lap = -2.0 * ix2;
                if let Edges::Ghost(g) = &edges {
                    if i == 0 {
                        lap += g.left[j] * ix2;
                    }
                    if i == nx - 1 {
                        lap += g.right[j] * ix2;
                    }
                }
                *d = 1.0 - ax * (lap + 0.5 * potential[j * nx + i]);
            }
            x_solvers.push(line_solver(&diag, -ax * ix2, &edges));
        }
        let mut y_solvers = Vec::with_capacity(nx);
        let mut diag = vec![Complex64::new(0.0, 0.0); ny];
        for i in 0..nx {
            for (j, d) in diag.iter_mut().enumerate() {
                let mut lap = -2.0 * iy2;
                if let Edges::Ghost(g) = &edges {
                    if j == 0 {
                        lap += g.bottom[i] * iy2;
                    }
                    if j == ny - 1 {
                        lap += g.top[i] * iy2;
                    }
                }
                *d = 1.0 - ay * (lap + 0.5 * potential[j * nx + i]);
            }
            y_solvers.push(line_solver(&diag, -ay * iy2, &edges));
        }

        Ok(Self {
            grid,
            config: *config,
            k0,
            k_ref,
            edges,
            potential,
            ax,
            ay,
            x_solvers,
            y_solvers,
        })
    }

    pub fn config(&self) -> &PropagationConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn k_ref(&self) -> f64 {
        self.k_ref
    }

    /// Edge treatment matching this stepper's Laplacian.
    pub fn edges(&self) -> &Edges {
        &self.edges
    }

    pub fn step(&self, f: &ComplexField2D) -> Result<ComplexField2D, BpmError> {
        let mut out = f.clone();
        self.step_in_place(&mut out)?;
        Ok(out)
    }

    pub fn step_in_place(&self, f: &mut ComplexField2D) -> Result<(), BpmError> {
        if f.grid != self.grid {
            return Err(BpmError::Field(crate::error::FieldError::GridMismatch));
        }
        let u = &mut f.values;
        self.sweep_x(u);
        self.sweep_y(u);
        self.sweep_x(u);
        if u.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(BpmError::NonFinite { step: 0 });
        }
        Ok(())
    }

    fn sweep_x(&self, u: &mut [Complex64]) {
        let nx = self.grid.nx;
        let ix2 = 1.0 / (self.grid.dx_um * self.grid.dx_um);
        let a = self.ax;
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        for (j, row) in u.chunks_mut(nx).enumerate() {
            let pot = &self.potential[j * nx..(j + 1) * nx];
            let (gl, gr) = match &self.edges {
                Edges::Dirichlet => (Ghost::Zero, Ghost::Zero),
                Edges::Periodic => (Ghost::Wrap, Ghost::Wrap),
                Edges::Ghost(g) => (Ghost::Scale(g.left[j]), Ghost::Scale(g.right[j])),
            };
            explicit_line(row, pot, a, ix2, gl, gr, &mut buf);
            self.x_solvers[j].solve_in_place(&mut buf);
            row.copy_from_slice(&buf);
        }
    }

    fn sweep_y(&self, u: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let iy2 = 1.0 / (self.grid.dy_um * self.grid.dy_um);
        let a = self.ay;
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        let mut pot = vec![Complex64::new(0.0, 0.0); ny];
        let mut buf = vec![Complex64::new(0.0, 0.0); ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = u[j * nx + i];
                pot[j] = self.potential[j * nx + i];
            }
            let (gb, gt) = match &self.edges {
                Edges::Dirichlet => (Ghost::Zero, Ghost::Zero),
                Edges::Periodic => (Ghost::Wrap, Ghost::Wrap),
                Edges::Ghost(g) => (Ghost::Scale(g.bottom[i]), Ghost::Scale(g.top[i])),
            };
            explicit_line(&col, &pot, a, iy2, gb, gt, &mut buf);
            self.y_solvers[i].solve_in_place(&mut buf);
            for j in 0..ny {
                u[j * nx + i] = buf[j];
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Ghost {
    Zero,
    Wrap,
    Scale(f64),
}

/// `out = (1 + a (D2 + V/2)) line`
fn explicit_line(
    line: &[Complex64],
    pot: &[Complex64],
    a: Complex64,
    ih2: f64,
    lo: Ghost,
    hi: Ghost,
    out: &mut [Complex64],
) {
    let n = line.len();
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let c = line[k];
        let left = if k > 0 {
            line[k - 1]
        } else {
            match lo {
                Ghost::Zero => zero,
                Ghost::Wrap => line[n - 1],
                Ghost::Scale(g) => g * c,
            }
        };
        let right = if k + 1 < n {
            line[k + 1]
        } else {
            match hi {
                Ghost::Zero => zero,
                Ghost::Wrap => line[0],
                Ghost::Scale(g) => g * c,
            }
        };
        out[k] = c + a * ((left + right - 2.0 * c) * ih2 + 0.5 * pot[k] * c);
    }
}

fn line_solver(diag: &[Complex64], off: Complex64, edges: &Edges) -> LineSolver {
    match edges {
        Edges::Periodic => LineSolver::Cyclic(CyclicThomas::new(diag, off)),
        _ => LineSolver::Open(Thomas::new(diag, off)),
    }
}

/// Callback invoked after every propagation step with the step index
/// (1-based), the distance travelled and a read-only view of the field.
pub trait Observer {
    fn observe(&mut self, step: usize, z_um: f64, field: &ComplexField2D);
}

impl<F: FnMut(usize, f64, &ComplexField2D)> Observer for F {
    fn observe(&mut self, step: usize, z_um: f64, field: &ComplexField2D) {
        self(step, z_um, field)
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _: usize, _: f64, _: &ComplexField2D) {}
}

pub fn propagate(
    stepper: &Stepper,
    f0: &ComplexField2D,
    n_steps: usize,
    observer: &mut dyn Observer,
) -> Result<ComplexField2D, BpmError> {
    if n_steps == 0 {
        return Err(BpmError::Config("n_steps must be at least 1".into()));
    }
    let dz = stepper.config.dz_um;
    let mut f = f0.clone();
    for s in 1..=n_steps {
        stepper.step_in_place(&mut f).map_err(|e| match e {
            BpmError::NonFinite { .. } => BpmError::NonFinite { step: s },
            other => other,
        })?;
        observer.observe(s, s as f64 * dz, &f);
    }
    Ok(f)
}
