//! Complex scalar fields, inner products and the variational propagation
//! constant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::geometry::{Grid2D, IndexProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
}

impl ComplexField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: Complex64, other: &ComplexField2D) -> Result<(), FieldError> {
        check_grid(&self.grid, &other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// Rotate the global phase so the largest-magnitude sample is real positive.
    pub fn fix_phase(&mut self) {
        let peak = self
            .values
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or_default();
        if peak.norm() > 0.0 {
            let rot = peak.conj() / peak.norm();
            self.scale(rot);
        }
    }
}

pub(crate) fn check_grid(a: &Grid2D, b: &Grid2D) -> Result<(), FieldError> {
    if a == b {
        Ok(())
    } else {
        Err(FieldError::GridMismatch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaunchKind {
    Gaussian,
    PlaneWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchSpec {
    pub kind: LaunchKind,
    pub center_um: (f64, f64),
    /// 1/e field radius of the Gaussian.
    pub waist_um: f64,
}

impl LaunchSpec {
    pub fn gaussian(x: f64, y: f64, waist_um: f64) -> Self {
        Self {
            kind: LaunchKind::Gaussian,
            center_um: (x, y),
            waist_um,
        }
    }

    pub fn plane_wave() -> Self {
        Self {
            kind: LaunchKind::PlaneWave,
            center_um: (0.0, 0.0),
            waist_um: 1.0,
        }
    }
}

/// Unit-power launch field.
pub fn make_launch_field(spec: &LaunchSpec, grid: &Grid2D) -> Result<ComplexField2D, FieldError> {
    if !(spec.waist_um > 0.0) {
        return Err(FieldError::InvalidLaunch(format!(
            "waist must be positive, got {}",
            spec.waist_um
        )));
    }
    let field = match spec.kind {
        LaunchKind::Gaussian => {
            let min = 2.0 * grid.dx_um.max(grid.dy_um);
            if spec.waist_um < min {
                return Err(FieldError::Unresolved {
                    waist: spec.waist_um,
                    min,
                });
            }
            let (x0, y0) = spec.center_um;
            let w2 = spec.waist_um * spec.waist_um;
            ComplexField2D::from_fn(*grid, |x, y| {
                let r2 = (x - x0) * (x - x0) + (y - y0) * (y - y0);
                Complex64::new((-r2 / w2).exp(), 0.0)
            })
        }
        LaunchKind::PlaneWave => ComplexField2D {
            grid: *grid,
            values: vec![Complex64::new(1.0, 0.0); grid.len()],
        },
    };
    normalize(&field)
}

/// `sum conj(a) b dx dy`
pub fn inner_product(a: &ComplexField2D, b: &ComplexField2D) -> Result<Complex64, FieldError> {
    check_grid(&a.grid, &b.grid)?;
    Ok(dot(&a.values, &b.values) * a.grid.cell_area())
}

#[inline]
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

pub fn power(f: &ComplexField2D) -> f64 {
    f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid.cell_area()
}

pub fn normalize(f: &ComplexField2D) -> Result<ComplexField2D, FieldError> {
    let mut out = f.clone();
    normalize_in_place(&mut out)?;
    Ok(out)
}

pub fn normalize_in_place(f: &mut ComplexField2D) -> Result<(), FieldError> {
    let p = power(f);
    if !(p > 0.0) || !p.is_finite() {
        return Err(FieldError::ZeroField);
    }
    f.scale(Complex64::new(1.0 / p.sqrt(), 0.0));
    Ok(())
}

/// Per-edge-cell ghost factors: the value beyond the window is
/// `factor * edge sample`. Zero factors are Dirichlet walls.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostFactors {
    /// i = 0 side, one entry per row
    pub left: Vec<f64>,
    /// i = nx-1 side, one entry per row
    pub right: Vec<f64>,
    /// j = 0 side, one entry per column
    pub bottom: Vec<f64>,
    /// j = ny-1 side, one entry per column
    pub top: Vec<f64>,
}

impl GhostFactors {
    /// Ghosts for a field decaying as `exp(-gamma r)` outside the window, with
    /// `gamma^2 = beta^2 - k0^2 n_edge^2` clamped at zero.
    pub fn decay(profile: &IndexProfile, k0: f64, beta: f64) -> Self {
        let g = &profile.grid;
        let factor = |n: f64, h: f64| {
            let gamma2 = beta * beta - k0 * k0 * n * n;
            (-(gamma2.max(0.0)).sqrt() * h).exp()
        };
        Self {
            left: (0..g.ny)
                .map(|j| factor(profile.at(0, j), g.dx_um))
                .collect(),
            right: (0..g.ny)
                .map(|j| factor(profile.at(g.nx - 1, j), g.dx_um))
                .collect(),
            bottom: (0..g.nx)
                .map(|i| factor(profile.at(i, 0), g.dy_um))
                .collect(),
            top: (0..g.nx)
                .map(|i| factor(profile.at(i, g.ny - 1), g.dy_um))
                .collect(),
        }
    }
}

/// Treatment of the samples just beyond the window.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Edges {
    #[default]
    Dirichlet,
    Periodic,
    Ghost(GhostFactors),
}

/// Five-point Laplacian.
pub fn laplacian(f: &ComplexField2D, edges: &Edges) -> Vec<Complex64> {
    let g = &f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (ix2, iy2) = (1.0 / (g.dx_um * g.dx_um), 1.0 / (g.dy_um * g.dy_um));
    let u = &f.values;
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let c = u[k];
            let left = if i > 0 {
                u[k - 1]
            } else {
                match edges {
                    Edges::Dirichlet => zero,
                    Edges::Periodic => u[k + nx - 1],
                    Edges::Ghost(gf) => c * gf.left[j],
                }
            };
            let right = if i + 1 < nx {
                u[k + 1]
            } else {
                match edges {
                    Edges::Dirichlet => zero,
                    Edges::Periodic => u[k + 1 - nx],
                    Edges::Ghost(gf) => c * gf.right[j],
                }
            };
            let down = if j > 0 {
                u[k - nx]
            } else {
                match edges {
                    Edges::Dirichlet => zero,
                    Edges::Periodic => u[k + (ny - 1) * nx],
                    Edges::Ghost(gf) => c * gf.bottom[i],
                }
            };
            let up = if j + 1 < ny {
                u[k + nx]
            } else {
                match edges {
                    Edges::Dirichlet => zero,
                    Edges::Periodic => u[i],
                    Edges::Ghost(gf) => c * gf.top[i],
                }
            };
            out[k] = (left + right - 2.0 * c) * ix2 + (down + up - 2.0 * c) * iy2;
        }
    }
    out
}

/// Complex `<phi, (lap + k0^2 eps) phi> / <phi, phi>` with `eps` the
/// (possibly complex) relative permittivity per sample.
pub fn rayleigh_quotient_complex(
    f: &ComplexField2D,
    eps: &[Complex64],
    k0: f64,
    edges: &Edges,
) -> Result<Complex64, FieldError> {
    if eps.len() != f.values.len() {
        return Err(FieldError::GridMismatch);
    }
    let lap = laplacian(f, edges);
    let k02 = k0 * k0;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for ((u, l), e) in f.values.iter().zip(&lap).zip(eps) {
        num += u.conj() * (l + k02 * e * u);
        den += u.norm_sqr();
    }
    if !(den > 0.0) {
        return Err(FieldError::ZeroField);
    }
    Ok(num / den)
}

/// Real part of the variational beta^2 with zero-Dirichlet edges.
pub fn rayleigh_quotient_beta2(
    f: &ComplexField2D,
    profile: &IndexProfile,
    k0: f64,
) -> Result<f64, FieldError> {
    rayleigh_quotient_beta2_with(f, profile, k0, &Edges::Dirichlet)
}

pub fn rayleigh_quotient_beta2_with(
    f: &ComplexField2D,
    profile: &IndexProfile,
    k0: f64,
    edges: &Edges,
) -> Result<f64, FieldError> {
    check_grid(&f.grid, &profile.grid)?;
    let lap = laplacian(f, edges);
    let k02 = k0 * k0;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((u, l), n) in f.values.iter().zip(&lap).zip(&profile.n) {
        num += (u.conj() * (l + k02 * n * n * u)).re;
        den += u.norm_sqr();
    }
    if !(den > 0.0) {
        return Err(FieldError::ZeroField);
    }
    Ok(num / den)
}

/// `||(lap + k0^2 n^2 - beta2) phi|| / ||phi||`
pub fn eigen_residual(
    f: &ComplexField2D,
    profile: &IndexProfile,
    k0: f64,
    beta2: f64,
    edges: &Edges,
) -> f64 {
    let lap = laplacian(f, edges);
    let k02 = k0 * k0;
    let mut r = 0.0;
    let mut den = 0.0;
    for ((u, l), n) in f.values.iter().zip(&lap).zip(&profile.n) {
        r += (l + (k02 * n * n - beta2) * u).norm_sqr();
        den += u.norm_sqr();
    }
    (r / den).sqrt()
}
