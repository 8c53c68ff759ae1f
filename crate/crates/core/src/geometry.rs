//! Hexagonal-lattice fiber cross-sections and their rasterization onto
//! uniform grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::GeometryError;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoleShape {
    Circular,
    Square,
}

/// Hexagonal PCF cross-section. `hole_diameter_um` is the hole diameter
/// (circular) or the side length (square).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcfGeometry {
    pub pitch_um: f64,
    pub hole_diameter_um: f64,
    pub hole_shape: HoleShape,
    pub rings: usize,
    pub core_defect: bool,
    pub n_background: f64,
    pub n_hole: f64,
}

impl PcfGeometry {
    /// Silica/air structure with the default ring count.
    pub fn silica_air(pitch_um: f64, hole_diameter_um: f64, hole_shape: HoleShape) -> Self {
        Self {
            pitch_um,
            hole_diameter_um,
            hole_shape,
            rings: 4,
            core_defect: true,
            n_background: 1.45,
            n_hole: 1.0,
        }
    }

    pub fn d_over_pitch(&self) -> f64 {
        self.hole_diameter_um / self.pitch_um
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.pitch_um > 0.0 && self.pitch_um.is_finite()) {
            return Err(GeometryError::Invalid(format!(
                "pitch must be positive, got {}",
                self.pitch_um
            )));
        }
        if !(self.hole_diameter_um >= 0.0 && self.hole_diameter_um.is_finite()) {
            return Err(GeometryError::Invalid(format!(
                "hole size must be non-negative, got {}",
                self.hole_diameter_um
            )));
        }
        // Square holes on a triangular lattice touch along the 60 degree
        // neighbour direction once the side exceeds pitch*sqrt(3)/2.
        let limit = match self.hole_shape {
            HoleShape::Circular => self.pitch_um,
            HoleShape::Square => self.pitch_um * SQRT3 / 2.0,
        };
        if self.hole_diameter_um >= limit {
            return Err(GeometryError::Overlap {
                d: self.hole_diameter_um,
                limit,
            });
        }
        if !(self.n_background > self.n_hole && self.n_hole > 0.0) {
            return Err(GeometryError::Invalid(format!(
                "need n_background > n_hole > 0, got {} and {}",
                self.n_background, self.n_hole
            )));
        }
        if self.rings < 1 {
            return Err(GeometryError::Invalid("rings must be at least 1".into()));
        }
        Ok(())
    }

    /// Half extents (x, y) of the hole region measured from the origin.
    pub fn extent_um(&self) -> (f64, f64) {
        let r = self.rings as f64;
        let half = 0.5 * self.hole_diameter_um;
        (
            r * self.pitch_um + half,
            r * self.pitch_um * SQRT3 / 2.0 + half,
        )
    }

    pub fn hole_count(&self) -> usize {
        3 * self.rings * (self.rings + 1) + usize::from(!self.core_defect)
    }

    /// Air (hole) area fraction of the infinite lattice.
    pub fn lattice_fill_fraction(&self) -> f64 {
        let r = self.d_over_pitch();
        match self.hole_shape {
            HoleShape::Circular => PI / (2.0 * SQRT3) * r * r,
            HoleShape::Square => 2.0 / SQRT3 * r * r,
        }
    }
}

/// Uniform cell-centred grid. Sample `(i, j)` sits at
/// `(x0 + (i + 1/2) dx, y0 + (j + 1/2) dy)`; storage is row-major with y outer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub dx_um: f64,
    pub dy_um: f64,
    pub x0_um: f64,
    pub y0_um: f64,
}

impl Grid2D {
    pub fn new(
        nx: usize,
        ny: usize,
        dx_um: f64,
        dy_um: f64,
        x0_um: f64,
        y0_um: f64,
    ) -> Result<Self, GeometryError> {
        let g = Self {
            nx,
            ny,
            dx_um,
            dy_um,
            x0_um,
            y0_um,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid whose window is centred on the origin.
    pub fn centered(nx: usize, ny: usize, dx_um: f64, dy_um: f64) -> Result<Self, GeometryError> {
        Self::new(
            nx,
            ny,
            dx_um,
            dy_um,
            -0.5 * nx as f64 * dx_um,
            -0.5 * ny as f64 * dy_um,
        )
    }

    /// Square-celled window of at least `width_um` x `height_um`, centred.
    pub fn covering(width_um: f64, height_um: f64, dx_um: f64) -> Result<Self, GeometryError> {
        let nx = (width_um / dx_um).ceil().max(8.0) as usize;
        let ny = (height_um / dx_um).ceil().max(8.0) as usize;
        Self::centered(nx, ny, dx_um, dx_um)
    }

    /// Window around a PCF with `margin_um` of background beyond the outer
    /// holes plus `absorber_cells` of boundary layer on every side.
    pub fn for_geometry(
        geom: &PcfGeometry,
        dx_um: f64,
        margin_um: f64,
        absorber_cells: usize,
    ) -> Result<Self, GeometryError> {
        let (hx, hy) = geom.extent_um();
        let pad = margin_um + absorber_cells as f64 * dx_um;
        let half = hx.max(hy) + pad;
        Self::covering(2.0 * half, 2.0 * half, dx_um)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.nx < 8 || self.ny < 8 {
            return Err(GeometryError::Invalid(format!(
                "grid must be at least 8x8, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.dx_um > 0.0
            && self.dy_um > 0.0
            && self.dx_um.is_finite()
            && self.dy_um.is_finite())
        {
            return Err(GeometryError::Invalid(
                "grid spacing must be positive".into(),
            ));
        }
        if !(self.x0_um.is_finite() && self.y0_um.is_finite()) {
            return Err(GeometryError::Invalid("grid origin must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0_um + (i as f64 + 0.5) * self.dx_um
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0_um + (j as f64 + 0.5) * self.dy_um
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn width_um(&self) -> f64 {
        self.nx as f64 * self.dx_um
    }

    pub fn height_um(&self) -> f64 {
        self.ny as f64 * self.dy_um
    }

    pub fn cell_area(&self) -> f64 {
        self.dx_um * self.dy_um
    }
}

/// Refractive-index samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexProfile {
    pub grid: Grid2D,
    pub n: Vec<f64>,
}

impl IndexProfile {
    pub fn uniform(grid: Grid2D, n: f64) -> Self {
        Self {
            grid,
            n: vec![n; grid.len()],
        }
    }

    /// Profile sampled from a closure of (x, y).
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut n = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                n.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, n }
    }

    /// Circular step-index fiber with permittivity-averaged boundary cells.
    pub fn step_index(
        grid: Grid2D,
        core_radius_um: f64,
        n_core: f64,
        n_clad: f64,
        subsamples: usize,
    ) -> Self {
        let hole = Hole {
            x: 0.0,
            y: 0.0,
            shape: HoleShape::Circular,
            size: 2.0 * core_radius_um,
        };
        let frac = coverage(&grid, std::slice::from_ref(&hole), subsamples, false);
        let n = frac.iter().map(|&f| mix_index(f, n_core, n_clad)).collect();
        Self { grid, n }
    }

    pub fn min(&self) -> f64 {
        self.n.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.n.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.n[self.grid.idx(i, j)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub x: f64,
    pub y: f64,
    pub shape: HoleShape,
    pub size: f64,
}

impl Hole {
    #[inline]
    fn contains(&self, px: f64, py: f64) -> bool {
        let (dx, dy) = (px - self.x, py - self.y);
        let h = 0.5 * self.size;
        match self.shape {
            HoleShape::Circular => dx * dx + dy * dy <= h * h,
            HoleShape::Square => dx.abs() <= h && dy.abs() <= h,
        }
    }

    fn half_extent(&self) -> f64 {
        0.5 * self.size
    }
}

/// Hole placements of `rings` complete hexagonal rings around the origin.
/// Ring r holds the 6r lattice sites at hexagonal distance r.
pub fn build_hex_lattice(geom: &PcfGeometry) -> Result<Vec<Hole>, GeometryError> {
    geom.validate()?;
    let r = geom.rings as i64;
    let mut sites: Vec<(i64, f64, f64)> = Vec::with_capacity(geom.hole_count());
    for a in -r..=r {
        for b in -r..=r {
            let ring = a.abs().max(b.abs()).max((a + b).abs());
            if ring > r || (ring == 0 && geom.core_defect) {
                continue;
            }
            let x = geom.pitch_um * (a as f64 + 0.5 * b as f64);
            let y = geom.pitch_um * SQRT3 / 2.0 * b as f64;
            sites.push((ring, x, y));
        }
    }
    sites.sort_by(|p, q| {
        p.0.cmp(&q.0).then_with(|| {
            let ap = p.2.atan2(p.1).rem_euclid(2.0 * PI);
            let aq = q.2.atan2(q.1).rem_euclid(2.0 * PI);
            ap.total_cmp(&aq)
        })
    });
    Ok(sites
        .into_iter()
        .map(|(_, x, y)| Hole {
            x,
            y,
            shape: geom.hole_shape,
            size: geom.hole_diameter_um,
        })
        .collect())
}

#[inline]
fn mix_index(frac: f64, n_in: f64, n_out: f64) -> f64 {
    if frac <= 0.0 {
        n_out
    } else if frac >= 1.0 {
        n_in
    } else {
        (frac * n_in * n_in + (1.0 - frac) * n_out * n_out).sqrt()
    }
}

/// Fraction of each cell covered by holes, from `s x s` point sampling.
fn coverage(grid: &Grid2D, holes: &[Hole], s: usize, periodic: bool) -> Vec<f64> {
    let s = s.max(1);
    let inv = 1.0 / (s * s) as f64;
    let (w, h) = (grid.width_um(), grid.height_um());
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(grid.nx)
        .enumerate()
        .for_each(|(j, row)| {
            let yc = grid.y(j);
            let row_holes: Vec<&Hole> = holes
                .iter()
                .filter(|hl| {
                    let reach = hl.half_extent() + grid.dy_um;
                    let mut dy = (hl.y - yc).abs();
                    if periodic {
                        dy = dy.min(h - dy);
                    }
                    dy <= reach
                })
                .collect();
            if row_holes.is_empty() {
                return;
            }
            for (i, cell) in row.iter_mut().enumerate() {
                let xc = grid.x(i);
                let mut count = 0usize;
                for hl in &row_holes {
                    let mut dx = hl.x - xc;
                    if periodic {
                        dx -= w * (dx / w).round();
                    }
                    if dx.abs() > hl.half_extent() + grid.dx_um {
                        continue;
                    }
                    let mut dyc = hl.y - yc;
                    if periodic {
                        dyc -= h * (dyc / h).round();
                    }
                    let local = Hole {
                        x: xc + dx,
                        y: yc + dyc,
                        ..**hl
                    };
                    for q in 0..s {
                        let py = yc + ((q as f64 + 0.5) / s as f64 - 0.5) * grid.dy_um;
                        for p in 0..s {
                            let px = xc + ((p as f64 + 0.5) / s as f64 - 0.5) * grid.dx_um;
                            if local.contains(px, py) {
                                count += 1;
                            }
                        }
                    }
                }
                *cell = (count as f64 * inv).min(1.0);
            }
        });
    out
}

/// Rasterize holes onto `grid`. Each cell stores
/// `sqrt(f n_hole^2 + (1 - f) n_background^2)` with `f` the covered area fraction.
pub fn rasterize_index(
    holes: &[Hole],
    geom: &PcfGeometry,
    grid: &Grid2D,
    subsamples: usize,
) -> Result<IndexProfile, GeometryError> {
    grid.validate()?;
    let (xmin, xmax) = (grid.x0_um, grid.x0_um + grid.width_um());
    let (ymin, ymax) = (grid.y0_um, grid.y0_um + grid.height_um());
    for hl in holes {
        let e = hl.half_extent();
        if hl.x - e < xmin || hl.x + e > xmax || hl.y - e < ymin || hl.y + e > ymax {
            return Err(GeometryError::OutsideWindow { x: hl.x, y: hl.y });
        }
    }
    rasterize_clipped(holes, geom, grid, subsamples)
}

/// As [`rasterize_index`], but holes may extend past the window; only the
/// part inside it is drawn.
pub fn rasterize_clipped(
    holes: &[Hole],
    geom: &PcfGeometry,
    grid: &Grid2D,
    subsamples: usize,
) -> Result<IndexProfile, GeometryError> {
    grid.validate()?;
    let frac = coverage(grid, holes, subsamples, false);
    let n = frac
        .iter()
        .map(|&f| mix_index(f, geom.n_hole, geom.n_background))
        .collect();
    Ok(IndexProfile { grid: *grid, n })
}

/// Largest centred square window whose corners stay inside the hexagon of
/// outermost hole centres. Apart from the core, every silica region in it is
/// bounded by holes or the window edge, so no outer-jacket modes exist.
pub fn lattice_window(geom: &PcfGeometry, dx_um: f64) -> Result<Grid2D, GeometryError> {
    geom.validate()?;
    let r = geom.rings as f64 * geom.pitch_um;
    let half = SQRT3 * r / (SQRT3 + 1.0);
    Grid2D::covering(2.0 * half, 2.0 * half, dx_um)
}

/// Pitches across and lattice rows down the supercell for `rings`: the
/// width is `(rings + 1)` pitches and the row count is even so the lattice
/// tiles it, chosen to make the cell roughly square.
fn supercell_shape(geom: &PcfGeometry) -> (usize, usize) {
    let cols = geom.rings + 1;
    let rows = 2 * ((cols as f64 / SQRT3).round() as usize).max(1);
    (cols, rows)
}

/// Periodic supercell grid centred on the core, for use with periodic
/// edges. Sample spacing is adjusted slightly so that whole cells fit.
pub fn supercell_grid(geom: &PcfGeometry, dx_um: f64) -> Result<Grid2D, GeometryError> {
    geom.validate()?;
    if !(dx_um > 0.0) {
        return Err(GeometryError::Invalid(format!(
            "sample spacing must be positive, got {dx_um}"
        )));
    }
    let (cols, rows) = supercell_shape(geom);
    let w = cols as f64 * geom.pitch_um;
    let h = rows as f64 * geom.pitch_um * SQRT3 / 2.0;
    let nx = ((w / dx_um).round() as usize).max(8);
    let ny = ((h / dx_um).round() as usize).max(8);
    Grid2D::new(nx, ny, w / nx as f64, h / ny as f64, -0.5 * w, -0.5 * h)
}

/// Hexagonal fiber repeated periodically: every lattice site of the
/// supercell carries a hole except the core. Its images sit one supercell
/// away, so the window never cuts the cladding and there is no jacket.
pub fn periodic_supercell(
    geom: &PcfGeometry,
    dx_um: f64,
    subsamples: usize,
) -> Result<IndexProfile, GeometryError> {
    let grid = supercell_grid(geom, dx_um)?;
    let (cols, rows) = supercell_shape(geom);
    let (w, h) = (grid.width_um(), grid.height_um());
    let eps = 1e-9 * geom.pitch_um;
    let mut holes = Vec::new();
    let (cols, rows) = (cols as i64, rows as i64);
    for b in -rows..=rows {
        for a in -2 * cols..=2 * cols {
            if a == 0 && b == 0 && geom.core_defect {
                continue;
            }
            let x = geom.pitch_um * (a as f64 + 0.5 * b as f64);
            let y = geom.pitch_um * SQRT3 / 2.0 * b as f64;
            // half-open so that each site appears once
            if x >= -0.5 * w - eps && x < 0.5 * w - eps && y >= -0.5 * h - eps && y < 0.5 * h - eps
            {
                holes.push(Hole {
                    x,
                    y,
                    shape: geom.hole_shape,
                    size: geom.hole_diameter_um,
                });
            }
        }
    }
    let frac = if geom.hole_diameter_um > 0.0 {
        coverage(&grid, &holes, subsamples, true)
    } else {
        vec![0.0; grid.len()]
    };
    let n = frac
        .iter()
        .map(|&f| mix_index(f, geom.n_hole, geom.n_background))
        .collect();
    Ok(IndexProfile { grid, n })
}

/// Rectangular unit cell (pitch x pitch*sqrt(3)) of the infinite lattice,
/// centred on a hole, with quarter holes at the corners. Meant for periodic
/// boundaries in both directions.
pub fn periodic_cladding_cell(
    geom: &PcfGeometry,
    cells_per_pitch: usize,
    subsamples: usize,
) -> Result<IndexProfile, GeometryError> {
    geom.validate()?;
    let nx = cells_per_pitch.max(8);
    let height = geom.pitch_um * SQRT3;
    let ny = ((nx as f64) * SQRT3).round() as usize;
    let grid = Grid2D::new(
        nx,
        ny,
        geom.pitch_um / nx as f64,
        height / ny as f64,
        -0.5 * geom.pitch_um,
        -0.5 * height,
    )?;
    let holes: Vec<Hole> = [(0.0, 0.0), (0.5 * geom.pitch_um, 0.5 * height)]
        .iter()
        .map(|&(x, y)| Hole {
            x,
            y,
            shape: geom.hole_shape,
            size: geom.hole_diameter_um,
        })
        .collect();
    let frac = if geom.hole_diameter_um > 0.0 {
        coverage(&grid, &holes, subsamples, true)
    } else {
        vec![0.0; grid.len()]
    };
    let n = frac
        .iter()
        .map(|&f| mix_index(f, geom.n_hole, geom.n_background))
        .collect();
    Ok(IndexProfile { grid, n })
}

/// Air area fraction implied by a profile (inverts the permittivity mix).
pub fn hole_fraction(profile: &IndexProfile, n_hole: f64, n_background: f64) -> f64 {
    let (eh, eb) = (n_hole * n_hole, n_background * n_background);
    let total: f64 = profile.n.iter().map(|&n| (eb - n * n) / (eb - eh)).sum();
    total / profile.n.len() as f64
}
