//! Binary field dump ("PCF1", little-endian) and its lossy CSV variant.
//!
//! Layout: magic, u32 version, u32 nx, u32 ny, f64 dx, dy, x0, y0, then
//! nx*ny interleaved (re, im) f64 pairs, row-major with y outermost.

use num_complex::Complex64;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::IoError;
use crate::field::ComplexField2D;
use crate::geometry::Grid2D;

pub const MAGIC: [u8; 4] = *b"PCF1";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 4 + 4 * 3 + 8 * 4;

pub fn write_field_bytes(f: &ComplexField2D) -> Vec<u8> {
    let g = &f.grid;
    let mut out = Vec::with_capacity(HEADER_BYTES + 16 * g.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny as u32).to_le_bytes());
    for v in [g.dx_um, g.dy_um, g.x0_um, g.y0_um] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for z in &f.values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn read_field_bytes(b: &[u8]) -> Result<ComplexField2D, IoError> {
    if b.len() < 8 {
        return Err(IoError::Truncated {
            expected: HEADER_BYTES,
            actual: b.len(),
        });
    }
    let magic: [u8; 4] = b[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(IoError::Magic { found: magic });
    }
    let version = u32_at(b, 4);
    if version != VERSION {
        return Err(IoError::Version {
            found: version,
            expected: VERSION,
        });
    }
    if b.len() < HEADER_BYTES {
        return Err(IoError::Truncated {
            expected: HEADER_BYTES,
            actual: b.len(),
        });
    }
    let (nx, ny) = (u32_at(b, 8) as usize, u32_at(b, 12) as usize);
    let grid = Grid2D::new(
        nx,
        ny,
        f64_at(b, 16),
        f64_at(b, 24),
        f64_at(b, 32),
        f64_at(b, 40),
    )
    .map_err(|e| IoError::Header(e.to_string()))?;
    let expected = HEADER_BYTES + 16 * nx * ny;
    if b.len() != expected {
        return Err(IoError::Truncated {
            expected,
            actual: b.len(),
        });
    }
    let values = b[HEADER_BYTES..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Ok(ComplexField2D { grid, values })
}

pub fn write_field(path: &Path, f: &ComplexField2D) -> Result<(), IoError> {
    fs::write(path, write_field_bytes(f)).map_err(|e| IoError::at(path, e))
}

pub fn read_field(path: &Path) -> Result<ComplexField2D, IoError> {
    let b = fs::read(path).map_err(|e| IoError::at(path, e))?;
    read_field_bytes(&b)
}

/// Columns `x_um,y_um,re,im`, 17 significant digits. Not bit-exact for
/// every value; the binary dump is the canonical form.
pub fn write_field_csv(path: &Path, f: &ComplexField2D) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(|e| IoError::at(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let g = &f.grid;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "x_um,y_um,re,im")?;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let z = f.values[g.idx(i, j)];
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    g.x(i),
                    g.y(j),
                    z.re,
                    z.im
                )?;
            }
        }
        w.flush()
    };
    body().map_err(|e| IoError::at(path, e))
}
