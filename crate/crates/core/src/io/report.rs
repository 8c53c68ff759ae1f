//! Text outputs: mode table, run metadata, index maps and V sweeps.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use super::{IoError, RunConfig};
use crate::geometry::IndexProfile;
use crate::modes::{Method, ModeSolution};
use crate::vparam::{Crossing, VCurve, VCurveKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRecord {
    pub order: usize,
    pub n_eff: f64,
    pub beta_per_um: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_imag_per_um: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
    pub converged: bool,
    pub guided: bool,
    pub field_file: String,
}

impl ModeRecord {
    pub fn from_mode(m: &ModeSolution, field_file: String) -> Self {
        Self {
            order: m.order,
            n_eff: m.n_eff,
            beta_per_um: m.beta_per_um,
            beta_imag_per_um: m.beta_imag_per_um,
            residual: m.residual,
            iterations: m.iterations,
            method: m.method,
            converged: m.converged,
            guided: m.guided,
            field_file,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTable {
    pub mode: Vec<ModeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub program: String,
    pub version: String,
    pub wall_time_s: f64,
    pub seed: u64,
    pub modes_found: usize,
    pub all_converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cladding_index: Option<f64>,
    pub relaunches: usize,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// `run` plus the fully resolved input under `config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub run: RunInfo,
    pub config: RunConfig,
}

fn to_toml<T: Serialize>(v: &T) -> Result<String, IoError> {
    toml::to_string(v).map_err(|e| IoError::Serialize(e.to_string()))
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::at(path, e))
}

pub fn write_mode_table(path: &Path, table: &ModeTable) -> Result<(), IoError> {
    write_text(path, &to_toml(table)?)
}

pub fn read_mode_table(path: &Path) -> Result<ModeTable, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
    toml::from_str(&text).map_err(|e| IoError::Serialize(e.to_string()))
}

pub fn write_metadata(path: &Path, meta: &Metadata) -> Result<(), IoError> {
    write_text(path, &to_toml(meta)?)
}

pub fn read_metadata(path: &Path) -> Result<Metadata, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
    toml::from_str(&text).map_err(|e| IoError::Config(e.to_string()))
}

/// Columns `x_um,y_um,n`.
pub fn index_csv(profile: &IndexProfile) -> String {
    let g = &profile.grid;
    let mut s = String::with_capacity(40 * g.len());
    s.push_str("x_um,y_um,n\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let _ = writeln!(s, "{:.6},{:.6},{:.12}", g.x(i), g.y(j), profile.at(i, j));
        }
    }
    s
}

/// Plain (P2) graymap, top row at largest y. Background is white, holes
/// black, partial cells in between.
pub fn index_pgm(profile: &IndexProfile, n_hole: f64, n_background: f64) -> String {
    let g = &profile.grid;
    let mut s = format!("P2\n{} {}\n255\n", g.nx, g.ny);
    let span = n_background - n_hole;
    for j in (0..g.ny).rev() {
        let row: Vec<String> = (0..g.nx)
            .map(|i| {
                let t = if span != 0.0 {
                    (profile.at(i, j) - n_hole) / span
                } else {
                    1.0
                };
                ((t.clamp(0.0, 1.0) * 255.0).round() as u8).to_string()
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_index_csv(path: &Path, profile: &IndexProfile) -> Result<(), IoError> {
    write_text(path, &index_csv(profile))
}

pub fn write_index_pgm(
    path: &Path,
    profile: &IndexProfile,
    n_hole: f64,
    n_background: f64,
) -> Result<(), IoError> {
    write_text(path, &index_pgm(profile, n_hole, n_background))
}

pub fn curve_file_name(curve: &VCurve) -> String {
    let kind = match curve.kind {
        VCurveKind::EmpiricalV => "empirical",
        VCurveKind::NumericVeff => "numeric",
    };
    format!("v_{kind}_d{:.3}.csv", curve.d_over_pitch)
}

fn abscissa_name(curve: &VCurve) -> &'static str {
    match curve.abscissa {
        crate::vparam::Abscissa::LambdaOverPitch => "lambda_over_pitch",
        crate::vparam::Abscissa::PitchOverLambda => "pitch_over_lambda",
    }
}

/// Columns `<abscissa>,v,error`; failed points leave `v` empty.
pub fn curve_csv(curve: &VCurve) -> String {
    let mut s = format!("{},v,error\n", abscissa_name(curve));
    for p in &curve.points {
        let v = p.v.map(|v| format!("{v:.10}")).unwrap_or_default();
        let e = p.error.as_deref().unwrap_or("").replace(',', ";");
        let _ = writeln!(s, "{:.10},{v},{e}", p.abscissa);
    }
    s
}

/// One row per curve: where V crosses the single-mode cutoff, if it does.
pub fn crossings_csv(curves: &[VCurve]) -> String {
    let mut s = String::from("kind,d_over_pitch,abscissa,crossing,uncertainty\n");
    for c in curves {
        let kind = match c.kind {
            VCurveKind::EmpiricalV => "empirical",
            VCurveKind::NumericVeff => "numeric",
        };
        let (x, u) = match c.crossing {
            Crossing::At {
                abscissa,
                uncertainty,
            } => (format!("{abscissa:.6}"), format!("{uncertainty:.6}")),
            Crossing::Never => ("never".to_string(), String::new()),
        };
        let _ = writeln!(
            s,
            "{kind},{:.4},{},{x},{u}",
            c.d_over_pitch,
            abscissa_name(c)
        );
    }
    s
}

pub fn write_sweep(dir: &Path, curves: &[VCurve]) -> Result<Vec<std::path::PathBuf>, IoError> {
    let mut written = Vec::with_capacity(curves.len() + 1);
    for c in curves {
        let p = dir.join(curve_file_name(c));
        write_text(&p, &curve_csv(c))?;
        written.push(p);
    }
    let p = dir.join("crossings.csv");
    write_text(&p, &crossings_csv(curves))?;
    written.push(p);
    Ok(written)
}
