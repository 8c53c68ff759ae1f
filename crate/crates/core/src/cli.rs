//! Command-line front end. [`run`] returns the process exit code: 0 on
//! success, 1 for configuration or usage errors (nothing written), 2 when
//! the computation ran but some modes failed to converge or a numerical
//! error stopped it.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::bpm::{propagate, Axis, BoundaryKind, Stepper};
use crate::field::{make_launch_field, ComplexField2D};
use crate::geometry::{hole_fraction, HoleShape, IndexProfile, PcfGeometry};
use crate::io::config::FieldFormat;
use crate::io::report::{self, Metadata, ModeRecord, ModeTable, RunInfo};
use crate::io::{write_field, write_field_csv, IoError, RunConfig};
use crate::modes::{
    apply_imaginary_beta_correction, solve_correlation, solve_imaginary_distance, Method,
    ModeSolution,
};
use crate::vparam::{
    fsm_index, sweep_v, sweep_values, Abscissa, FsmOptions, SweepSpec, VCurveKind,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pcfbpm",
    version,
    about = "Beam-propagation mode solver for photonic crystal fibers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for guided modes of the configured fiber.
    Solve { config: PathBuf },
    /// V-parameter curves, numeric (space-filling mode) or empirical fit.
    Vparam(VparamArgs),
    /// Rasterize the configured cross-section and write its index map.
    Geometry {
        config: PathBuf,
        /// Also write a PGM image.
        #[arg(long)]
        preview: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AbscissaArg {
    LambdaOverPitch,
    PitchOverLambda,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShapeArg {
    Circular,
    Square,
}

#[derive(Debug, Args)]
struct VparamArgs {
    #[arg(long, conflicts_with = "numeric", required_unless_present = "numeric")]
    empirical: bool,
    #[arg(long)]
    numeric: bool,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    d_over_pitch: String,
    /// `start:stop:step` over the abscissa. Defaults to 0.05:2.0:0.05 on
    /// lambda/pitch (empirical) or 0.5:10:0.5 on pitch/lambda (numeric).
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    #[arg(long, value_enum)]
    abscissa: Option<AbscissaArg>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Numeric curves: pitch in um (V_eff depends only on lambda/pitch).
    #[arg(long, default_value_t = 2.3)]
    pitch: f64,
    #[arg(long, value_enum, default_value = "circular")]
    hole_shape: ShapeArg,
    #[arg(long, default_value_t = 1.45)]
    n_background: f64,
    #[arg(long, default_value_t = 64)]
    cells_per_pitch: usize,
}

/// Parse `args` (program name first) and execute.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Solve { config } => cmd_solve(&config),
        Command::Vparam(a) => cmd_vparam(&a),
        Command::Geometry { config, preview } => cmd_geometry(&config, preview),
    }
}

fn config_error(e: impl std::fmt::Display) -> i32 {
    eprintln!("config error: {e}");
    EXIT_CONFIG
}

/// Load, resolve and rasterize: everything that can fail before compute.
fn prepare(path: &Path) -> Result<(RunConfig, PcfGeometry, IndexProfile), String> {
    let cfg = RunConfig::load(path).map_err(|e| e.to_string())?;
    let cfg = cfg.resolve().map_err(|e| e.to_string())?;
    let geom = cfg.pcf_geometry();
    let profile = cfg.index_profile().map_err(|e| e.to_string())?;
    Ok((cfg, geom, profile))
}

fn create_dir(dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::at(dir, e))
}

fn cmd_solve(path: &Path) -> i32 {
    let start = Instant::now();
    let (cfg, geom, profile) = match prepare(path) {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let axis = match cfg.solver.method {
        Method::ImaginaryDistance => Axis::ImaginaryDistance,
        Method::Correlation => Axis::RealDistance,
    };
    let pc = cfg.propagation_config(axis);
    if let Err(e) = Stepper::new(&profile, &pc)
        .and_then(|_| make_launch_field(&cfg.solver.launch, &profile.grid).map_err(Into::into))
    {
        return config_error(e);
    }
    let out = cfg.output.directory.clone();
    if let Err(e) = create_dir(&out) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }

    let mut diagnostics = Vec::new();
    if cfg.output.snapshot_every > 0 {
        if let Err(e) = write_snapshots(&cfg, &profile, axis) {
            diagnostics.push(format!("snapshots: {e}"));
        }
    }
    let cladding = if cfg.solver.flag_unguided {
        match fsm_index(&geom, pc.lambda_um, &FsmOptions::default()) {
            Ok(n) => Some(n),
            Err(e) => {
                diagnostics.push(format!("space-filling mode index unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };

    let solved: Result<(Vec<ModeSolution>, usize), String> = match cfg.solver.method {
        Method::ImaginaryDistance => {
            solve_imaginary_distance(&profile, &pc, &cfg.imaginary_options(cladding))
                .map(|s| (s.modes, s.relaunches))
                .map_err(|e| e.to_string())
        }
        Method::Correlation => solve_correlation(
            &profile,
            &pc,
            &cfg.solver.launch,
            &cfg.correlation_options(cladding),
        )
        .map(|o| {
            diagnostics.extend(o.diagnostics);
            (o.modes, 0)
        })
        .map_err(|e| e.to_string()),
    };
    let (mut modes, relaunches) = match solved {
        Ok(v) => v,
        Err(e) => {
            eprintln!("numerical failure: {e}");
            diagnostics.push(format!("numerical failure: {e}"));
            (Vec::new(), 0)
        }
    };
    if pc.boundary.kind == BoundaryKind::AbsorberRamp && pc.boundary.strength > 0.0 {
        for m in modes.iter_mut() {
            if let Err(e) = apply_imaginary_beta_correction(m, &profile, &pc.boundary, pc.k0()) {
                diagnostics.push(format!("mode {}: {e}", m.order));
            }
        }
    }

    let mut records = Vec::with_capacity(modes.len());
    for m in &modes {
        let stem = format!("mode_{}", m.order);
        let res = write_mode_files(&out, &stem, &m.field, &cfg.output.formats);
        if let Err(e) = res {
            eprintln!("error: {e}");
            return EXIT_PARTIAL;
        }
        records.push(ModeRecord::from_mode(m, format!("{stem}.pcf")));
        eprintln!(
            "mode {}: n_eff {:.8} residual {:.2e} steps {} {}",
            m.order,
            m.n_eff,
            m.residual,
            m.iterations,
            if m.converged {
                "converged"
            } else {
                "NOT converged"
            }
        );
    }
    let all_converged = modes.len() == cfg.solver.n_modes && modes.iter().all(|m| m.converged);
    for d in &diagnostics {
        eprintln!("note: {d}");
    }
    let meta = Metadata {
        run: RunInfo {
            program: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
            seed: cfg.solver.seed,
            modes_found: modes.len(),
            all_converged,
            cladding_index: cladding,
            relaunches,
            diagnostics,
        },
        config: cfg,
    };
    let written = report::write_mode_table(&out.join("modes.toml"), &ModeTable { mode: records })
        .and_then(|_| report::write_metadata(&out.join("metadata.toml"), &meta));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_PARTIAL;
    }
    if all_converged {
        EXIT_OK
    } else {
        eprintln!(
            "partial result: {} of {} modes converged",
            modes.iter().filter(|m| m.converged).count(),
            meta.config.solver.n_modes
        );
        EXIT_PARTIAL
    }
}

fn write_mode_files(
    dir: &Path,
    stem: &str,
    f: &ComplexField2D,
    formats: &[FieldFormat],
) -> Result<(), IoError> {
    // the binary dump is always written; it is the canonical form
    write_field(&dir.join(format!("{stem}.pcf")), f)?;
    if formats.contains(&FieldFormat::Csv) {
        write_field_csv(&dir.join(format!("{stem}.csv")), f)?;
    }
    Ok(())
}

fn write_snapshots(cfg: &RunConfig, profile: &IndexProfile, axis: Axis) -> Result<(), String> {
    let dir = cfg.output.directory.join("snapshots");
    create_dir(&dir).map_err(|e| e.to_string())?;
    let stepper =
        Stepper::new(profile, &cfg.propagation_config(axis)).map_err(|e| e.to_string())?;
    let f0 = make_launch_field(&cfg.solver.launch, &profile.grid).map_err(|e| e.to_string())?;
    let every = cfg.output.snapshot_every;
    let mut failure = None;
    let mut obs = |step: usize, _z: f64, f: &ComplexField2D| {
        if step % every == 0 && failure.is_none() {
            if let Err(e) = write_field(&dir.join(format!("step_{step:06}.pcf")), f) {
                failure = Some(e.to_string());
            }
        }
    };
    propagate(&stepper, &f0, cfg.output.snapshot_steps, &mut obs).map_err(|e| e.to_string())?;
    failure.map_or(Ok(()), Err)
}

fn cmd_geometry(path: &Path, preview: bool) -> i32 {
    let (cfg, geom, profile) = match prepare(path) {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let out = &cfg.output.directory;
    let res = create_dir(out)
        .and_then(|_| report::write_index_csv(&out.join("index.csv"), &profile))
        .and_then(|_| {
            if preview {
                report::write_index_pgm(
                    &out.join("index.pgm"),
                    &profile,
                    geom.n_hole,
                    geom.n_background,
                )
            } else {
                Ok(())
            }
        });
    if let Err(e) = res {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    println!(
        "holes {} fill_fraction {:.6} lattice_fill_fraction {:.6} grid {}x{}",
        geom.hole_count(),
        hole_fraction(&profile, geom.n_hole, geom.n_background),
        geom.lattice_fill_fraction(),
        profile.grid.nx,
        profile.grid.ny
    );
    EXIT_OK
}

/// `a:b:s` (inclusive) or `x,y,...`.
fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {t:?}"))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range {s:?} must be start:stop:step"));
        }
        sweep_values(num(parts[0])?, num(parts[1])?, num(parts[2])?).map_err(|e| e.to_string())
    } else {
        s.split(',').map(num).collect()
    }
}

fn cmd_vparam(a: &VparamArgs) -> i32 {
    let kind = if a.numeric {
        VCurveKind::NumericVeff
    } else {
        VCurveKind::EmpiricalV
    };
    let d = match parse_values(&a.d_over_pitch) {
        Ok(d) if !d.is_empty() => d,
        Ok(_) => return config_error("empty --d-over-pitch"),
        Err(e) => return config_error(e),
    };
    let abscissa = match (a.abscissa, kind) {
        (Some(AbscissaArg::LambdaOverPitch), _) => Abscissa::LambdaOverPitch,
        (Some(AbscissaArg::PitchOverLambda), _) => Abscissa::PitchOverLambda,
        (None, VCurveKind::EmpiricalV) => Abscissa::LambdaOverPitch,
        (None, VCurveKind::NumericVeff) => Abscissa::PitchOverLambda,
    };
    let sweep = a.sweep.clone().unwrap_or_else(|| match kind {
        VCurveKind::EmpiricalV => "0.05:2.0:0.05".into(),
        VCurveKind::NumericVeff => "0.5:10:0.5".into(),
    });
    let parts: Vec<f64> = match sweep
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
    {
        Ok(p) if p.len() == 3 => p,
        _ => return config_error(format!("--sweep {sweep:?} must be start:stop:step")),
    };
    if let Err(e) = sweep_values(parts[0], parts[1], parts[2]) {
        return config_error(e);
    }
    let shape = match a.hole_shape {
        ShapeArg::Circular => HoleShape::Circular,
        ShapeArg::Square => HoleShape::Square,
    };
    let template = PcfGeometry {
        n_background: a.n_background,
        ..PcfGeometry::silica_air(a.pitch, 0.0, shape)
    };
    if let Err(e) = template.validate() {
        return config_error(e);
    }
    if a.cells_per_pitch < 8 {
        return config_error("--cells-per-pitch must be at least 8");
    }
    let spec = SweepSpec {
        kind,
        d_over_pitch: d,
        start: parts[0],
        stop: parts[1],
        step: parts[2],
        abscissa,
        template,
        fsm: FsmOptions {
            cells_per_pitch: a.cells_per_pitch,
            ..FsmOptions::default()
        },
    };
    let curves = match sweep_v(&spec) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Err(e) = create_dir(&a.out).and_then(|_| report::write_sweep(&a.out, &curves)) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let failed: usize = curves
        .iter()
        .map(|c| c.points.iter().filter(|p| p.v.is_none()).count())
        .sum();
    eprintln!("{} curves written to {}", curves.len(), a.out.display());
    if failed > 0 {
        eprintln!("{failed} points failed; see the error column");
        return EXIT_PARTIAL;
    }
    EXIT_OK
}
