//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines appear in order on standard output. Set `PCF_ACCEPTANCE` to a
//! comma-separated list of criterion numbers to run a subset.

mod common;

use std::time::Instant;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pcfbpm::bpm::{propagate, Axis, BoundarySpec, PropagationConfig, Stepper};
use pcfbpm::field::{inner_product, make_launch_field, power, ComplexField2D, LaunchSpec};
use pcfbpm::geometry::{Grid2D, HoleShape, IndexProfile, PcfGeometry};
use pcfbpm::io::{read_field, RunConfig};
use pcfbpm::modes::{
    paraxial_to_helmholtz, solve_correlation, solve_imaginary_distance, CorrelationOptions,
    ImaginaryDistanceOptions, ModeSet,
};
use pcfbpm::vparam::{
    empirical_coeffs, empirical_v, fsm_index, sweep_v, v_eff, v_number, Abscissa, FsmOptions,
    StepFiberSpec, SweepSpec, VCurveKind, SINGLE_MODE_CUTOFF,
};

/// Criteria that cannot pass as specified; each has a ledger entry.
const KNOWN_DEVIATIONS: &[u32] = &[3, 5, 7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- fixtures

struct StepIndex {
    profile: IndexProfile,
    a_um: f64,
    n_co: f64,
    n_cl: f64,
    lambda_um: f64,
}

fn step_index() -> StepIndex {
    let (a_um, n_co, n_cl, lambda_um) = (4.1, 1.45, 1.444, 1.55);
    let grid = Grid2D::centered(240, 240, 0.05, 0.05).unwrap();
    StepIndex {
        profile: IndexProfile::step_index(grid, a_um, n_co, n_cl, 8),
        a_um,
        n_co,
        n_cl,
        lambda_um,
    }
}

fn step_index_imaginary(s: &StepIndex) -> ModeSet {
    let cfg = PropagationConfig {
        lambda_um: s.lambda_um,
        dz_um: 1.0,
        n_ref: s.n_co,
        boundary: BoundarySpec::decay(),
        axis: Axis::ImaginaryDistance,
    };
    let opts = ImaginaryDistanceOptions {
        launch: LaunchSpec::gaussian(0.0, 0.0, 3.0),
        ..Default::default()
    };
    solve_imaginary_distance(&s.profile, &cfg, &opts).unwrap()
}

/// Hexagonal fiber as the command-line tool builds it. `Lattice`: window
/// inside the outer ring, clipped holes, zero-strength ramp (field vanishes
/// beyond the window). `Supercell`: the cladding tiles a periodic cell.
#[derive(Clone, Copy)]
enum Window {
    Lattice,
    Supercell,
}

fn pcf_config(
    window: Window,
    d_um: f64,
    interpretation: &str,
    shape: &str,
    lambda_um: f64,
    n_modes: usize,
    extra: &str,
) -> RunConfig {
    let (window, boundary) = match window {
        Window::Lattice => (
            "lattice",
            "{ kind = \"absorber-ramp\", width_cells = 20, strength = 0.0 }",
        ),
        Window::Supercell => (
            "supercell",
            "{ kind = \"periodic\", width_cells = 0, strength = 0.0 }",
        ),
    };
    let text = format!(
        r#"
[geometry]
pitch_um = 2.3
d_um = {d_um}
d_interpretation = "{interpretation}"
hole_shape = "{shape}"
rings = 4

[grid]
dx_um = 0.1
window = "{window}"

[propagation]
lambda_um = {lambda_um}
boundary = {boundary}

[solver]
n_modes = {n_modes}
{extra}

[output]
directory = "unused"
"#
    );
    RunConfig::parse(&text).unwrap().resolve().unwrap()
}

fn pcf_profile(cfg: &RunConfig) -> IndexProfile {
    cfg.index_profile().unwrap()
}

fn diff_norm(a: &ComplexField2D, b: &ComplexField2D) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn random_field(grid: Grid2D, rng: &mut ChaCha8Rng) -> ComplexField2D {
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ComplexField2D { grid, values }
}

// ---------------------------------------------------------------- criteria

fn c1() -> Outcome {
    let s = step_index();
    let exact = common::lp01_n_eff(s.a_um, s.n_co, s.n_cl, s.lambda_um);
    let t = Instant::now();
    let set = step_index_imaginary(&s);
    let secs = t.elapsed().as_secs_f64();
    let n = set.modes[0].n_eff;
    let err = (n - exact).abs();
    outcome(err < 1e-4 && secs < 120.0 && set.modes[0].converged, format!("n_eff {n:.9}, oracle {exact:.9}, |diff| {err:.2e} (tol 1e-4), {secs:.1} s (limit 120 s)"))
}

fn c2() -> Outcome {
    let s = step_index();
    let imag = step_index_imaginary(&s);
    let m0 = &imag.modes[0];
    // reference index at the mode, where the decay ghosts are consistent with it
    let n_ref = (m0.n_eff * 1e4).round() / 1e4;
    let cfg = PropagationConfig {
        lambda_um: s.lambda_um,
        dz_um: 1.0,
        n_ref,
        boundary: BoundarySpec::decay(),
        axis: Axis::RealDistance,
    };
    let opts = CorrelationOptions {
        n_steps: 4096,
        ..Default::default()
    };
    let out = solve_correlation(
        &s.profile,
        &cfg,
        &LaunchSpec::gaussian(0.0, 0.0, 4.0),
        &opts,
    )
    .unwrap();
    let k_ref = cfg.k0() * n_ref;
    let peak = out
        .peaks
        .iter()
        .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
        .unwrap();
    let beta_peak = paraxial_to_helmholtz(peak.beta_per_um, k_ref).unwrap();
    let res = out.record.resolution_per_um();
    let dbeta = (beta_peak - m0.beta_per_um).abs();
    let overlap = inner_product(&out.modes[0].field, &m0.field)
        .unwrap()
        .norm();
    outcome(
        dbeta <= res && overlap > 0.999,
        format!("peak beta {beta_peak:.7}, imaginary {:.7}, |diff| {dbeta:.2e} (resolution {res:.2e}); overlap {overlap:.7} (> 0.999)", m0.beta_per_um),
    )
}

fn c3() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (interp, d) in [("diameter", 0.6), ("radius", 0.6)] {
        for lambda in [1.0, 1.31, 1.55, 2.3] {
            let mut fund = [0.0; 2];
            for (k, shape) in ["circular", "square"].iter().enumerate() {
                let cfg = pcf_config(
                    Window::Supercell,
                    d,
                    interp,
                    shape,
                    lambda,
                    2,
                    "strategy = \"block\"\nguard = 1",
                );
                let profile = pcf_profile(&cfg);
                let pc = cfg.propagation_config(Axis::ImaginaryDistance);
                let set =
                    solve_imaginary_distance(&profile, &pc, &cfg.imaginary_options(None)).unwrap();
                let fsm = fsm_index(&cfg.pcf_geometry(), lambda, &FsmOptions::default()).unwrap();
                let n0 = set.modes[0].n_eff;
                let ordered = set.modes.windows(2).all(|w| w[0].n_eff >= w[1].n_eff);
                let inside = n0 > fsm && n0 < 1.45;
                ok &= inside && ordered;
                fund[k] = n0;
                let tabulated = if k == 0 { 1.442815 } else { 1.443218 };
                lines.push(format!(
                    "    {interp:8} {shape:8} lambda {lambda:4.2}: fundamental {n0:.6} (tabulated {tabulated:.6}, diff {:+.2e}), second {:.6}, fsm {fsm:.6}{}",
                    n0 - tabulated,
                    set.modes[1].n_eff,
                    if inside && ordered { "" } else { "  <- violates" }
                ));
            }
            let gap = (fund[0] - fund[1]).abs();
            ok &= gap < 5e-3;
            lines.push(format!(
                "    {interp:8} lambda {lambda:4.2}: |circular - square| {gap:.2e} (< 5e-3)"
            ));
        }
    }
    outcome(
        ok,
        format!(
            "fundamental inside (fsm, 1.45), ordered, shapes within 5e-3\n{}",
            lines.join("\n")
        ),
    )
}

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n_cl = rng.random_range(1.0..2.0);
        let n_co = n_cl + rng.random_range(1e-4..0.5);
        let n_eff = n_cl + rng.random::<f64>() * (n_co - n_cl);
        let spec = StepFiberSpec {
            a_um: rng.random_range(0.5..20.0),
            n_co,
            n_cl,
        };
        let b = v_number(&spec, rng.random_range(0.3..2.5), Some(n_eff)).unwrap();
        let (u, w) = (b.u.unwrap(), b.w.unwrap());
        worst = worst.max((u * u + w * w - b.v * b.v).abs() / (b.v * b.v));
    }
    outcome(
        worst <= 1e-12,
        format!("worst |U^2+W^2-V^2|/V^2 over 1000 tuples {worst:.2e} (tol 1e-12)"),
    )
}

fn c5() -> Outcome {
    let pitch = 2.3;
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut lines = Vec::new();
    for r in [0.30, 0.45, 0.60] {
        for lp in [0.5, 1.0] {
            let geom = PcfGeometry::silica_air(pitch, r * pitch, HoleShape::Circular);
            let lambda = lp * pitch;
            let t = Instant::now();
            let n_fsm = fsm_index(
                &geom,
                lambda,
                &FsmOptions {
                    cells_per_pitch: 64,
                    ..FsmOptions::default()
                },
            )
            .unwrap();
            slowest = slowest.max(t.elapsed().as_secs_f64());
            let num = v_eff(pitch, 1.45, n_fsm, lambda).unwrap();
            let emp = empirical_v(lp, r).unwrap();
            let dev = (emp - num).abs() / num;
            worst = worst.max(dev);
            // Diagnostic only: the same formula with the guided core-mode
            // index in place of the material index.
            let cfg = pcf_config(
                Window::Supercell,
                r * pitch,
                "diameter",
                "circular",
                lambda,
                1,
                "",
            );
            let profile = pcf_profile(&cfg);
            let core = solve_imaginary_distance(
                &profile,
                &cfg.propagation_config(Axis::ImaginaryDistance),
                &cfg.imaginary_options(None),
            )
            .unwrap();
            let with_core = match v_eff(pitch, core.modes[0].n_eff, n_fsm, lambda) {
                Ok(v) => format!("{v:.4} ({:.1}%)", 100.0 * (emp - v).abs() / v),
                Err(_) => "n/a, core mode below the fsm index".to_string(),
            };
            lines.push(format!(
                "    d/pitch {r:.2} lambda/pitch {lp:.1}: V_eff {num:.4}, empirical {emp:.4}, deviation {:.1}%; with core-mode index {with_core}",
                100.0 * dev
            ));
        }
    }
    outcome(
        worst < 0.05 && slowest < 60.0,
        format!(
            "worst deviation {:.1}% (tol 5%), slowest solve {slowest:.1} s (limit 60 s)\n{}",
            100.0 * worst,
            lines.join("\n")
        ),
    )
}

fn c6() -> Outcome {
    let spec = SweepSpec {
        kind: VCurveKind::NumericVeff,
        d_over_pitch: vec![0.15, 0.30, 0.45],
        start: 0.5,
        stop: 10.0,
        step: 0.5,
        abscissa: Abscissa::PitchOverLambda,
        template: PcfGeometry::silica_air(2.3, 0.0, HoleShape::Circular),
        fsm: FsmOptions::default(),
    };
    let curves = sweep_v(&spec).unwrap();
    let vals: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| c.points.iter().map(|p| p.v.unwrap_or(f64::NAN)).collect())
        .collect();
    let complete = vals.iter().flatten().all(|v| v.is_finite());
    let monotone = vals.iter().all(|c| c.windows(2).all(|w| w[1] > w[0]));
    let ordered = (0..vals[0].len()).all(|k| vals[0][k] < vals[1][k] && vals[1][k] < vals[2][k]);
    let max015 = vals[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = complete && monotone && ordered && max015 < SINGLE_MODE_CUTOFF;
    outcome(
        pass,
        format!(
            "complete {complete}, increasing {monotone}, ordered by d/pitch {ordered}, max V_eff at d/pitch 0.15 {max015:.4} (< 2.405); V_eff at pitch/lambda 10: {:.3} {:.3} {:.3}",
            vals[0].last().unwrap(),
            vals[1].last().unwrap(),
            vals[2].last().unwrap()
        ),
    )
}

fn c7() -> Outcome {
    let ratios: Vec<f64> = (0..13).map(|k| 0.20 + 0.05 * k as f64).collect();
    let spec = SweepSpec {
        kind: VCurveKind::EmpiricalV,
        d_over_pitch: ratios.clone(),
        start: 0.01,
        stop: 2.0,
        step: 0.01,
        abscissa: Abscissa::LambdaOverPitch,
        template: PcfGeometry::silica_air(2.3, 0.0, HoleShape::Circular),
        fsm: FsmOptions::default(),
    };
    let curves = sweep_v(&spec).unwrap();
    let decreasing = curves.iter().all(|c| {
        c.points
            .windows(2)
            .all(|w| w[1].v.unwrap() < w[0].v.unwrap())
    });
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (c, &r) in curves.iter().zip(&ratios) {
        let k = empirical_coeffs(r).unwrap();
        let limit = k.a / (k.b + 1.0);
        let v = c.points[0].v.unwrap();
        worst = worst.max((v - limit).abs());
        lines.push(format!(
            "    d/pitch {r:.2}: V(0.01) {v:.5}, A/(B+1) {limit:.5}, diff {:.2e}",
            (v - limit).abs()
        ));
    }
    outcome(
        curves.len() == 13 && decreasing && worst <= 1e-3,
        format!("{} curves, all strictly decreasing {decreasing}, worst |V(0.01) - A/(B+1)| {worst:.2e} (tol 1e-3)\n{}", curves.len(), lines.join("\n")),
    )
}

fn c8() -> Outcome {
    let cfg = pcf_config(Window::Lattice, 0.6, "diameter", "circular", 1.55, 1, "");
    let profile = pcf_profile(&cfg);
    let stepper = Stepper::new(&profile, &cfg.propagation_config(Axis::RealDistance)).unwrap();
    let f0 = make_launch_field(&LaunchSpec::gaussian(0.4, -0.3, 1.5), &profile.grid).unwrap();
    let mut prev = power(&f0);
    let mut worst: f64 = 0.0;
    let mut obs = |_: usize, _: f64, f: &ComplexField2D| {
        let p = power(f);
        worst = worst.max((p - prev).abs() / prev);
        prev = p;
    };
    propagate(&stepper, &f0, 1000, &mut obs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut lin: f64 = 0.0;
    for _ in 0..4 {
        let (f, g) = (
            random_field(profile.grid, &mut rng),
            random_field(profile.grid, &mut rng),
        );
        let (a, b) = (
            Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
        );
        let mix = ComplexField2D {
            grid: f.grid,
            values: f
                .values
                .iter()
                .zip(&g.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        };
        let lhs = stepper.step(&mix).unwrap();
        let (sf, sg) = (stepper.step(&f).unwrap(), stepper.step(&g).unwrap());
        let rhs = ComplexField2D {
            grid: f.grid,
            values: sf
                .values
                .iter()
                .zip(&sg.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        };
        let scale = rhs.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        lin = lin.max(
            lhs.values
                .iter()
                .zip(&rhs.values)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
                / scale,
        );
    }
    outcome(worst <= 1e-10 && lin <= 1e-12, format!("worst per-step power change {worst:.2e} (tol 1e-10) over 1000 steps; linearity error {lin:.2e} (tol 1e-12)"))
}

fn c9() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut dumps = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let text = format!(
            r#"
[geometry]
pitch_um = 2.3
d_um = 0.6

[grid]
dx_um = 0.1

[propagation]
lambda_um = 1.55
boundary = {{ kind = "absorber-ramp", width_cells = 20, strength = 0.0 }}

[solver]
n_modes = 4
seed = 12345

[output]
directory = "{}"
"#,
            dir.display()
        );
        let path = tmp.path().join(format!("{run}.toml"));
        std::fs::write(&path, text).unwrap();
        let code = pcfbpm::cli::run(["pcfbpm", "solve", path.to_str().unwrap()]);
        assert!(code == 0 || code == 2, "solve exited {code}");
        dumps.push(
            (0..4)
                .map(|k| std::fs::read(dir.join(format!("mode_{k}.pcf"))).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    let identical = dumps[0] == dumps[1];
    let fields: Vec<ComplexField2D> = (0..4)
        .map(|k| read_field(&tmp.path().join("a").join(format!("mode_{k}.pcf"))).unwrap())
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            worst = worst.max(inner_product(&fields[i], &fields[j]).unwrap().norm());
        }
    }
    outcome(worst < 1e-8 && identical, format!("max pairwise |<phi_i, phi_j>| {worst:.2e} (tol 1e-8); repeated run bit-identical {identical}"))
}

fn c10() -> Outcome {
    // Larger holes and a short wavelength, where the pair is guided.
    let solve = |launch: &str, seed: u64| {
        let cfg = pcf_config(
            Window::Lattice,
            0.6,
            "radius",
            "circular",
            0.6,
            3,
            &format!("launch = {launch}\nseed = {seed}"),
        );
        let profile = pcf_profile(&cfg);
        let set = solve_imaginary_distance(
            &profile,
            &cfg.propagation_config(Axis::ImaginaryDistance),
            &cfg.imaginary_options(None),
        )
        .unwrap();
        let fsm = fsm_index(&cfg.pcf_geometry(), 0.6, &FsmOptions::default()).unwrap();
        (set, fsm)
    };
    let (a, fsm) = solve(
        "{ kind = \"gaussian\", center_um = [0.3, -0.2], waist_um = 2.5 }",
        1,
    );
    let (b, _) = solve(
        "{ kind = \"gaussian\", center_um = [0.9, -0.5], waist_um = 2.5 }",
        99,
    );
    let pair_a = [&a.modes[1].field, &a.modes[2].field];
    // rotate one basis by an arbitrary unitary; the span test must not notice
    let (c, s) = (0.6f64, 0.8f64);
    let phase = Complex64::from_polar(1.0, 1.1);
    let rot = |x: Complex64, y: Complex64| (c * x + s * phase * y, -s * phase.conj() * x + c * y);
    let rotated: Vec<ComplexField2D> = {
        let (mut u, mut v) = (pair_a[0].clone(), pair_a[1].clone());
        for k in 0..u.values.len() {
            let (p, q) = rot(pair_a[0].values[k], pair_a[1].values[k]);
            u.values[k] = p;
            v.values[k] = q;
        }
        vec![u, v]
    };
    let residual = |basis: [&ComplexField2D; 2], f: &ComplexField2D| {
        let mut r = f.clone();
        for e in basis {
            let coef = inner_product(e, f).unwrap();
            for (x, y) in r.values.iter_mut().zip(&e.values) {
                *x -= coef * y;
            }
        }
        power(&r).sqrt()
    };
    let mut worst: f64 = 0.0;
    for f in [&b.modes[1].field, &b.modes[2].field] {
        worst = worst.max(residual(pair_a, f));
        worst = worst.max(residual([&rotated[0], &rotated[1]], f));
    }
    let found = (1..3).all(|k| a.modes[k].converged && b.modes[k].converged);
    let split = a.modes[1].n_eff - a.modes[2].n_eff;
    let rotation_check = diff_norm(&rotated[0], pair_a[0]) > 0.1;
    outcome(
        found && worst < 1e-6 && rotation_check,
        format!(
            "pair {:.7} / {:.7} (split {split:.1e}, fsm {fsm:.6}), both runs converged {found}; worst span residual {worst:.2e} (tol 1e-6) over two launches and a rotated basis",
            a.modes[1].n_eff, a.modes[2].n_eff
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "step-index oracle", c1),
        (2, "correlation vs imaginary distance", c2),
        (3, "hexagonal fiber tables", c3),
        (4, "U/W/V identity", c4),
        (5, "empirical fit vs numeric V_eff", c5),
        (6, "numeric V_eff curves", c6),
        (7, "empirical curve family", c7),
        (8, "conservation and linearity", c8),
        (9, "orthogonality and determinism", c9),
        (10, "degenerate pair span", c10),
    ];
    let only: Option<Vec<u32>> = std::env::var("PCF_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut unexpected = 0;
    for (n, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let known = KNOWN_DEVIATIONS.contains(&n);
        let verdict = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => "FAIL",
        };
        if !o.pass && !known {
            unexpected += 1;
        }
        println!(
            "criterion {n:2} {name}: {verdict}: {} [{:.1} s]",
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
