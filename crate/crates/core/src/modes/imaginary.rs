use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{deflate_fields, paraxial_to_helmholtz, Method, ModeSolution};
use crate::bpm::{Axis, PropagationConfig, Stepper};
use crate::error::{BpmError, SolveError};
use crate::field::{
    dot, eigen_residual, make_launch_field, normalize_in_place, power,
    rayleigh_quotient_beta2_with, ComplexField2D, Edges, LaunchKind, LaunchSpec,
};
use crate::geometry::IndexProfile;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// How several modes are iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// One mode at a time, each deflated against those already found.
    Sequential,
    /// All modes plus `guard` extra fields stepped together, orthogonalised
    /// in order after every step and rotated onto Ritz vectors every
    /// `ritz_every` steps. Near-degenerate groups converge at the rate set
    /// by the gap to the guard fields instead of the gap inside the group.
    Block { guard: usize, ritz_every: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImaginaryDistanceOptions {
    pub n_modes: usize,
    /// Relative change of beta^2 between successive steps that counts as converged.
    pub tol: f64,
    pub max_steps: usize,
    pub launch: LaunchSpec,
    /// Steps between re-centring `n_ref` on the current estimate.
    pub restart_every: usize,
    /// Target growth exponent per step of the mode being sought when
    /// `n_ref` is re-centred: `(beta^2 - k_ref^2) dz / (2 k_ref)`. Keeping it
    /// positive lets the mode outgrow grid-scale components, whose
    /// Crank-Nicolson factors sit close to unit magnitude.
    pub shift: f64,
    /// After convergence at step N, keep iterating for `settle_factor * N`
    /// more steps to clean the field of slower-decaying neighbours.
    pub settle_factor: f64,
    /// Modes at or below this index are flagged as not guided.
    pub cladding_index: Option<f64>,
    /// Seed for randomized re-launches.
    pub seed: u64,
    pub strategy: Strategy,
}

impl Default for ImaginaryDistanceOptions {
    fn default() -> Self {
        Self {
            n_modes: 1,
            tol: 1e-12,
            max_steps: 20_000,
            launch: LaunchSpec::gaussian(0.0, 0.0, 2.0),
            restart_every: 100,
            shift: 0.5,
            settle_factor: 1.0,
            cladding_index: None,
            seed: 0x5eed,
            strategy: Strategy::Sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    /// Sorted by descending n_eff; `order` follows that sorting.
    pub modes: Vec<ModeSolution>,
    /// beta^2 after every step, per mode (in solve order).
    pub histories: Vec<Vec<f64>>,
    pub relaunches: usize,
}

impl ModeSet {
    pub fn all_converged(&self) -> bool {
        self.modes.iter().all(|m| m.converged)
    }

    /// Error on the first unconverged mode.
    pub fn require_converged(self) -> Result<Vec<ModeSolution>, SolveError> {
        if let Some(m) = self.modes.iter().find(|m| !m.converged) {
            return Err(SolveError::NotConverged {
                order: m.order,
                steps: m.iterations,
                n_eff: m.n_eff,
                residual: m.residual,
            });
        }
        Ok(self.modes)
    }
}

fn launch_for(
    order: usize,
    opts: &ImaginaryDistanceOptions,
    profile: &IndexProfile,
    relaunch: u64,
) -> Result<ComplexField2D, SolveError> {
    let grid = profile.grid;
    if relaunch == 0 && (order == 0 || opts.launch.kind == LaunchKind::Gaussian) {
        let mut spec = opts.launch;
        if order > 0 {
            // Off-centre so odd and even higher modes both get weight.
            let r = 0.5 * spec.waist_um;
            let ang = 0.4 + order as f64 * GOLDEN_ANGLE;
            spec.center_um.0 += r * ang.cos();
            spec.center_um.1 += r * ang.sin();
        }
        return Ok(make_launch_field(&spec, &grid)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        opts.seed
            .wrapping_add(order as u64 * 1_000_003)
            .wrapping_add(relaunch),
    );
    let (cx, cy) = opts.launch.center_um;
    let w2 = (0.25 * grid.width_um().min(grid.height_um())).powi(2);
    let mut f = ComplexField2D::from_fn(grid, |x, y| {
        let env = (-((x - cx).powi(2) + (y - cy).powi(2)) / w2).exp();
        Complex64::new(env * rng.random_range(-1.0..1.0), 0.0)
    });
    smooth(&mut f, 3);
    normalize_in_place(&mut f)?;
    Ok(f)
}

/// Repeated 1-2-1 averaging along both axes.
fn smooth(f: &mut ComplexField2D, passes: usize) {
    let (nx, ny) = (f.grid.nx, f.grid.ny);
    let mut tmp = f.values.clone();
    for _ in 0..passes {
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let l = if i > 0 { f.values[k - 1] } else { f.values[k] };
                let r = if i + 1 < nx {
                    f.values[k + 1]
                } else {
                    f.values[k]
                };
                tmp[k] = 0.25 * (l + r) + 0.5 * f.values[k];
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let d = if j > 0 { tmp[k - nx] } else { tmp[k] };
                let u = if j + 1 < ny { tmp[k + nx] } else { tmp[k] };
                f.values[k] = 0.25 * (d + u) + 0.5 * tmp[k];
            }
        }
    }
}

/// Re-centring changes the stepper and with it, slightly, the fixed point;
/// it is skipped once the estimate has settled.
fn moved(centred_on: f64, now: f64) -> bool {
    ((now - centred_on) / now).abs() > RECENTRE_THRESHOLD
}

const RECENTRE_THRESHOLD: f64 = 1e-7;

/// Stepper whose reference index puts an eigenvalue `beta2` at growth
/// exponent `shift` per step, backing the shift off when the implicit
/// factors would lose definiteness. `None` if no valid stepper results.
fn recentred(
    profile: &IndexProfile,
    cfg: &PropagationConfig,
    beta2: f64,
    shift: f64,
) -> Option<Stepper> {
    recentred_with_ghost(profile, cfg, beta2, beta2, shift)
}

fn recentred_with_ghost(
    profile: &IndexProfile,
    cfg: &PropagationConfig,
    beta2: f64,
    ghost_beta2: f64,
    shift: f64,
) -> Option<Stepper> {
    let beta = beta2.max(0.0).sqrt();
    let ghost_beta = ghost_beta2.max(0.0).sqrt();
    let k0 = cfg.k0();
    let mut s = shift.max(0.0);
    for _ in 0..4 {
        let h = s / cfg.dz_um;
        let n = ((h.hypot(beta) - h) / k0).clamp(profile.min(), profile.max());
        let trial = PropagationConfig { n_ref: n, ..*cfg };
        if let Ok(st) = Stepper::with_decay_beta(profile, &trial, ghost_beta) {
            return Some(st);
        }
        s *= 0.25;
    }
    None
}

/// Imaginary-distance mode solve. Each mode starts from a Gaussian launch
/// and is stepped, deflated against the modes already found and
/// renormalised until the variational beta^2 stops changing.
pub fn solve_imaginary_distance(
    profile: &IndexProfile,
    config: &PropagationConfig,
    opts: &ImaginaryDistanceOptions,
) -> Result<ModeSet, SolveError> {
    if opts.n_modes == 0 {
        return Err(SolveError::Invalid("n_modes must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(SolveError::Invalid(format!(
            "tol must be positive, got {}",
            opts.tol
        )));
    }
    if opts.max_steps == 0 || opts.restart_every == 0 {
        return Err(SolveError::Invalid(
            "max_steps and restart_every must be positive".into(),
        ));
    }
    let mut cfg = *config;
    cfg.axis = Axis::ImaginaryDistance;
    if let Strategy::Block { guard, ritz_every } = opts.strategy {
        if ritz_every == 0 {
            return Err(SolveError::Invalid("ritz_every must be positive".into()));
        }
        return solve_block(profile, &cfg, opts, guard, ritz_every);
    }
    let k0 = cfg.k0();

    let mut found: Vec<ModeSolution> = Vec::with_capacity(opts.n_modes);
    let mut histories = Vec::with_capacity(opts.n_modes);
    let mut relaunches = 0usize;

    for m in 0..opts.n_modes {
        let mut cfg_m = cfg;
        let mut stepper = Stepper::new(profile, &cfg_m)?;
        let mut relaunch = 0u64;
        let fields: Vec<ComplexField2D> = found.iter().map(|s| s.field.clone()).collect();
        let refs: Vec<&ComplexField2D> = fields.iter().collect();

        let mut u = launch_for(m, opts, profile, relaunch)?;
        deflate_fields(&mut u, &refs)?;
        while power(&u) < 1e-24 {
            relaunch += 1;
            relaunches += 1;
            if relaunch > 8 {
                return Err(SolveError::Invalid(format!(
                    "launch for mode {m} stays inside the span of found modes"
                )));
            }
            u = launch_for(m, opts, profile, relaunch)?;
            deflate_fields(&mut u, &refs)?;
        }
        normalize_in_place(&mut u)?;

        let mut prev = rayleigh_quotient_beta2_with(&u, profile, k0, stepper.edges())?;
        if let Some(s) = recentred(profile, &cfg_m, prev, opts.shift) {
            cfg_m = *s.config();
            stepper = s;
        }
        let mut centred_on = prev;
        let mut history = Vec::new();
        let mut settle_until: Option<usize> = None;
        let mut steps = 0usize;
        while steps < opts.max_steps {
            steps += 1;
            stepper.step_in_place(&mut u).map_err(|e| match e {
                BpmError::NonFinite { .. } => SolveError::Bpm(BpmError::NonFinite { step: steps }),
                other => SolveError::Bpm(other),
            })?;
            deflate_fields(&mut u, &refs)?;
            if power(&u) < 1e-24 {
                relaunch += 1;
                relaunches += 1;
                u = launch_for(m, opts, profile, relaunch)?;
                deflate_fields(&mut u, &refs)?;
            }
            normalize_in_place(&mut u)?;
            let r = rayleigh_quotient_beta2_with(&u, profile, k0, stepper.edges())?;
            history.push(r);
            if settle_until.is_none() && (r - prev).abs() <= opts.tol * r.abs() {
                let extra = (opts.settle_factor.max(0.0) * steps as f64).ceil() as usize;
                settle_until = Some(steps + extra);
            }
            prev = r;
            if settle_until.is_some_and(|until| steps >= until) {
                break;
            }
            if steps % opts.restart_every == 0 && moved(centred_on, r) {
                if let Some(s) = recentred(profile, &cfg_m, r, opts.shift) {
                    cfg_m = *s.config();
                    stepper = s;
                    centred_on = r;
                }
            }
        }

        let beta2 = rayleigh_quotient_beta2_with(&u, profile, k0, stepper.edges())?;
        let k_ref = stepper.k_ref();
        let beta = paraxial_to_helmholtz((beta2 - k_ref * k_ref) / (2.0 * k_ref), k_ref)?;
        let residual = eigen_residual(&u, profile, k0, beta2, stepper.edges()) / beta2.abs();
        u.fix_phase();
        let n_eff = beta / k0;
        found.push(ModeSolution {
            order: m,
            field: u,
            beta_per_um: beta,
            beta_imag_per_um: None,
            n_eff,
            method: Method::ImaginaryDistance,
            residual,
            iterations: steps,
            converged: settle_until.is_some(),
            guided: opts.cladding_index.is_none_or(|ncl| n_eff > ncl),
        });
        histories.push(history);
    }

    found.sort_by(|a, b| b.n_eff.total_cmp(&a.n_eff));
    for (k, mode) in found.iter_mut().enumerate() {
        mode.order = k;
    }
    Ok(ModeSet {
        modes: found,
        histories,
        relaunches,
    })
}

/// Rotate `images = P block` onto the Ritz vectors of the stepping
/// operator `P` in the span of the orthonormal `block`, strongest growth
/// first. `P` is symmetric for real indices; with an absorber its Hermitian
/// part is used.
fn ritz_rotate(block: &[ComplexField2D], images: &mut [ComplexField2D]) {
    let b = block.len();
    let mut m = DMatrix::<Complex64>::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            m[(i, j)] = dot(&block[i].values, &images[j].values);
        }
    }
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
    let grid = images[0].grid;
    let mut rotated = Vec::with_capacity(b);
    for &k in &order {
        let mut f = ComplexField2D::zeros(grid);
        for (j, u) in images.iter().enumerate() {
            let c = eig.eigenvectors[(j, k)];
            for (a, v) in f.values.iter_mut().zip(&u.values) {
                *a += c * v;
            }
        }
        rotated.push(f);
    }
    images.clone_from_slice(&rotated);
}

fn ritz_values(
    block: &[ComplexField2D],
    profile: &IndexProfile,
    k0: f64,
    edges: &Edges,
) -> Result<Vec<f64>, SolveError> {
    Ok(block
        .iter()
        .map(|u| rayleigh_quotient_beta2_with(u, profile, k0, edges))
        .collect::<Result<Vec<_>, _>>()?)
}

/// In-order Gram-Schmidt of the block; a member that collapses onto the
/// ones before it is replaced by a fresh random launch.
fn orthonormalize(
    block: &mut [ComplexField2D],
    opts: &ImaginaryDistanceOptions,
    profile: &IndexProfile,
    relaunch: &mut [u64],
    total: &mut usize,
) -> Result<(), SolveError> {
    for m in 0..block.len() {
        let (done, rest) = block.split_at_mut(m);
        let u = &mut rest[0];
        let refs: Vec<&ComplexField2D> = done.iter().collect();
        deflate_fields(u, &refs)?;
        let mut tries = 0;
        while power(u) < 1e-24 {
            tries += 1;
            if tries > 8 {
                return Err(SolveError::Invalid(format!(
                    "field {m} stays inside the span of the fields before it"
                )));
            }
            relaunch[m] += 1;
            *total += 1;
            *u = launch_for(m, opts, profile, relaunch[m])?;
            deflate_fields(u, &refs)?;
        }
        normalize_in_place(u)?;
    }
    Ok(())
}

fn solve_block(
    profile: &IndexProfile,
    cfg: &PropagationConfig,
    opts: &ImaginaryDistanceOptions,
    guard: usize,
    ritz_every: usize,
) -> Result<ModeSet, SolveError> {
    let k0 = cfg.k0();
    let n = opts.n_modes;
    let b = n + guard;
    let mut relaunch = vec![0u64; b];
    let mut relaunches = 0usize;
    let mut block = (0..b)
        .map(|m| launch_for(m, opts, profile, 0))
        .collect::<Result<Vec<_>, _>>()?;
    orthonormalize(&mut block, opts, profile, &mut relaunch, &mut relaunches)?;

    let mut cfg_m = *cfg;
    let mut stepper = Stepper::new(profile, &cfg_m)?;
    let mut theta = ritz_values(&block, profile, k0, stepper.edges())?;
    // Shift so the lowest wanted mode still grows; decay edges follow the top one.
    if let Some(s) = recentred_with_ghost(profile, &cfg_m, theta[n - 1], theta[0], opts.shift) {
        cfg_m = *s.config();
        stepper = s;
    }
    let mut centred_on = theta[n - 1];
    let mut histories: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut settle_until: Option<usize> = None;
    let mut steps = 0usize;
    while steps < opts.max_steps {
        steps += 1;
        let ritz = steps % ritz_every == 0;
        let before = if ritz { Some(block.clone()) } else { None };
        for u in block.iter_mut() {
            stepper.step_in_place(u).map_err(|e| match e {
                BpmError::NonFinite { .. } => SolveError::Bpm(BpmError::NonFinite { step: steps }),
                other => SolveError::Bpm(other),
            })?;
        }
        if let Some(prev) = &before {
            ritz_rotate(prev, &mut block);
        }
        orthonormalize(&mut block, opts, profile, &mut relaunch, &mut relaunches)?;
        if ritz {
            let next = ritz_values(&block, profile, k0, stepper.edges())?;
            let change = (0..n)
                .map(|i| ((next[i] - theta[i]) / next[i]).abs())
                .fold(0.0, f64::max);
            theta = next;
            for (h, t) in histories.iter_mut().zip(&theta) {
                h.push(*t);
            }
            if settle_until.is_none() && change <= opts.tol {
                let extra = (opts.settle_factor.max(0.0) * steps as f64).ceil() as usize;
                settle_until = Some(steps + extra);
            }
            if settle_until.is_some_and(|until| steps >= until) {
                break;
            }
        }
        if steps % opts.restart_every == 0 && moved(centred_on, theta[n - 1]) {
            if let Some(s) =
                recentred_with_ghost(profile, &cfg_m, theta[n - 1], theta[0], opts.shift)
            {
                cfg_m = *s.config();
                stepper = s;
                centred_on = theta[n - 1];
            }
        }
    }
    let k_ref = stepper.k_ref();
    let mut modes = Vec::with_capacity(n);
    for (m, mut u) in block.into_iter().take(n).enumerate() {
        let beta2 = rayleigh_quotient_beta2_with(&u, profile, k0, stepper.edges())?;
        let beta = paraxial_to_helmholtz((beta2 - k_ref * k_ref) / (2.0 * k_ref), k_ref)?;
        let residual = eigen_residual(&u, profile, k0, beta2, stepper.edges()) / beta2.abs();
        u.fix_phase();
        let n_eff = beta / k0;
        modes.push(ModeSolution {
            order: m,
            field: u,
            beta_per_um: beta,
            beta_imag_per_um: None,
            n_eff,
            method: Method::ImaginaryDistance,
            residual,
            iterations: steps,
            converged: settle_until.is_some(),
            guided: opts.cladding_index.is_none_or(|ncl| n_eff > ncl),
        });
    }
    modes.sort_by(|a, b| b.n_eff.total_cmp(&a.n_eff));
    for (k, mode) in modes.iter_mut().enumerate() {
        mode.order = k;
    }
    Ok(ModeSet {
        modes,
        histories,
        relaunches,
    })
}
