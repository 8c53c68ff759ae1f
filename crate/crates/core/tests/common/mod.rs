//! Independent reference values for the integration and acceptance tests.
//! Nothing here calls into the crate's solvers.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Bessel J_n from its integral representation.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    simpson(|t| (n as f64 * t - x * t.sin()).cos(), 0.0, PI, 2000) / PI
}

/// Modified Bessel K_n from `int_0^inf exp(-x cosh t) cosh(n t) dt`.
pub fn bessel_k(n: u32, x: f64) -> f64 {
    // integrand below 1e-300 well before t = 25 for x >= 0.05
    simpson(
        |t| (-x * t.cosh()).exp() * (n as f64 * t).cosh(),
        0.0,
        25.0,
        20_000,
    )
}

/// Plain bisection on a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Scalar LP01 effective index of a step-index fiber from
/// `U J1(U)/J0(U) = W K1(W)/K0(W)`, `U^2 + W^2 = V^2`.
pub fn lp01_n_eff(a_um: f64, n_co: f64, n_cl: f64, lambda_um: f64) -> f64 {
    let k0 = 2.0 * PI / lambda_um;
    let v = k0 * a_um * (n_co * n_co - n_cl * n_cl).sqrt();
    let g = |u: f64| {
        let w = (v * v - u * u).sqrt();
        u * bessel_j(1, u) * bessel_k(0, w) - w * bessel_k(1, w) * bessel_j(0, u)
    };
    let hi = v.min(2.404_825_557_695_773) - 1e-9;
    let u = bisect(g, 1e-6, hi);
    let b = 1.0 - u * u / (v * v);
    (n_cl * n_cl + b * (n_co * n_co - n_cl * n_cl)).sqrt()
}
