//! Pre-factored tridiagonal solves with a constant off-diagonal, open or
//! cyclic.

use num_complex::Complex64;

/// LU factors of a tridiagonal matrix with main diagonal `diag` and both
/// off-diagonals equal to `off`.
#[derive(Debug, Clone)]
pub struct Thomas {
    off: Complex64,
    c_prime: Vec<Complex64>,
    inv_denom: Vec<Complex64>,
}

impl Thomas {
    pub fn new(diag: &[Complex64], off: Complex64) -> Self {
        let n = diag.len();
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_denom = vec![Complex64::new(0.0, 0.0); n];
        let mut prev = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let denom = diag[i] - off * prev;
            let inv = 1.0 / denom;
            inv_denom[i] = inv;
            prev = off * inv;
            c_prime[i] = prev;
        }
        Self {
            off,
            c_prime,
            inv_denom,
        }
    }

    pub fn len(&self) -> usize {
        self.c_prime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_prime.is_empty()
    }

    pub fn solve_in_place(&self, d: &mut [Complex64]) {
        let n = d.len();
        debug_assert_eq!(n, self.len());
        let mut prev = Complex64::new(0.0, 0.0);
        for i in 0..n {
            prev = (d[i] - self.off * prev) * self.inv_denom[i];
            d[i] = prev;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] = d[i] - self.c_prime[i] * d[i + 1];
        }
    }
}

/// Cyclic tridiagonal solve via Sherman-Morrison on top of [`Thomas`].
#[derive(Debug, Clone)]
pub struct CyclicThomas {
    inner: Thomas,
    off: Complex64,
    gamma: Complex64,
    z: Vec<Complex64>,
    denom: Complex64,
}

impl CyclicThomas {
    pub fn new(diag: &[Complex64], off: Complex64) -> Self {
        let n = diag.len();
        assert!(n >= 3, "cyclic system needs at least 3 unknowns");
        let gamma = -diag[0];
        let mut modified = diag.to_vec();
        modified[0] = diag[0] - gamma;
        modified[n - 1] = diag[n - 1] - off * off / gamma;
        let inner = Thomas::new(&modified, off);
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        z[0] = gamma;
        z[n - 1] = off;
        inner.solve_in_place(&mut z);
        let denom = 1.0 + z[0] + off * z[n - 1] / gamma;
        Self {
            inner,
            off,
            gamma,
            z,
            denom,
        }
    }

    pub fn solve_in_place(&self, d: &mut [Complex64]) {
        let n = d.len();
        self.inner.solve_in_place(d);
        let fact = (d[0] + self.off * d[n - 1] / self.gamma) / self.denom;
        for (x, z) in d.iter_mut().zip(&self.z) {
            *x -= fact * z;
        }
    }
}

#[derive(Debug, Clone)]
pub enum LineSolver {
    Open(Thomas),
    Cyclic(CyclicThomas),
}

impl LineSolver {
    pub fn solve_in_place(&self, d: &mut [Complex64]) {
        match self {
            LineSolver::Open(t) => t.solve_in_place(d),
            LineSolver::Cyclic(t) => t.solve_in_place(d),
        }
    }
}
