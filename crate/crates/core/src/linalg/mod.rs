//! Complex vector kernels, dense and sparse matrices, and the small dense
//! matrix functions used on projected Krylov matrices.

pub mod dense;
pub mod expm;
pub mod lognorm;
pub mod mtx;
pub mod sparse;
pub mod tridiag;

pub use dense::DenseMatrix;
pub use expm::{expm_dense, phi_dense, phi_scalar};
pub use lognorm::{log_norm_estimate, LogNormEstimate};
pub use sparse::{LinearOperator, SparseOperator, Symmetry};
pub use tridiag::{hermitian_eigvals, symtrid_eig, SymTridiagonal, TridiagEigen};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type C64 = num_complex::Complex64;

/// Conjugated inner product `x^* y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    // scaled accumulation, avoids overflow for large entries
    let scale = x
        .iter()
        .fold(0.0_f64, |s, z| s.max(z.re.abs()).max(z.im.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ssq: f64 = x
        .iter()
        .map(|z| (z.re / scale).powi(2) + (z.im / scale).powi(2))
        .sum();
    scale * ssq.sqrt()
}

/// `y += a x`
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: C64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

pub fn sub(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn all_finite(x: &[C64]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// The unimodular prefactor `σ` in `exp(σ t A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Prefactor(C64);

impl Prefactor {
    pub const TOL: f64 = 1e-12;

    pub fn new(sigma: C64) -> Result<Self> {
        if !(sigma.re.is_finite() && sigma.im.is_finite()) {
            return Err(Error::NonFinite("prefactor"));
        }
        if (sigma.norm() - 1.0).abs() > Self::TOL {
            return Err(Error::InvalidArgument(format!(
                "prefactor must satisfy |sigma| = 1, got |sigma| = {}",
                sigma.norm()
            )));
        }
        Ok(Self(sigma))
    }

    /// σ = -i, the Schrödinger convention.
    pub fn minus_i() -> Self {
        Self(C64::new(0.0, -1.0))
    }

    pub fn one() -> Self {
        Self(C64::new(1.0, 0.0))
    }

    pub fn minus_one() -> Self {
        Self(C64::new(-1.0, 0.0))
    }

    pub fn value(self) -> C64 {
        self.0
    }

    /// σ is ±1.
    pub fn is_real(self) -> bool {
        self.0.im.abs() <= Self::TOL
    }

    /// σ is ±i.
    pub fn is_imaginary(self) -> bool {
        self.0.re.abs() <= Self::TOL
    }
}

impl TryFrom<[f64; 2]> for Prefactor {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Prefactor::new(C64::new(v[0], v[1]))
    }
}

impl From<Prefactor> for [f64; 2] {
    fn from(p: Prefactor) -> Self {
        [p.0.re, p.0.im]
    }
}

/// `ln(k!)` via a cached exact sum for small k and Stirling's series beyond.
pub fn ln_factorial(k: usize) -> f64 {
    if k < 2 {
        return 0.0;
    }
    if k <= 256 {
        return (2..=k).map(|j| (j as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    // Stirling series for ln Γ(x)
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}
