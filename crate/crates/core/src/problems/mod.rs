//! Test operators: free Schrödinger, heat, Hubbard chain and 3D
//! convection–diffusion.

pub mod hubbard;

use crate::error::{Error, Result};
use crate::linalg::{norm2, LinearOperator, Prefactor, SparseOperator, Symmetry, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    SchrodingerFree {
        n: usize,
    },
    Heat {
        n: usize,
    },
    Hubbard {
        omega: f64,
        #[serde(default = "default_u")]
        u: f64,
    },
    ConvectionDiffusion {
        n: usize,
        mu1: f64,
        mu2: f64,
    },
}

fn default_u() -> f64 {
    5.0
}

pub struct Problem {
    pub spec: ProblemSpec,
    pub op: SparseOperator,
    pub sigma: Prefactor,
    /// `μ₂(σA) ≤ 0` holds analytically for this operator.
    pub nonexpansive: bool,
}

impl Problem {
    pub fn n(&self) -> usize {
        self.op.n()
    }

    pub fn hermitian(&self) -> bool {
        self.op.symmetry() == Symmetry::Hermitian
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        match *self {
            Self::SchrodingerFree { n } | Self::Heat { n } if n < 2 => {
                bad("grid size n must be at least 2")
            }
            Self::ConvectionDiffusion { n, .. } if n < 2 => bad("grid size n must be at least 2"),
            Self::ConvectionDiffusion { mu1, mu2, .. } if !(mu1.is_finite() && mu2.is_finite()) => {
                bad("mu1 and mu2 must be finite")
            }
            Self::Hubbard { omega, u } if !(omega.is_finite() && u.is_finite()) => {
                bad("omega and u must be finite")
            }
            _ => Ok(()),
        }
    }

    /// Short identifier for file names and CSV rows.
    pub fn label(&self) -> String {
        match *self {
            Self::SchrodingerFree { n } => format!("schrodinger_n{n}"),
            Self::Heat { n } => format!("heat_n{n}"),
            Self::Hubbard { omega, .. } => format!("hubbard_w{omega}"),
            Self::ConvectionDiffusion { n, mu1, mu2 } => format!("convdiff_n{n}_mu{mu1}_{mu2}"),
        }
    }

    pub fn build(&self) -> Result<Problem> {
        self.validate()?;
        let (op, sigma) = match *self {
            Self::SchrodingerFree { n } => (free_hamiltonian(n)?, Prefactor::minus_i()),
            Self::Heat { n } => (free_hamiltonian(n)?, Prefactor::minus_one()),
            Self::Hubbard { omega, u } => (hubbard::build(omega, u)?, Prefactor::minus_i()),
            Self::ConvectionDiffusion { n, mu1, mu2 } => {
                (convection_diffusion(n, mu1, mu2)?, Prefactor::one())
            }
        };
        Ok(Problem {
            spec: self.clone(),
            op,
            sigma,
            nonexpansive: true,
        })
    }

    /// Unit starting vector: normalized all-ones for convection–diffusion,
    /// seeded complex Gaussian otherwise.
    pub fn starting_vector(&self, n: usize, seed: u64) -> Vec<C64> {
        match self {
            Self::ConvectionDiffusion { .. } => vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n],
            _ => random_unit_vector(n, seed),
        }
    }
}

pub fn random_unit_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<C64> = (0..n)
        .map(|_| {
            C64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    let nv = norm2(&v);
    v.into_iter().map(|z| z / nv).collect()
}

/// `H = ¼ tridiag(−1, 2, −1)`, spectrum in `(0, 1)`.
pub fn free_hamiltonian(n: usize) -> Result<SparseOperator> {
    SparseOperator::tridiag_toeplitz(n, -0.25, 0.5, -0.25, Symmetry::Hermitian)
}

/// Eigenvalues `sin²(kπ/(2(n+1)))`, ascending.
pub fn free_hamiltonian_eigenvalues(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| (k as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2))
        .collect()
}

/// Orthonormal eigenvector `k` (1-based), entries `√(2/(n+1)) sin(jkπ/(n+1))`.
pub fn free_hamiltonian_eigenvector(n: usize, k: usize) -> Vec<f64> {
    let c = (2.0 / (n + 1) as f64).sqrt();
    (1..=n)
        .map(|j| c * (j as f64 * k as f64 * PI / (n + 1) as f64).sin())
        .collect()
}

/// `A = I⊗I⊗C₁ + B⊗I⊗I + I⊗C₂⊗I` on the `n³` interior grid, with
/// `B = h⁻² tridiag(1, −2, 1)`, `C_i = h⁻² tridiag(1+μ_i, −2, 1−μ_i)` and
/// `h = 1/(n+1)`. Grid index `i₁ + n i₂ + n² i₃`.
pub fn convection_diffusion(n: usize, mu1: f64, mu2: f64) -> Result<SparseOperator> {
    let h2 = ((n + 1) as f64).powi(2);
    let big = n * n * n;
    let idx = |a: usize, b: usize, c: usize| a + n * b + n * n * c;
    let mut trip = Vec::with_capacity(7 * big);
    let r = |x: f64| C64::new(x * h2, 0.0);
    for c in 0..n {
        for b in 0..n {
            for a in 0..n {
                let row = idx(a, b, c);
                trip.push((row, row, r(-6.0)));
                // C₁ on the fastest index
                if a > 0 {
                    trip.push((row, idx(a - 1, b, c), r(1.0 + mu1)));
                }
                if a + 1 < n {
                    trip.push((row, idx(a + 1, b, c), r(1.0 - mu1)));
                }
                if b > 0 {
                    trip.push((row, idx(a, b - 1, c), r(1.0 + mu2)));
                }
                if b + 1 < n {
                    trip.push((row, idx(a, b + 1, c), r(1.0 - mu2)));
                }
                if c > 0 {
                    trip.push((row, idx(a, b, c - 1), r(1.0)));
                }
                if c + 1 < n {
                    trip.push((row, idx(a, b, c + 1), r(1.0)));
                }
            }
        }
    }
    let sym = if mu1 == 0.0 && mu2 == 0.0 {
        Symmetry::Hermitian
    } else {
        Symmetry::General
    };
    SparseOperator::from_triplets(big, &trip, sym)
}

/// Eigenvalues of the convection–diffusion operator from the Toeplitz
/// closed form `d + 2√(ac) cos(kπ/(n+1))`.
pub fn convection_diffusion_eigenvalues(n: usize, mu1: f64, mu2: f64) -> Vec<C64> {
    let h2 = ((n + 1) as f64).powi(2);
    let toeplitz = |mu: f64| -> Vec<C64> {
        let s = C64::new((1.0 + mu) * (1.0 - mu), 0.0).sqrt();
        (1..=n)
            .map(|k| -2.0 + 2.0 * s * (k as f64 * PI / (n + 1) as f64).cos())
            .collect()
    };
    let (e1, e2, eb) = (toeplitz(mu1), toeplitz(mu2), toeplitz(0.0));
    let mut out = Vec::with_capacity(n * n * n);
    for x in &eb {
        for y in &e2 {
            for z in &e1 {
                out.push((x + y + z) * h2);
            }
        }
    }
    out
}
