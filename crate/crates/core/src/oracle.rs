//! Reference solutions independent of the Krylov code path.

use crate::approximant::Approximant;
use crate::error::{Error, Result};
use crate::krylov::{build_krylov, KrylovConfig, KrylovMode, Reorthogonalization};
use crate::linalg::{axpy, dot, ln_factorial, norm2, symtrid_eig, LinearOperator, Prefactor, C64};
use crate::problems::{free_hamiltonian_eigenvalues, free_hamiltonian_eigenvector};

const TERM_CAP: usize = 60;

/// `e^{σtH} v` for `H = ¼ tridiag(−1, 2, −1)` by eigen-expansion.
pub fn oracle_laplacian(n: usize, sigma: Prefactor, t: f64, v: &[C64]) -> Result<Vec<C64>> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    let lam = free_hamiltonian_eigenvalues(n);
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (k, l) in lam.iter().enumerate() {
        let q = free_hamiltonian_eigenvector(n, k + 1);
        let c: C64 = q.iter().zip(v).map(|(a, b)| b * a).sum();
        let c = c * (sigma.value() * t * l).exp();
        for (o, a) in out.iter_mut().zip(&q) {
            *o += c * a;
        }
    }
    Ok(out)
}

/// Taylor summation of `e^{M} x` over `s` substeps, `M` given by `apply` with
/// `‖M‖ ≤ norm`. Each substep is truncated once the remainder bound
/// `e·θ^{K+1}/(K+1)!` drops below `target/s`.
fn series_exp<F>(apply: F, norm: f64, x: &[C64], target: f64) -> Result<Vec<C64>>
where
    F: Fn(&[C64], &mut [C64]),
{
    if !(target >= 1e-14) {
        return Err(Error::InvalidArgument(
            "oracle target accuracy must be at least 1e-14".into(),
        ));
    }
    if !norm.is_finite() {
        return Err(Error::NonFinite("oracle operator norm"));
    }
    let s = norm.ceil().max(1.0);
    let steps = s as usize;
    let theta = norm / s;
    let per_step = target / s;
    let mut w = x.to_vec();
    let mut term = vec![C64::new(0.0, 0.0); x.len()];
    let mut next = vec![C64::new(0.0, 0.0); x.len()];
    for _ in 0..steps {
        term.copy_from_slice(&w);
        let mut k = 0;
        loop {
            k += 1;
            if k > TERM_CAP {
                return Err(Error::NoConvergence {
                    what: "oracle Taylor series",
                    iterations: TERM_CAP,
                });
            }
            apply(&term, &mut next);
            let inv = 1.0 / (s * k as f64);
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * inv;
            }
            axpy(C64::new(1.0, 0.0), &term, &mut w);
            let ln_tail = 1.0 + (k + 1) as f64 * theta.max(1e-300).ln() - ln_factorial(k + 1);
            if theta == 0.0 || ln_tail <= per_step.ln() {
                break;
            }
        }
    }
    Ok(w)
}

fn op_norm_bound<O: LinearOperator + ?Sized>(op: &O) -> f64 {
    op.norm_1().max(op.norm_inf())
}

/// `e^{σtA} v` by scaled Taylor summation.
pub fn oracle_series<O: LinearOperator + ?Sized>(
    op: &O,
    sigma: Prefactor,
    t: f64,
    v: &[C64],
    target: f64,
) -> Result<Vec<C64>> {
    if v.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: v.len(),
        });
    }
    let z = sigma.value() * t;
    let apply = |x: &[C64], y: &mut [C64]| {
        op.apply_into(x, y);
        y.iter_mut().for_each(|e| *e *= z);
    };
    series_exp(apply, t.abs() * op_norm_bound(op), v, target)
}

/// `φ_p(σtA) v` from the exponential of the augmented operator
/// `[[σtA, v e_1ᵀ], [0, J_p]]` applied to `e_{n+p}`.
pub fn oracle_phi<O: LinearOperator + ?Sized>(
    op: &O,
    sigma: Prefactor,
    t: f64,
    v: &[C64],
    p: usize,
    target: f64,
) -> Result<Vec<C64>> {
    if p == 0 {
        return oracle_series(op, sigma, t, v, target);
    }
    let n = op.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    let z = sigma.value() * t;
    let apply = |x: &[C64], y: &mut [C64]| {
        let (xa, xb) = x.split_at(n);
        let (ya, yb) = y.split_at_mut(n);
        op.apply_into(xa, ya);
        for (yi, vi) in ya.iter_mut().zip(v) {
            *yi = *yi * z + vi * xb[0];
        }
        for k in 0..p {
            yb[k] = if k + 1 < p {
                xb[k + 1]
            } else {
                C64::new(0.0, 0.0)
            };
        }
    };
    let vn1: f64 = v.iter().map(|x| x.norm()).sum();
    let vninf = v.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let an = t.abs() * op.norm_1();
    let norm = (an.max(vn1).max(1.0)).max(t.abs() * op.norm_inf() + vninf);
    let mut x = vec![C64::new(0.0, 0.0); n + p];
    x[n + p - 1] = C64::new(1.0, 0.0);
    let mut out = series_exp(apply, norm, &x, target)?;
    out.truncate(n);
    Ok(out)
}

/// `φ_p(σtA) v = ∫₀¹ e^{(1−s)σtA} v s^{p−1}/(p−1)! ds` by Gauss–Legendre.
pub fn oracle_phi_quadrature<O: LinearOperator + ?Sized>(
    op: &O,
    sigma: Prefactor,
    t: f64,
    v: &[C64],
    p: usize,
    nodes: usize,
) -> Result<Vec<C64>> {
    if p == 0 {
        return oracle_series(op, sigma, t, v, 1e-14);
    }
    let (x, w) = gauss_legendre(nodes);
    let scale = (-ln_factorial(p - 1)).exp();
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (xi, wi) in x.iter().zip(&w) {
        let s = 0.5 * (xi + 1.0);
        let e = oracle_series(op, sigma, (1.0 - s) * t, v, 1e-14)?;
        axpy(
            C64::new(0.5 * wi * s.powi(p as i32 - 1) * scale, 0.0),
            &e,
            &mut out,
        );
    }
    Ok(out)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n and P_n' by the three-term recurrence
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `∫_a^b f` by the `n`-point Gauss–Legendre rule.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| wi * f(c + h * xi))
        .sum::<f64>()
        * h
}

/// `τ ∫₀ᵗ |δ_m(s)| ds` with 64 Gauss–Legendre nodes.
pub fn defect_integral_reference(appr: &Approximant<'_>, t: f64) -> Result<f64> {
    let mut err = None;
    let val = integrate(
        |s| match appr.defect(s) {
            Ok(d) => d.delta.norm(),
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        0.0,
        t,
        64,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(appr.dec().tau_next() * val),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RitzExtremes {
    pub min: f64,
    pub max: f64,
    /// Residual norms `τ |e_mᵀ q|` of the two extreme Ritz pairs.
    pub min_residual: f64,
    pub max_residual: f64,
}

/// Extreme eigenvalues of a Hermitian operator by fully reorthogonalized
/// Lanczos with `steps` iterations.
pub fn lanczos_extremes<O: LinearOperator + ?Sized>(
    op: &O,
    v: &[C64],
    steps: usize,
) -> Result<RitzExtremes> {
    let cfg = KrylovConfig::new(steps)
        .with_mode(KrylovMode::Lanczos)
        .with_reorthogonalization(Reorthogonalization::Twice);
    let dec = build_krylov(op, v, &cfg)?;
    let tri = dec.tridiagonal().ok_or(Error::NotHermitian)?;
    let eig = symtrid_eig(&tri)?;
    let m = eig.dim();
    let tau = dec.tau_next();
    Ok(RitzExtremes {
        min: eig.values[0],
        max: eig.values[m - 1],
        min_residual: tau * eig.vector(m - 1, 0).abs(),
        max_residual: tau * eig.vector(m - 1, m - 1).abs(),
    })
}

/// `‖x − y‖₂`.
pub fn distance(x: &[C64], y: &[C64]) -> f64 {
    let d: Vec<C64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm2(&d)
}

/// `|⟨x, y⟩|` helper for orthogonality diagnostics.
pub fn overlap(x: &[C64], y: &[C64]) -> f64 {
    dot(x, y).norm()
}
