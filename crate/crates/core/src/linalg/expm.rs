//! Dense matrix exponential and φ-functions of small matrices.
//!
//! General matrices go through the degree-13 diagonal Padé approximant with
//! scaling and squaring. Real symmetric tridiagonal matrices take the
//! eigendecomposition path, which is exact up to the eigensolver accuracy
//! and is what Lanczos-projected matrices look like.

use super::tridiag::{symtrid_eig, SymTridiagonal};
use super::{DenseMatrix, C64};
use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Scaling threshold for the [13/13] approximant (1-norm).
pub const THETA_13: f64 = 5.371920351148152;

/// Returns `exp(z T)`.
///
/// Real symmetric tridiagonal `T` goes through its eigendecomposition when
/// `‖zT‖₁` is large enough that Padé would need squaring.
pub fn expm_dense(t: &DenseMatrix, z: C64) -> Result<DenseMatrix> {
    if !t.is_square() {
        return Err(Error::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        });
    }
    if z.norm() * t.norm1() > THETA_13 {
        if let Some(tri) = SymTridiagonal::from_dense(t, 0.0) {
            return expm_symtrid(&tri, z);
        }
    }
    pade13_expm(&t.scaled(z))
}

/// `exp(z T)` for real symmetric tridiagonal `T` via `Q exp(zΛ) Qᵀ`.
pub fn expm_symtrid(t: &SymTridiagonal, z: C64) -> Result<DenseMatrix> {
    let eig = symtrid_eig(t)?;
    let n = t.dim();
    let mut out = DenseMatrix::zeros(n, n);
    let ez: Vec<C64> = eig.values.iter().map(|&l| (z * l).exp()).collect();
    for i in 0..n {
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..n {
                s += ez[k] * (eig.vector(i, k) * eig.vector(j, k));
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Degree-13 Padé approximant with scaling and squaring applied to `a`.
pub fn pade13_expm(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = a.norm1();
    if !norm.is_finite() {
        return Err(Error::NonFinite("expm argument"));
    }
    if norm == 0.0 {
        return Ok(DenseMatrix::identity(n));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scaled(C64::new(0.5f64.powi(s), 0.0));

    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let id = DenseMatrix::identity(n);
    let a2 = a.matmul(&a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;

    let inner_u = a6
        .scaled(b(13))
        .add(&a4.scaled(b(11)))
        .add(&a2.scaled(b(9)));
    let u = a6
        .matmul(&inner_u)?
        .add(&a6.scaled(b(7)))
        .add(&a4.scaled(b(5)))
        .add(&a2.scaled(b(3)))
        .add(&id.scaled(b(1)));
    let u = a.matmul(&u)?;

    let inner_v = a6
        .scaled(b(12))
        .add(&a4.scaled(b(10)))
        .add(&a2.scaled(b(8)));
    let v = a6
        .matmul(&inner_v)?
        .add(&a6.scaled(b(6)))
        .add(&a4.scaled(b(4)))
        .add(&a2.scaled(b(2)))
        .add(&id.scaled(b(0)));

    let mut r = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..s {
        r = r.matmul(&r)?;
        if !r.max_abs().is_finite() {
            return Err(Error::Overflow("squaring the Padé approximant"));
        }
    }
    if !r.max_abs().is_finite() {
        return Err(Error::Overflow("evaluating the Padé approximant"));
    }
    Ok(r)
}

/// Returns `φ_p(z T) e_1`.
///
/// For `p ≥ 1` the exponential of the augmented matrix
/// `[[zT, e_1 0…0], [0, J_p]]` is formed, `J_p` being the `p×p` upper shift;
/// its last column carries `φ_p(zT) e_1` in the leading block.
pub fn phi_dense(t: &DenseMatrix, z: C64, p: usize) -> Result<Vec<C64>> {
    if !t.is_square() {
        return Err(Error::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        });
    }
    let m = t.rows();
    if p == 0 {
        return Ok(expm_dense(t, z)?.column(0));
    }
    let size = m + p;
    let mut aug = DenseMatrix::zeros(size, size);
    for i in 0..m {
        for j in 0..m {
            aug[(i, j)] = z * t[(i, j)];
        }
    }
    let one = C64::new(1.0, 0.0);
    if m > 0 {
        aug[(0, m)] = one;
    }
    for k in 0..p - 1 {
        aug[(m + k, m + k + 1)] = one;
    }
    let e = pade13_expm(&aug)?;
    Ok((0..m).map(|i| e[(i, size - 1)]).collect())
}

/// Scalar `φ_p(z) = Σ_k z^k / (k+p)!`.
pub fn phi_scalar(z: C64, p: usize) -> C64 {
    if z.norm() < 1.0 {
        // series; terms shrink at least like 1/k!
        let mut term = C64::new(1.0 / factorial(p), 0.0);
        let mut sum = term;
        for k in 1..60 {
            term *= z / (k + p) as f64;
            sum += term;
            if term.norm() <= f64::EPSILON * 1e-3 * sum.norm() {
                break;
            }
        }
        return sum;
    }
    let mut phi = z.exp();
    for k in 1..=p {
        phi = (phi - 1.0 / factorial(k - 1)) / z;
    }
    phi
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = expm_dense(&DenseMatrix::zeros(4, 4), c(1.0)).unwrap();
        assert_eq!(e, DenseMatrix::identity(4));
    }

    #[test]
    fn exp_of_diagonal() {
        let t = DenseMatrix::diag(&[c(0.3), c(-2.0)]);
        let e = expm_dense(&t, c(1.0)).unwrap();
        assert!((e[(0, 0)] - c(0.3f64.exp())).norm() < 1e-15);
        assert!((e[(1, 1)] - c((-2.0f64).exp())).norm() < 1e-15);
        assert!(e[(0, 1)].norm() < 1e-16);
    }

    #[test]
    fn exp_of_nilpotent_is_truncated_series() {
        let t = DenseMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        for &s in &[0.1, 1.0, 7.5, 40.0] {
            let e = expm_dense(&t, c(s)).unwrap();
            assert!((e[(0, 1)] - c(s)).norm() <= 1e-14 * s);
            assert!((e[(0, 0)] - c(1.0)).norm() < 1e-14);
            assert!(e[(1, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            expm_dense(&DenseMatrix::zeros(2, 3), c(1.0)),
            Err(Error::NotSquare { .. })
        ));
        assert!(phi_dense(&DenseMatrix::zeros(3, 2), c(1.0), 1).is_err());
    }

    #[test]
    fn large_norm_overflows_explicitly() {
        let t = DenseMatrix::from_real_rows(&[&[800.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(pade13_expm(&t), Err(Error::Overflow(_))));
    }

    #[test]
    fn phi_of_zero_matrix() {
        for p in 0..5 {
            let v = phi_dense(&DenseMatrix::zeros(3, 3), c(1.0), p).unwrap();
            assert!((v[0] - c(1.0 / factorial(p))).norm() < 1e-15);
            assert!(v[1].norm() < 1e-16 && v[2].norm() < 1e-16);
        }
    }

    #[test]
    fn phi1_scalar_closed_form() {
        for &z in &[
            C64::new(0.3, 0.0),
            C64::new(-4.0, 1.0),
            C64::new(0.0, 2.5),
            C64::new(1e-6, 0.0),
        ] {
            let t = DenseMatrix::from_row_major(1, 1, vec![z]).unwrap();
            let v = phi_dense(&t, c(1.0), 1).unwrap()[0];
            let expected = if z.norm() < 1e-4 {
                c(1.0) + z / 2.0 + z * z / 6.0
            } else {
                (z.exp() - 1.0) / z
            };
            assert!((v - expected).norm() < 1e-14, "z = {z}");
            assert!((phi_scalar(z, 1) - expected).norm() < 1e-14, "z = {z}");
        }
    }
}
