//! Real symmetric tridiagonal eigensolver (implicit QL with Wilkinson-type
//! shifts) and a Householder reduction of dense Hermitian matrices to that
//! form.

use super::{DenseMatrix, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i+1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.len() != off.len() + 1 && !(diag.is_empty() && off.is_empty()) {
            return Err(Error::DimensionMismatch {
                expected: diag.len().saturating_sub(1),
                actual: off.len(),
            });
        }
        if diag.iter().chain(&off).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("tridiagonal matrix"));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Recognises a real symmetric tridiagonal dense matrix; entries outside
    /// the band and imaginary parts must not exceed `tol` in magnitude.
    pub fn from_dense(t: &DenseMatrix, tol: f64) -> Option<Self> {
        if !t.is_square() {
            return None;
        }
        let n = t.rows();
        for i in 0..n {
            for j in 0..n {
                let z = t[(i, j)];
                if z.im.abs() > tol {
                    return None;
                }
                if i.abs_diff(j) > 1 && z.re.abs() > tol {
                    return None;
                }
                if j == i + 1 && (z.re - t[(j, i)].re).abs() > tol {
                    return None;
                }
            }
        }
        let diag = (0..n).map(|i| t[(i, i)].re).collect();
        let off = (1..n).map(|i| t[(i, i - 1)].re).collect();
        Some(Self { diag, off })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut d = DenseMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = C64::new(self.diag[i], 0.0);
        }
        for (i, &b) in self.off.iter().enumerate() {
            d[(i + 1, i)] = C64::new(b, 0.0);
            d[(i, i + 1)] = C64::new(b, 0.0);
        }
        d
    }
}

/// Eigendecomposition `T = Q Λ Qᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    /// Row-major `n×n`; column `k` is the eigenvector of `values[k]`.
    vectors: Vec<f64>,
    n: usize,
}

impl TridiagEigen {
    pub fn vector(&self, row: usize, k: usize) -> f64 {
        self.vectors[row * self.n + k]
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

pub fn symtrid_eig(t: &SymTridiagonal) -> Result<TridiagEigen> {
    let n = t.dim();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let mut d = t.diag.clone();
    tql(&mut d, &t.off, Some(&mut q))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = q[i * n + old_k];
        }
    }
    Ok(TridiagEigen { values, vectors, n })
}

/// Eigenvalues only, ascending.
pub fn symtrid_eigvals(t: &SymTridiagonal) -> Result<Vec<f64>> {
    let mut d = t.diag.clone();
    tql(&mut d, &t.off, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Implicit QL iteration on `(d, off)`; accumulates rotations into the
/// row-major `q` when given.
fn tql(d: &mut [f64], off: &[f64], mut q: Option<&mut Vec<f64>>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(Error::NoConvergence {
                        what: "tridiagonal QL",
                        iterations: iter - 1,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(q) = q.as_deref_mut() {
                        for k in 0..n {
                            let row = &mut q[k * n..(k + 1) * n];
                            let h = row[i + 1];
                            row[i + 1] = s * row[i] + c * h;
                            row[i] = c * row[i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Eigenvalues of a dense Hermitian matrix (ascending): Householder
/// reduction to real symmetric tridiagonal form followed by QL.
///
/// `O(n³)`; intended for verification runs, not for the hot path.
pub fn hermitian_eigvals(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // column-major working copy of the full matrix; only the trailing block
    // is touched at each step
    let mut w = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            w[j * n + i] = a[(i, j)];
        }
    }
    let at = |w: &Vec<C64>, i: usize, j: usize| w[j * n + i];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![C64::new(0.0, 0.0); n];
    let mut p = vec![C64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(1) {
        diag[k] = at(&w, k, k).re;
        let lo = k + 1;
        let col = &w[k * n + lo..(k + 1) * n];
        let xnorm = super::norm2(col);
        if n - lo == 1 || xnorm == 0.0 {
            off[k] = col[0].norm();
            continue;
        }
        let x0 = col[0];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        off[k] = alpha.norm();
        // v = x - alpha e1, normalised to unit length
        for (vi, xi) in v[lo..].iter_mut().zip(col) {
            *vi = *xi;
        }
        v[lo] -= alpha;
        let vn = super::norm2(&v[lo..]);
        if vn == 0.0 {
            continue;
        }
        for vi in &mut v[lo..] {
            *vi /= vn;
        }
        // p = 2 A v on the trailing block (column-major: accumulate columns)
        for pi in &mut p[lo..] {
            *pi = C64::new(0.0, 0.0);
        }
        for j in lo..n {
            let vj = v[j] * 2.0;
            let colj = &w[j * n + lo..(j + 1) * n];
            for (pi, aij) in p[lo..].iter_mut().zip(colj) {
                *pi += aij * vj;
            }
        }
        let vp: C64 = super::dot(&v[lo..], &p[lo..]);
        // w = p - (v^* p) v   (τ/2 = 1)
        for i in lo..n {
            p[i] -= vp * v[i];
        }
        // A -= v w^* + w v^*
        for j in lo..n {
            let wj = p[j].conj();
            let vjc = v[j].conj();
            let colj = &mut w[j * n + lo..(j + 1) * n];
            for ((aij, vi), wi) in colj.iter_mut().zip(&v[lo..]).zip(&p[lo..]) {
                *aij -= vi * wj + wi * vjc;
            }
        }
    }
    diag[n - 1] = at(&w, n - 1, n - 1).re;
    symtrid_eigvals(&SymTridiagonal { diag, off })
}
