use super::{DenseMatrix, C64};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Symmetry metadata carried by an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Hermitian,
    General,
}

/// Anything that can apply a square complex matrix to a vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; both slices have length `dim()`.
    fn apply_into(&self, x: &[C64], y: &mut [C64]);

    fn symmetry(&self) -> Symmetry;

    /// Maximum absolute column sum.
    fn norm_1(&self) -> f64;

    /// Maximum absolute row sum.
    fn norm_inf(&self) -> f64;

    fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.apply_into(x, &mut y);
        Ok(y)
    }
}

/// Square complex matrix in compressed sparse row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    symmetry: Symmetry,
}

/// Tolerance for the Hermitian flag check (elementwise).
pub const HERMITIAN_TOL: f64 = 1e-12;

impl SparseOperator {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped, so `nnz()` counts structurally nonzero entries.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, C64)],
        symmetry: Symmetry,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "index ({i}, {j}) out of range for n = {n}"
                )));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite("sparse operator entry"));
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = C64::new(0.0, 0.0);
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != C64::new(0.0, 0.0) {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let op = Self {
            n,
            row_ptr,
            col_idx,
            values,
            symmetry,
        };
        op.validate()?;
        Ok(op)
    }

    /// Takes raw CSR arrays; validated like any other constructor.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<C64>,
        symmetry: Symmetry,
    ) -> Result<Self> {
        let op = Self {
            n,
            row_ptr,
            col_idx,
            values,
            symmetry,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, C64::new(1.0, 0.0))
    }

    pub fn scaled_identity(n: usize, alpha: C64) -> Self {
        let symmetry = if alpha.im == 0.0 {
            Symmetry::Hermitian
        } else {
            Symmetry::General
        };
        let trip: Vec<_> = (0..n).map(|i| (i, i, alpha)).collect();
        Self::from_triplets(n, &trip, symmetry).expect("scaled identity is well formed")
    }

    /// Real tridiagonal Toeplitz matrix `tridiag(sub, diag, sup)`.
    pub fn tridiag_toeplitz(
        n: usize,
        sub: f64,
        diag: f64,
        sup: f64,
        symmetry: Symmetry,
    ) -> Result<Self> {
        let mut trip = Vec::with_capacity(3 * n);
        for i in 0..n {
            if i > 0 {
                trip.push((i, i - 1, C64::new(sub, 0.0)));
            }
            trip.push((i, i, C64::new(diag, 0.0)));
            if i + 1 < n {
                trip.push((i, i + 1, C64::new(sup, 0.0)));
            }
        }
        Self::from_triplets(n, &trip, symmetry)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.row_ptr.len() != n + 1 || self.row_ptr[0] != 0 {
            return Err(Error::InvalidArgument("row pointer array malformed".into()));
        }
        if self.row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "row pointers must be nondecreasing".into(),
            ));
        }
        if self.row_ptr[n] != self.col_idx.len() || self.col_idx.len() != self.values.len() {
            return Err(Error::InvalidArgument("CSR array lengths disagree".into()));
        }
        if self.col_idx.iter().any(|&j| j >= n) {
            return Err(Error::InvalidArgument("column index out of range".into()));
        }
        if !super::all_finite(&self.values) {
            return Err(Error::NonFinite("sparse operator entry"));
        }
        if self.symmetry == Symmetry::Hermitian && self.hermitian_defect() > HERMITIAN_TOL {
            return Err(Error::InvalidArgument(
                "operator flagged Hermitian but A != A^*".into(),
            ));
        }
        Ok(())
    }

    /// `max |A_ij - conj(A_ji)|` over the stored pattern.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let mirror = self.get(j, i);
                worst = worst.max((self.values[k] - mirror.conj()).norm());
            }
        }
        worst
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Iterates stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Result<Self> {
        self.symmetry = symmetry;
        self.validate()?;
        Ok(self)
    }

    /// `y = A^* x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for (i, xi) in x.iter().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k].conj() * xi;
            }
        }
        Ok(y)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = C64::new(0.0, 0.0);
            for (v, &j) in self.values[lo..hi].iter().zip(&self.col_idx[lo..hi]) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    fn norm_1(&self) -> f64 {
        let mut colsum = vec![0.0; self.n];
        for (&j, v) in self.col_idx.iter().zip(&self.values) {
            colsum[j] += v.norm();
        }
        colsum.into_iter().fold(0.0, f64::max)
    }

    fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}
