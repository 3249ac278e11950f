//! Arnoldi and Lanczos construction of the Krylov decomposition
//! `A V_m = V_m T_m + τ_{m+1,m} v_{m+1} e_m^*`.

use crate::error::{Error, Result};
use crate::linalg::{
    axpy, dot, hermitian_eigvals, norm2, DenseMatrix, LinearOperator, SymTridiagonal, Symmetry, C64,
};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KrylovMode {
    Arnoldi,
    Lanczos,
    /// Lanczos when the operator is flagged Hermitian, Arnoldi otherwise.
    Auto,
}

/// Orthogonalization policy.
///
/// For Lanczos, `None` is the plain three-term recurrence; `Full` adds one
/// modified Gram–Schmidt sweep against all previous vectors and `Twice` two.
/// Arnoldi always orthogonalizes against the full basis; `Twice` adds the
/// second sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reorthogonalization {
    None,
    Full,
    Twice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovConfig {
    pub m_max: usize,
    pub mode: KrylovMode,
    pub reorthogonalize: Reorthogonalization,
    /// `None` selects `n · ε · ‖A‖`, with `‖A‖` estimated on the fly.
    pub breakdown_tol: Option<f64>,
}

impl KrylovConfig {
    /// Auto mode; two Gram–Schmidt sweeps above dimension 20, one below.
    pub fn new(m_max: usize) -> Self {
        let reorthogonalize = if m_max > 20 {
            Reorthogonalization::Twice
        } else {
            Reorthogonalization::Full
        };
        Self {
            m_max,
            mode: KrylovMode::Auto,
            reorthogonalize,
            breakdown_tol: None,
        }
    }

    pub fn with_mode(mut self, mode: KrylovMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_reorthogonalization(mut self, r: Reorthogonalization) -> Self {
        self.reorthogonalize = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(Error::InvalidArgument("m_max must be at least 1".into()));
        }
        if let Some(tol) = self.breakdown_tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::InvalidArgument(
                    "breakdown_tol must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovDecomposition {
    mode: KrylovMode,
    reorth: Reorthogonalization,
    fixed_tol: Option<f64>,
    m_max: usize,
    basis: Vec<Vec<C64>>,
    next: Option<Vec<C64>>,
    /// Column `j` holds `h_{0..=j, j}`; the subdiagonal lives in `subdiag`.
    hess: Vec<Vec<C64>>,
    /// `subdiag[j] = h_{j+1, j}`; the last entry is `τ_{m+1,m}`.
    subdiag: Vec<f64>,
    breakdown: bool,
    matvecs: usize,
    norm_estimate: f64,
}

impl KrylovDecomposition {
    /// Starts an empty decomposition from the unit vector `v`.
    fn start<O: LinearOperator + ?Sized>(op: &O, v: &[C64], cfg: &KrylovConfig) -> Result<Self> {
        cfg.validate()?;
        if v.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                actual: v.len(),
            });
        }
        let nv = norm2(v);
        if (nv - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(nv));
        }
        let mode = match cfg.mode {
            KrylovMode::Auto if op.symmetry() == Symmetry::Hermitian => KrylovMode::Lanczos,
            KrylovMode::Auto => KrylovMode::Arnoldi,
            KrylovMode::Lanczos if op.symmetry() != Symmetry::Hermitian => {
                return Err(Error::NotHermitian)
            }
            m => m,
        };
        Ok(Self {
            mode,
            reorth: cfg.reorthogonalize,
            fixed_tol: cfg.breakdown_tol,
            m_max: cfg.m_max,
            basis: Vec::with_capacity(cfg.m_max),
            next: Some(v.to_vec()),
            hess: Vec::with_capacity(cfg.m_max),
            subdiag: Vec::with_capacity(cfg.m_max),
            breakdown: false,
            matvecs: 0,
            norm_estimate: 0.0,
        })
    }

    /// One Arnoldi/Lanczos step: appends `v_{m+1}` to the basis and produces
    /// the next candidate vector.
    fn step<O: LinearOperator + ?Sized>(&mut self, op: &O) {
        let vj = self.next.take().expect("step called after breakdown");
        let j = self.basis.len();
        let mut w = vec![C64::new(0.0, 0.0); vj.len()];
        op.apply_into(&vj, &mut w);
        self.matvecs += 1;
        self.norm_estimate = self.norm_estimate.max(norm2(&w));
        self.basis.push(vj);

        let mut col = vec![C64::new(0.0, 0.0); j + 1];
        match self.mode {
            KrylovMode::Lanczos => {
                if j > 0 {
                    let b = self.subdiag[j - 1];
                    axpy(C64::new(-b, 0.0), &self.basis[j - 1], &mut w);
                    col[j - 1] = C64::new(b, 0.0);
                }
                let alpha = dot(&self.basis[j], &w).re;
                axpy(C64::new(-alpha, 0.0), &self.basis[j], &mut w);
                col[j] = C64::new(alpha, 0.0);
                let sweeps = match self.reorth {
                    Reorthogonalization::None => 0,
                    Reorthogonalization::Full => 1,
                    Reorthogonalization::Twice => 2,
                };
                // corrections are discarded so that T stays real tridiagonal
                for _ in 0..sweeps {
                    for q in &self.basis {
                        let c = dot(q, &w);
                        axpy(-c, q, &mut w);
                    }
                }
            }
            KrylovMode::Arnoldi | KrylovMode::Auto => {
                let sweeps = if self.reorth == Reorthogonalization::Twice {
                    2
                } else {
                    1
                };
                for _ in 0..sweeps {
                    for (i, q) in self.basis.iter().enumerate() {
                        let c = dot(q, &w);
                        axpy(-c, q, &mut w);
                        col[i] += c;
                    }
                }
            }
        }
        self.hess.push(col);

        let beta = norm2(&w);
        let tol = self
            .fixed_tol
            .unwrap_or(w.len() as f64 * f64::EPSILON * self.norm_estimate);
        if beta <= tol {
            self.breakdown = true;
            self.subdiag.push(0.0);
        } else {
            w.iter_mut().for_each(|z| *z /= beta);
            self.subdiag.push(beta);
            self.next = Some(w);
        }
    }

    pub fn m(&self) -> usize {
        self.basis.len()
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn n(&self) -> usize {
        self.basis
            .first()
            .or(self.next.as_ref())
            .map_or(0, Vec::len)
    }

    pub fn mode(&self) -> KrylovMode {
        self.mode
    }

    pub fn reorthogonalization(&self) -> Reorthogonalization {
        self.reorth
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    /// `v_{m+1}`; absent after breakdown.
    pub fn v_next(&self) -> Option<&[C64]> {
        if self.breakdown {
            None
        } else {
            self.next.as_deref()
        }
    }

    /// `τ_{m+1,m}`; zero after breakdown.
    pub fn tau_next(&self) -> f64 {
        self.subdiag.last().copied().unwrap_or(0.0)
    }

    /// Subdiagonal entries of `T_m` (length `m - 1`).
    pub fn subdiagonal(&self) -> &[f64] {
        &self.subdiag[..self.m().saturating_sub(1)]
    }

    /// `ln γ_m` with `γ_m = ∏ (T_m)_{j+1,j}`; the empty product gives 0.
    pub fn log_gamma(&self) -> f64 {
        self.subdiagonal().iter().map(|b| b.ln()).sum()
    }

    pub fn gamma(&self) -> f64 {
        self.log_gamma().exp()
    }

    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    /// Running estimate of `‖A‖₂` (largest `‖A v_j‖₂` seen).
    pub fn norm_estimate(&self) -> f64 {
        self.norm_estimate
    }

    /// `T_m` as a dense `m×m` matrix.
    pub fn t_matrix(&self) -> DenseMatrix {
        let m = self.m();
        let mut t = DenseMatrix::zeros(m, m);
        for (j, col) in self.hess.iter().enumerate() {
            for (i, &h) in col.iter().enumerate() {
                t[(i, j)] = h;
            }
            if j + 1 < m {
                t[(j + 1, j)] = C64::new(self.subdiag[j], 0.0);
            }
        }
        t
    }

    /// `T_m` in tridiagonal storage (Lanczos mode only).
    pub fn tridiagonal(&self) -> Option<SymTridiagonal> {
        if self.mode != KrylovMode::Lanczos {
            return None;
        }
        let diag = self.hess.iter().map(|col| col[col.len() - 1].re).collect();
        Some(SymTridiagonal {
            diag,
            off: self.subdiagonal().to_vec(),
        })
    }

    /// `‖V_m^* V_m − I‖₂`.
    pub fn orthogonality_loss(&self) -> f64 {
        let m = self.m();
        let mut g = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let d = dot(&self.basis[i], &self.basis[j]);
                g[(i, j)] = if i == j { d - 1.0 } else { d };
            }
        }
        // symmetrise away round-off so the Hermitian reduction sees exact symmetry
        let gh = g.add(&g.adjoint()).scaled(C64::new(0.5, 0.0));
        hermitian_eigvals(&gh).map_or(f64::NAN, |ev| {
            ev.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
        })
    }

    /// Frobenius norm of `A V_m − V_m T_m − τ v_{m+1} e_m^*`.
    pub fn identity_residual<O: LinearOperator + ?Sized>(&self, op: &O) -> f64 {
        let m = self.m();
        let t = self.t_matrix();
        let mut ssq = 0.0;
        for j in 0..m {
            let mut r = op
                .matvec(&self.basis[j])
                .expect("dimension checked at build");
            for i in 0..m {
                axpy(-t[(i, j)], &self.basis[i], &mut r);
            }
            if j + 1 == m {
                if let Some(vn) = self.v_next() {
                    axpy(C64::new(-self.tau_next(), 0.0), vn, &mut r);
                }
            }
            ssq += norm2(&r).powi(2);
        }
        ssq.sqrt()
    }

    /// Extends in place by up to `steps` further iterations, stopping early
    /// on lucky breakdown.
    pub fn extend_in_place<O: LinearOperator + ?Sized>(
        &mut self,
        op: &O,
        steps: usize,
    ) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        if self.breakdown {
            return Err(Error::ExtendAfterBreakdown(self.m()));
        }
        if op.dim() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: op.dim(),
            });
        }
        if self.m() + steps > self.m_max {
            return Err(Error::InvalidArgument(format!(
                "cannot extend dimension {} by {steps} beyond m_max = {}",
                self.m(),
                self.m_max
            )));
        }
        for _ in 0..steps {
            self.step(op);
            if self.breakdown {
                break;
            }
        }
        Ok(())
    }

    /// CSV dump of `T_m` with a commented diagnostics header.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# mode={:?} m={} tau_next={:e} gamma={:e} breakdown={} matvecs={} reorth={:?}",
            self.mode,
            self.m(),
            self.tau_next(),
            self.gamma(),
            self.breakdown,
            self.matvecs,
            self.reorth
        );
        s.push_str("row,col,re,im\n");
        let t = self.t_matrix();
        for i in 0..self.m() {
            for j in 0..self.m() {
                let z = t[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    let _ = writeln!(s, "{},{},{:e},{:e}", i + 1, j + 1, z.re, z.im);
                }
            }
        }
        s
    }
}

/// Builds a decomposition of dimension `cfg.m_max`, or smaller on lucky
/// breakdown.
pub fn build_krylov<O: LinearOperator + ?Sized>(
    op: &O,
    v: &[C64],
    cfg: &KrylovConfig,
) -> Result<KrylovDecomposition> {
    let mut dec = KrylovDecomposition::start(op, v, cfg)?;
    for _ in 0..cfg.m_max {
        dec.step(op);
        if dec.breakdown {
            break;
        }
    }
    Ok(dec)
}

/// Builds only the first `m` steps of a decomposition that may later be
/// extended up to `cfg.m_max`.
pub fn build_krylov_partial<O: LinearOperator + ?Sized>(
    op: &O,
    v: &[C64],
    cfg: &KrylovConfig,
    m: usize,
) -> Result<KrylovDecomposition> {
    let mut dec = KrylovDecomposition::start(op, v, cfg)?;
    dec.extend_in_place(op, m.min(cfg.m_max))?;
    Ok(dec)
}

pub fn extend_krylov<O: LinearOperator + ?Sized>(
    dec: &KrylovDecomposition,
    op: &O,
    steps: usize,
) -> Result<KrylovDecomposition> {
    let mut out = dec.clone();
    out.extend_in_place(op, steps)?;
    Ok(out)
}
