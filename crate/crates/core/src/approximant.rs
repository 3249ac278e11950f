//! Standard and corrected Krylov approximations of `φ_p(σtA)v`, together
//! with the defect scalar `δ_m(t) = e_m^* e^{σtT_m} e_1`.

use crate::error::{Error, Result};
use crate::krylov::{KrylovDecomposition, KrylovMode};
use crate::linalg::expm::THETA_13;
use crate::linalg::{
    axpy, dot, norm2, phi_dense, phi_scalar, symtrid_eig, DenseMatrix, LinearOperator, Prefactor,
    Symmetry, TridiagEigen, C64,
};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxKind {
    Standard,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectSample {
    pub t: f64,
    pub delta: C64,
    pub delta_prime: C64,
    /// `‖e^{σtT_m} e_1‖₂`, the scale for the round-off floor.
    pub y_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveOrder {
    pub rho: f64,
    /// False when `|δ_m(t)|` sits at the round-off floor.
    pub reliable: bool,
}

/// `A v_{m+1}` with the two scalars the estimators need.
#[derive(Debug, Clone)]
pub struct NextImage {
    pub vector: Vec<C64>,
    pub norm: f64,
    /// `⟨v_{m+1}, A v_{m+1}⟩`
    pub inner: C64,
}

/// Relative threshold on `|δ|/‖y‖` below which `ρ(t)` is not trusted.
pub const RHO_FLOOR: f64 = 1e3 * f64::EPSILON;

pub struct Approximant<'a> {
    dec: &'a KrylovDecomposition,
    op: &'a dyn LinearOperator,
    sigma: Prefactor,
    kind: ApproxKind,
    p: usize,
    nonexpansive: bool,
    t_dense: DenseMatrix,
    t_norm1: f64,
    eig: OnceLock<Option<TridiagEigen>>,
    next_image: OnceLock<NextImage>,
}

impl<'a> Approximant<'a> {
    pub fn new(
        dec: &'a KrylovDecomposition,
        op: &'a dyn LinearOperator,
        sigma: Prefactor,
        kind: ApproxKind,
        p: usize,
    ) -> Result<Self> {
        if op.dim() != dec.n() {
            return Err(Error::DimensionMismatch {
                expected: dec.n(),
                actual: op.dim(),
            });
        }
        if dec.m() == 0 {
            return Err(Error::InvalidArgument("empty Krylov decomposition".into()));
        }
        if kind == ApproxKind::Corrected && dec.v_next().is_none() {
            return Err(Error::MissingNextVector);
        }
        Ok(Self {
            dec,
            op,
            sigma,
            kind,
            p,
            nonexpansive: false,
            t_norm1: dec.t_matrix().norm1(),
            t_dense: dec.t_matrix(),
            eig: OnceLock::new(),
            next_image: OnceLock::new(),
        })
    }

    pub fn standard(
        dec: &'a KrylovDecomposition,
        op: &'a dyn LinearOperator,
        sigma: Prefactor,
    ) -> Result<Self> {
        Self::new(dec, op, sigma, ApproxKind::Standard, 0)
    }

    /// Caller assertion that `μ₂(σA) ≤ 0`; enables the proven-bound flags.
    pub fn with_nonexpansive(mut self, flag: bool) -> Self {
        self.nonexpansive = flag;
        self
    }

    pub fn dec(&self) -> &KrylovDecomposition {
        self.dec
    }

    pub fn op(&self) -> &dyn LinearOperator {
        self.op
    }

    pub fn sigma(&self) -> Prefactor {
        self.sigma
    }

    pub fn kind(&self) -> ApproxKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.dec.m()
    }

    pub fn nonexpansive(&self) -> bool {
        self.nonexpansive
    }

    /// Nonexpansive with `σA` Hermitian (Hermitian `A` and real `σ`).
    pub fn hermitian_nonexpansive(&self) -> bool {
        self.nonexpansive && self.op.symmetry() == Symmetry::Hermitian && self.sigma.is_real()
    }

    pub fn t_matrix(&self) -> &DenseMatrix {
        &self.t_dense
    }

    fn eigen(&self) -> Option<&TridiagEigen> {
        self.eig
            .get_or_init(|| {
                let tri = self.dec.tridiagonal()?;
                symtrid_eig(&tri).ok()
            })
            .as_ref()
    }

    /// `φ_q(σtT_m) e_1`.
    ///
    /// In Lanczos mode the eigendecomposition of `T_m` is reused once
    /// `‖tT_m‖₁` exceeds the Padé scaling threshold; below it the Padé path
    /// is kept because it resolves tiny trailing entries to full relative
    /// accuracy, while the eigen sum cancels down to `ε`.
    pub fn projected(&self, t: f64, q: usize) -> Result<Vec<C64>> {
        check_t(t)?;
        let z = self.sigma.value() * t;
        if self.dec.mode() == KrylovMode::Lanczos && t * self.t_norm1 > THETA_13 {
            if let Some(eig) = self.eigen() {
                let m = eig.dim();
                let w: Vec<C64> = (0..m)
                    .map(|k| phi_scalar(z * eig.values[k], q) * eig.vector(0, k))
                    .collect();
                return Ok((0..m)
                    .map(|i| (0..m).map(|k| w[k] * eig.vector(i, k)).sum())
                    .collect());
            }
        }
        phi_dense(&self.t_dense, z, q)
    }

    /// `A v_{m+1}`, computed once on first use.
    pub fn next_image(&self) -> Result<&NextImage> {
        let v = self.dec.v_next().ok_or(Error::MissingNextVector)?;
        Ok(self.next_image.get_or_init(|| {
            let vector = self
                .op
                .matvec(v)
                .expect("dimension checked at construction");
            let norm = norm2(&vector);
            let inner = dot(v, &vector);
            NextImage {
                vector,
                norm,
                inner,
            }
        }))
    }

    /// Matvecs spent beyond the Krylov build (0 or 1).
    pub fn extra_matvecs(&self) -> usize {
        usize::from(self.next_image.get().is_some())
    }

    /// `V_m φ_p(σtT_m) e_1`, or the corrected `V̄_m φ_p(σtT̄_m) e_1`.
    pub fn apply(&self, t: f64) -> Result<Vec<C64>> {
        let y = self.projected(t, self.p)?;
        let mut out = vec![C64::new(0.0, 0.0); self.dec.n()];
        for (yj, vj) in y.iter().zip(self.dec.basis()) {
            axpy(*yj, vj, &mut out);
        }
        if self.kind == ApproxKind::Corrected {
            let m = self.m();
            let last = self.projected(t, self.p + 1)?[m - 1];
            let c = self.sigma.value() * t * self.dec.tau_next() * last;
            axpy(
                c,
                self.dec.v_next().ok_or(Error::MissingNextVector)?,
                &mut out,
            );
        }
        Ok(out)
    }

    pub fn defect(&self, t: f64) -> Result<DefectSample> {
        let m = self.m();
        if m < 2 {
            return Err(Error::InvalidArgument(
                "defect derivative needs m ≥ 2".into(),
            ));
        }
        let y = self.projected(t, 0)?;
        let tm = &self.t_dense;
        let delta = y[m - 1];
        let delta_prime =
            self.sigma.value() * (tm[(m - 1, m - 1)] * y[m - 1] + tm[(m - 1, m - 2)] * y[m - 2]);
        Ok(DefectSample {
            t,
            delta,
            delta_prime,
            y_norm: norm2(&y),
        })
    }

    /// `D_m(t) v = σ τ δ_m(t) v_{m+1}`.
    pub fn defect_vector(&self, t: f64) -> Result<Vec<C64>> {
        let d = self.defect(t)?;
        let v = match self.dec.v_next() {
            Some(v) => v,
            None => return Ok(vec![C64::new(0.0, 0.0); self.dec.n()]),
        };
        let c = self.sigma.value() * self.dec.tau_next() * d.delta;
        Ok(v.iter().map(|x| c * x).collect())
    }

    /// `ρ(t) = t |δ_m|′ / |δ_m|`, from the exact derivative of the
    /// projected exponential.
    pub fn effective_order(&self, t: f64) -> Result<EffectiveOrder> {
        let d = self.defect(t)?;
        Ok(effective_order_of(&d))
    }
}

pub fn effective_order_of(d: &DefectSample) -> EffectiveOrder {
    let a2 = d.delta.norm_sqr();
    let reliable = d.t > 0.0 && d.delta.norm() >= RHO_FLOOR * d.y_norm && a2 > 0.0;
    let rho = if a2 > 0.0 {
        d.t * (d.delta.conj() * d.delta_prime).re / a2
    } else {
        f64::NAN
    };
    EffectiveOrder { rho, reliable }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{build_krylov, KrylovConfig};
    use crate::linalg::{expm_dense, SparseOperator};

    fn unit(n: usize) -> Vec<C64> {
        let v: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0 + (0.9 * i as f64).sin(), (0.4 * i as f64).cos()))
            .collect();
        let nv = norm2(&v);
        v.into_iter().map(|z| z / nv).collect()
    }

    fn laplacian(n: usize) -> SparseOperator {
        SparseOperator::tridiag_toeplitz(n, -0.25, 0.5, -0.25, Symmetry::Hermitian).unwrap()
    }

    #[test]
    fn zero_time_returns_start_vector() {
        let a = laplacian(30);
        let v = unit(30);
        let dec = build_krylov(&a, &v, &KrylovConfig::new(6)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::minus_i()).unwrap();
        let y = ap.apply(0.0).unwrap();
        for (a, b) in y.iter().zip(&v) {
            assert!((a - b).norm() <= 1e-15);
        }
        assert_eq!(ap.defect(0.0).unwrap().delta.norm(), 0.0);
        assert!(ap.apply(-1.0).is_err());
    }

    #[test]
    fn scaled_identity_is_exact() {
        let alpha = 0.7;
        let a = SparseOperator::scaled_identity(10, C64::new(alpha, 0.0));
        let v = unit(10);
        let dec = build_krylov(&a, &v, &KrylovConfig::new(4)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::minus_i()).unwrap();
        for t in [0.1, 1.0, 13.0] {
            let y = ap.apply(t).unwrap();
            let f = (C64::new(0.0, -1.0) * alpha * t).exp();
            for (a, b) in y.iter().zip(&v) {
                assert!((a - f * b).norm() <= 1e-14);
            }
        }
        assert!(matches!(
            Approximant::new(&dec, &a, Prefactor::one(), ApproxKind::Corrected, 0),
            Err(Error::MissingNextVector)
        ));
    }

    #[test]
    fn two_by_two_defect_matches_closed_form() {
        // n = m = 2 so that the Krylov space is the whole space
        let (a_, b_, c_) = (0.3, 0.8, -0.5);
        let trip = [
            (0, 0, C64::new(a_, 0.0)),
            (0, 1, C64::new(b_, 0.0)),
            (1, 0, C64::new(b_, 0.0)),
            (1, 1, C64::new(c_, 0.0)),
        ];
        let op = SparseOperator::from_triplets(2, &trip, Symmetry::Hermitian).unwrap();
        let e1 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let dec = build_krylov(&op, &e1, &KrylovConfig::new(2)).unwrap();
        assert_eq!(dec.m(), 2);
        let ap = Approximant::standard(&dec, &op, Prefactor::one()).unwrap();
        let t = 0.7;
        // e^{tM}_{21} = b sinh(t d)/d · e^{t(a+c)/2}, d = sqrt(((a-c)/2)^2 + b^2)
        let d = (((a_ - c_) / 2.0f64).powi(2) + b_ * b_).sqrt();
        let exact = b_ * (t * d).sinh() / d * (t * (a_ + c_) / 2.0).exp();
        let got = ap.defect(t).unwrap().delta;
        assert!((got.re - exact).abs() <= 1e-14 && got.im.abs() <= 1e-15);
    }

    #[test]
    fn hermitian_positive_sigma_gives_positive_defect() {
        let a = laplacian(50);
        let dec = build_krylov(&a, &unit(50), &KrylovConfig::new(8)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::one()).unwrap();
        for t in [1e-3, 0.1, 1.0, 10.0] {
            let d = ap.defect(t).unwrap().delta;
            assert!(d.re > 0.0 && d.im == 0.0);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let a = SparseOperator::tridiag_toeplitz(40, 0.2, -1.0, 0.9, Symmetry::General).unwrap();
        let dec = build_krylov(&a, &unit(40), &KrylovConfig::new(6)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::minus_i()).unwrap();
        let (t, h) = (0.8, 1e-5);
        let fd = (ap.defect(t + h).unwrap().delta - ap.defect(t - h).unwrap().delta) / (2.0 * h);
        let d = ap.defect(t).unwrap().delta_prime;
        assert!((fd - d).norm() <= 1e-7 * d.norm());
    }

    #[test]
    fn effective_order_tends_to_m_minus_one() {
        let a = laplacian(60);
        let dec = build_krylov(&a, &unit(60), &KrylovConfig::new(7)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::minus_i()).unwrap();
        let r = ap.effective_order(0.3).unwrap();
        assert!(r.reliable);
        assert!(r.rho < 6.0 && r.rho > 5.95, "{}", r.rho);
        assert!(!ap.effective_order(1e-2).unwrap().reliable);
        assert!(!ap.effective_order(0.0).unwrap().reliable);
    }

    #[test]
    fn projected_paths_agree() {
        let a = laplacian(40);
        let dec = build_krylov(&a, &unit(40), &KrylovConfig::new(9)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::minus_i()).unwrap();
        for p in 0..4 {
            let eig = ap.projected(25.0, p).unwrap();
            let pade = phi_dense(ap.t_matrix(), C64::new(0.0, -25.0), p).unwrap();
            for (x, y) in eig.iter().zip(&pade) {
                assert!((x - y).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn corrected_matches_extended_projection() {
        let a = SparseOperator::tridiag_toeplitz(30, 0.5, -1.0, 0.3, Symmetry::General).unwrap();
        let dec = build_krylov(&a, &unit(30), &KrylovConfig::new(5)).unwrap();
        let sigma = Prefactor::minus_one();
        let t = 0.6;
        for p in 0..3 {
            let ap = Approximant::new(&dec, &a, sigma, ApproxKind::Corrected, p).unwrap();
            let got = ap.apply(t).unwrap();
            // T̄ = [[T, 0], [τ e_m^*, 0]] with basis [V, v_{m+1}]
            let m = dec.m();
            let mut tbar = DenseMatrix::zeros(m + 1, m + 1);
            let tm = dec.t_matrix();
            for i in 0..m {
                for j in 0..m {
                    tbar[(i, j)] = tm[(i, j)];
                }
            }
            tbar[(m, m - 1)] = C64::new(dec.tau_next(), 0.0);
            let y = if p == 0 {
                expm_dense(&tbar, sigma.value() * t).unwrap().column(0)
            } else {
                phi_dense(&tbar, sigma.value() * t, p).unwrap()
            };
            let mut want = vec![C64::new(0.0, 0.0); 30];
            for (k, v) in dec
                .basis()
                .iter()
                .chain(std::iter::once(&dec.v_next().unwrap().to_vec()))
                .enumerate()
            {
                axpy(y[k], v, &mut want);
            }
            let err: f64 = got
                .iter()
                .zip(&want)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err <= 1e-14, "p = {p}: {err}");
        }
    }

    #[test]
    fn next_image_is_cached() {
        let a = laplacian(20);
        let dec = build_krylov(&a, &unit(20), &KrylovConfig::new(4)).unwrap();
        let ap = Approximant::standard(&dec, &a, Prefactor::minus_i()).unwrap();
        assert_eq!(ap.extra_matvecs(), 0);
        let n1 = ap.next_image().unwrap().norm;
        let n2 = ap.next_image().unwrap().norm;
        assert_eq!(n1, n2);
        assert_eq!(ap.extra_matvecs(), 1);
    }
}
