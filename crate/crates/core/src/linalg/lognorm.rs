use super::tridiag::{symtrid_eig, SymTridiagonal};
use super::{axpy, dot, norm2, Prefactor, SparseOperator, C64};
use crate::linalg::LinearOperator;

/// Estimate of the logarithmic 2-norm `μ₂(σA)`, the largest eigenvalue of
/// the Hermitian part `(σA + (σA)^*)/2`.
///
/// `value` is a Ritz value and therefore never above the true `μ₂`;
/// `upper = value + residual` encloses it from above. Used only to sanity
/// check the nonexpansive flag, never inside a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormEstimate {
    pub value: f64,
    pub upper: f64,
    pub converged: bool,
}

impl LogNormEstimate {
    /// Whether the estimate is compatible with `μ₂(σA) ≤ 0`.
    pub fn suggests_nonexpansive(&self) -> bool {
        if self.converged {
            self.value <= 1e-10 * self.upper.abs().max(1.0)
        } else {
            self.upper <= 0.0
        }
    }
}

const MAX_STEPS: usize = 120;

pub fn log_norm_estimate(op: &SparseOperator, sigma: Prefactor) -> LogNormEstimate {
    let n = op.n();
    if n == 0 {
        return LogNormEstimate {
            value: 0.0,
            upper: 0.0,
            converged: true,
        };
    }
    let s = sigma.value();
    let apply = |x: &[C64]| -> Vec<C64> {
        let ax = op.matvec(x).expect("dimension checked");
        let ahx = op.adjoint_matvec(x).expect("dimension checked");
        ax.iter()
            .zip(&ahx)
            .map(|(a, b)| (s * a + s.conj() * b) * 0.5)
            .collect()
    };

    let mut v: Vec<C64> = (0..n)
        .map(|i| {
            let x = i as f64;
            C64::new(1.0 + 0.5 * (1.618 * x + 0.3).sin(), 0.25 * (0.7 * x).cos())
        })
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|z| *z /= nv);

    let mut basis: Vec<Vec<C64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let steps = MAX_STEPS.min(n);
    let mut last = LogNormEstimate {
        value: f64::NAN,
        upper: f64::INFINITY,
        converged: false,
    };
    for k in 0..steps {
        let mut w = apply(&basis[k]);
        let a = dot(&basis[k], &w).re;
        alpha.push(a);
        // two passes of full reorthogonalisation
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm2(&w);
        let tri = SymTridiagonal {
            diag: alpha.clone(),
            off: beta.clone(),
        };
        let Ok(eig) = symtrid_eig(&tri) else {
            return last;
        };
        let top = eig.values.len() - 1;
        let theta = eig.values[top];
        let resid = b * eig.vector(top, top).abs();
        let scale = alpha
            .iter()
            .chain(&beta)
            .fold(1e-300_f64, |m, x| m.max(x.abs()));
        let converged = resid <= 1e-10 * scale || b <= 1e-14 * scale;
        last = LogNormEstimate {
            value: theta,
            upper: theta + resid,
            converged,
        };
        if converged {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|z| *z /= b);
        basis.push(w);
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Symmetry;

    #[test]
    fn spd_with_minus_one_is_nonpositive() {
        let a = SparseOperator::tridiag_toeplitz(40, -1.0, 2.5, -1.0, Symmetry::Hermitian).unwrap();
        let est = log_norm_estimate(&a, Prefactor::minus_one());
        assert!(est.converged);
        assert!(est.value <= 0.0);
        // smallest eigenvalue 2.5 - 2cos(π/41)
        let exact = -(2.5 - 2.0 * (std::f64::consts::PI / 41.0).cos());
        assert!((est.value - exact).abs() < 1e-8);
        assert!(est.suggests_nonexpansive());
    }

    #[test]
    fn hermitian_times_minus_i_is_zero() {
        let a =
            SparseOperator::tridiag_toeplitz(30, -0.25, 0.5, -0.25, Symmetry::Hermitian).unwrap();
        let est = log_norm_estimate(&a, Prefactor::minus_i());
        assert!(est.value.abs() < 1e-10);
        assert!(est.converged);
    }

    #[test]
    fn positive_definite_with_plus_one_is_flagged() {
        let a = SparseOperator::identity(5);
        let est = log_norm_estimate(&a, Prefactor::one());
        assert!((est.value - 1.0).abs() < 1e-12);
        assert!(!est.suggests_nonexpansive());
    }
}
