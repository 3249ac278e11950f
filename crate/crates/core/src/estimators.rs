//! A-posteriori error estimates for Krylov approximants.

use crate::approximant::{effective_order_of, ApproxKind, Approximant};
use crate::error::{Error, Result};
use crate::krylov::KrylovDecomposition;
use crate::linalg::ln_factorial;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    Era,
    EraPhi,
    EraCorrected,
    Err1,
    Err1Phi,
    Err1Corrected,
    HermiteQuad,
    ImprovedHermiteQuad,
    TrapezoidQuad,
    EffectiveOrderQuad,
    ExpokitFirstStep,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 11] = [
        Self::Era,
        Self::EraPhi,
        Self::EraCorrected,
        Self::Err1,
        Self::Err1Phi,
        Self::Err1Corrected,
        Self::HermiteQuad,
        Self::ImprovedHermiteQuad,
        Self::TrapezoidQuad,
        Self::EffectiveOrderQuad,
        Self::ExpokitFirstStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Era => "Era",
            Self::EraPhi => "EraPhi",
            Self::EraCorrected => "EraCorrected",
            Self::Err1 => "Err1",
            Self::Err1Phi => "Err1Phi",
            Self::Err1Corrected => "Err1Corrected",
            Self::HermiteQuad => "HermiteQuad",
            Self::ImprovedHermiteQuad => "ImprovedHermiteQuad",
            Self::TrapezoidQuad => "TrapezoidQuad",
            Self::EffectiveOrderQuad => "EffectiveOrderQuad",
            Self::ExpokitFirstStep => "ExpokitFirstStep",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub kind: EstimatorKind,
    pub value: f64,
    pub is_proven_upper_bound: bool,
    pub extra_matvecs: usize,
}

/// `τ_{m+1,m} γ_m t^m / (m+p)!`, evaluated in the log domain.
pub fn era_value(dec: &KrylovDecomposition, t: f64, p: usize) -> f64 {
    let tau = dec.tau_next();
    if t == 0.0 || tau == 0.0 {
        return 0.0;
    }
    let m = dec.m();
    (tau.ln() + dec.log_gamma() + m as f64 * t.ln() - ln_factorial(m + p)).exp()
}

pub fn era(appr: &Approximant<'_>, t: f64) -> Result<ErrorEstimate> {
    check_t(t)?;
    let p = appr.p();
    Ok(ErrorEstimate {
        kind: if p == 0 {
            EstimatorKind::Era
        } else {
            EstimatorKind::EraPhi
        },
        value: era_value(appr.dec(), t, p),
        is_proven_upper_bound: appr.nonexpansive(),
        extra_matvecs: 0,
    })
}

/// `‖A v_{m+1}‖ τ γ t^{m+1} / (m+p+1)!`; costs the cached extra matvec.
pub fn era_corrected(appr: &Approximant<'_>, t: f64) -> Result<ErrorEstimate> {
    check_t(t)?;
    let dec = appr.dec();
    let img = appr.next_image()?;
    let (m, p) = (dec.m(), appr.p());
    let value = if t == 0.0 || img.norm == 0.0 {
        0.0
    } else {
        (img.norm.ln() + dec.tau_next().ln() + dec.log_gamma() + (m + 1) as f64 * t.ln()
            - ln_factorial(m + p + 1))
        .exp()
    };
    Ok(ErrorEstimate {
        kind: EstimatorKind::EraCorrected,
        value,
        is_proven_upper_bound: appr.nonexpansive(),
        extra_matvecs: 1,
    })
}

/// Standard: `τ t |e_m^* φ_{p+1}(σtT_m) e_1|`.
/// Corrected: `‖A v_{m+1}‖ τ t² |e_m^* φ_{p+2}(σtT_m) e_1|`.
pub fn err1(appr: &Approximant<'_>, t: f64, corrected: bool) -> Result<ErrorEstimate> {
    check_t(t)?;
    let dec = appr.dec();
    let (m, p) = (dec.m(), appr.p());
    let tau = dec.tau_next();
    let kind = match (corrected, p) {
        (true, _) => EstimatorKind::Err1Corrected,
        (false, 0) => EstimatorKind::Err1,
        (false, _) => EstimatorKind::Err1Phi,
    };
    let (value, extra) = if t == 0.0 || tau == 0.0 {
        (0.0, usize::from(corrected))
    } else if corrected {
        let norm = appr.next_image()?.norm;
        (
            norm * tau * t * t * appr.projected(t, p + 2)?[m - 1].norm(),
            1,
        )
    } else {
        (tau * t * appr.projected(t, p + 1)?[m - 1].norm(), 0)
    };
    Ok(ErrorEstimate {
        kind,
        value,
        is_proven_upper_bound: !corrected && appr.hermitian_nonexpansive(),
        extra_matvecs: extra,
    })
}

/// Default probe grid for the effective-order guard: `t, t/2, …, t/128`.
pub fn default_rho_probe(t: f64) -> Vec<f64> {
    (0..8).rev().map(|k| t / f64::from(1u32 << k)).collect()
}

/// Whether `ρ` sampled on `grid` stays in `[1, m−1]` and is nonincreasing in
/// `t`. Samples at the round-off floor are skipped; at least one must be
/// reliable.
pub fn rho_guard(appr: &Approximant<'_>, grid: &[f64]) -> Result<bool> {
    let mut pts = grid.to_vec();
    pts.sort_by(f64::total_cmp);
    let upper = appr.m() as f64 - 1.0;
    let slack = 1e-8;
    let mut prev = f64::INFINITY;
    let mut seen = false;
    for t in pts {
        let r = appr.effective_order(t)?;
        if !r.reliable {
            continue;
        }
        if r.rho < 1.0 - slack || r.rho > upper + slack || r.rho > prev + slack * upper {
            return Ok(false);
        }
        prev = r.rho;
        seen = true;
    }
    Ok(seen)
}

/// Quadrature estimates at `t`: Hermite, improved Hermite, trapezoid and,
/// when the guard on `probe ∪ {t}` passes, effective-order.
///
/// `probe = None` uses [`default_rho_probe`].
pub fn quad_estimates(
    appr: &Approximant<'_>,
    t: f64,
    probe: Option<&[f64]>,
) -> Result<Vec<ErrorEstimate>> {
    quad_with(appr, t, probe, true)
}

/// Like [`quad_estimates`], leaving out the improved Hermite entry (and its
/// extra matvec) unless `improved` is set.
fn quad_with(
    appr: &Approximant<'_>,
    t: f64,
    probe: Option<&[f64]>,
    improved: bool,
) -> Result<Vec<ErrorEstimate>> {
    check_t(t)?;
    if appr.kind() != ApproxKind::Standard || appr.p() != 0 {
        return Err(Error::InvalidArgument(
            "quadrature estimates need the standard exponential approximant".into(),
        ));
    }
    let dec = appr.dec();
    let m = dec.m() as f64;
    let tau = dec.tau_next();
    let herm = appr.hermitian_nonexpansive();
    let est = |kind, value, proven, extra| ErrorEstimate {
        kind,
        value,
        is_proven_upper_bound: proven,
        extra_matvecs: extra,
    };

    if tau == 0.0 {
        return Ok(vec![
            est(EstimatorKind::HermiteQuad, 0.0, false, 0),
            est(EstimatorKind::ImprovedHermiteQuad, 0.0, false, 0),
            est(EstimatorKind::TrapezoidQuad, 0.0, herm, 0),
            est(EstimatorKind::EffectiveOrderQuad, 0.0, false, 0),
        ]);
    }

    let d = appr.defect(t)?;
    let ad = d.delta.norm();
    let mut out = vec![est(EstimatorKind::HermiteQuad, tau * t / m * ad, false, 0)];
    if improved {
        let v = improved_hermite(appr, t, d.delta, d.delta_prime)?;
        out.push(est(EstimatorKind::ImprovedHermiteQuad, v, false, 1));
    }
    out.push(est(
        EstimatorKind::TrapezoidQuad,
        tau * t / 2.0 * ad,
        herm,
        0,
    ));
    let rho = effective_order_of(&d);
    let guard = if t == 0.0 {
        true
    } else if !rho.reliable {
        false
    } else {
        let mut grid = probe.map_or_else(|| default_rho_probe(t), <[f64]>::to_vec);
        grid.push(t);
        rho_guard(appr, &grid)?
    };
    if t == 0.0 {
        out.push(est(EstimatorKind::EffectiveOrderQuad, 0.0, false, 0));
    } else if guard {
        out.push(est(
            EstimatorKind::EffectiveOrderQuad,
            tau * t / (rho.rho + 1.0) * ad,
            false,
            0,
        ));
    }
    Ok(out)
}

/// `‖(2t/(m+1)) D_m(t)v − (t²/(m(m+1))) D_m^{[2]}(t)v‖₂` with
/// `D_m^{[2]} = D_m′ − σA D_m`, expanded on `{v_{m+1}, A v_{m+1}}`.
fn improved_hermite(
    appr: &Approximant<'_>,
    t: f64,
    delta: crate::linalg::C64,
    delta_prime: crate::linalg::C64,
) -> Result<f64> {
    let img = appr.next_image()?;
    let m = appr.m() as f64;
    let sigma = appr.sigma().value();
    let c2 = t * t / (m * (m + 1.0));
    let a = delta * (2.0 * t / (m + 1.0)) - delta_prime * c2;
    let b = sigma * delta * c2;
    let sq =
        a.norm_sqr() + b.norm_sqr() * img.norm * img.norm + 2.0 * (a.conj() * b * img.inner).re;
    Ok(appr.dec().tau_next() * sq.max(0.0).sqrt())
}

/// Evaluates one estimator at `t`.
///
/// When the effective-order guard fails the trapezoid entry is returned in
/// its place, so callers must check `kind`.
pub fn estimate(appr: &Approximant<'_>, kind: EstimatorKind, t: f64) -> Result<ErrorEstimate> {
    match kind {
        EstimatorKind::Era | EstimatorKind::EraPhi => era(appr, t),
        EstimatorKind::EraCorrected => era_corrected(appr, t),
        EstimatorKind::Err1 | EstimatorKind::Err1Phi => err1(appr, t, false),
        EstimatorKind::Err1Corrected => err1(appr, t, true),
        EstimatorKind::HermiteQuad
        | EstimatorKind::ImprovedHermiteQuad
        | EstimatorKind::TrapezoidQuad
        | EstimatorKind::EffectiveOrderQuad => {
            let q = quad_with(appr, t, None, kind == EstimatorKind::ImprovedHermiteQuad)?;
            let pick = |k| q.iter().find(|e| e.kind == k).copied();
            Ok(pick(kind)
                .or_else(|| pick(EstimatorKind::TrapezoidQuad))
                .expect("trapezoid is always present"))
        }
        EstimatorKind::ExpokitFirstStep => Err(Error::InvalidArgument(
            "ExpokitFirstStep is a step-size rule, not an error estimate".into(),
        )),
    }
}

/// First step size of the classical Expokit heuristic:
/// `(1/‖H‖∞) (tol ((m+1)/e)^{m+1} √(2π(m+1)) / (4‖H‖∞))^{1/m}`.
pub fn expokit_first_step(op_norm_inf: f64, m: usize, tol: f64) -> Result<f64> {
    if !(op_norm_inf > 0.0 && op_norm_inf.is_finite()) {
        return Err(Error::InvalidArgument(
            "operator norm must be positive".into(),
        ));
    }
    if !(tol > 0.0) || m == 0 {
        return Err(Error::InvalidArgument(
            "tolerance and dimension must be positive".into(),
        ));
    }
    let mp1 = (m + 1) as f64;
    let ln_inner =
        tol.ln() + mp1 * (mp1.ln() - 1.0) + 0.5 * (2.0 * std::f64::consts::PI * mp1).ln()
            - 4f64.ln()
            - op_norm_inf.ln();
    Ok((ln_inner / m as f64 - op_norm_inf.ln()).exp())
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}
