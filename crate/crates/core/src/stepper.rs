//! Restarted propagation `w^{(j+1)} = S_m(Δt_j) w^{(j)}` with step-size
//! control.

use crate::approximant::{ApproxKind, Approximant};
use crate::error::{Error, Result};
use crate::estimators::{era_value, estimate, expokit_first_step, ErrorEstimate, EstimatorKind};
use crate::krylov::{build_krylov, build_krylov_partial, KrylovConfig, KrylovDecomposition};
use crate::linalg::{ln_factorial, norm2, LinearOperator, Prefactor, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// `Δt = (tol·m!/(τγ))^{1/m}`, each step may spend `tol`.
    DirectEraGlobal,
    /// `Δt = (tol·m!/(τγ))^{1/(m−1)}`, each step may spend `Δt·tol`.
    DirectEraLocal,
    /// Inversion of the corrected bound under the chosen error model.
    DirectEraCorrected,
    /// Expokit-style feedback from the previous step's estimate.
    Heuristic,
    /// Fixed-point refinement of the step against the chosen estimator.
    HeuristicIterated,
    /// Constant step from the a-priori Expokit formula.
    ExpokitFirstStepOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    GlobalBudget,
    PerUnitStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    pub tol: f64,
    #[serde(default = "default_model")]
    pub error_model: ErrorModel,
    #[serde(default = "default_cap")]
    pub iteration_cap: usize,
    /// Defaults to 1 for direct inversion of proven bounds and 0.9 otherwise.
    #[serde(default)]
    pub safety: Option<f64>,
}

fn default_model() -> ErrorModel {
    ErrorModel::PerUnitStep
}

fn default_cap() -> usize {
    5
}

impl ControllerSpec {
    pub fn new(kind: ControllerKind, tol: f64) -> Self {
        Self {
            kind,
            tol,
            error_model: ErrorModel::PerUnitStep,
            iteration_cap: 5,
            safety: None,
        }
    }

    pub fn with_model(mut self, model: ErrorModel) -> Self {
        self.error_model = model;
        self
    }

    pub fn safety(&self) -> f64 {
        self.safety.unwrap_or(match self.kind {
            ControllerKind::DirectEraGlobal
            | ControllerKind::DirectEraLocal
            | ControllerKind::DirectEraCorrected => 1.0,
            _ => 0.9,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.iteration_cap == 0 {
            return Err(Error::InvalidArgument(
                "iteration_cap must be at least 1".into(),
            ));
        }
        let s = self.safety();
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidArgument("safety must lie in (0, 1]".into()));
        }
        Ok(())
    }

    fn approximant_kind(&self, estimator: EstimatorKind) -> ApproxKind {
        let corrected = self.kind == ControllerKind::DirectEraCorrected
            || matches!(
                estimator,
                EstimatorKind::EraCorrected | EstimatorKind::Err1Corrected
            );
        if corrected {
            ApproxKind::Corrected
        } else {
            ApproxKind::Standard
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub j: usize,
    pub t_start: f64,
    pub dt: f64,
    pub m_used: usize,
    /// Estimate for this substep, scaled by `‖w^{(j)}‖`.
    pub estimate: ErrorEstimate,
    pub matvecs: usize,
    pub controller_iterations: usize,
    /// False when an iterated controller hit its cap before settling.
    pub controller_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub w_final: Vec<C64>,
    pub records: Vec<StepRecord>,
    pub accumulated_bound: f64,
    pub total_matvecs: usize,
}

impl PropagationResult {
    pub fn total_time(&self) -> f64 {
        self.records.iter().map(|r| r.dt).sum()
    }

    pub fn steps(&self) -> usize {
        self.records.len()
    }

    /// True when every substep used a certified estimate.
    pub fn all_proven(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.estimate.is_proven_upper_bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Propagate to exactly this time; the last step is clipped.
    Until(f64),
    /// Take this many free-floating steps.
    Steps(usize),
}

/// Inverts the standard (or, with `next_norm = Some(‖Av_{m+1}‖)`, the
/// corrected) a-posteriori bound for `p = 0`.
///
/// Returns `+∞` after lucky breakdown.
pub fn step_size_direct(
    dec: &KrylovDecomposition,
    tol: f64,
    model: ErrorModel,
    next_norm: Option<f64>,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let tau = dec.tau_next();
    if tau == 0.0 || next_norm == Some(0.0) {
        return Ok(f64::INFINITY);
    }
    let m = dec.m();
    // bound = C · Δt^k; solve C Δt^k = tol (global) or tol·Δt (per unit)
    let (ln_c, k) = match next_norm {
        None => (tau.ln() + dec.log_gamma() - ln_factorial(m), m as f64),
        Some(a) => (
            a.ln() + tau.ln() + dec.log_gamma() - ln_factorial(m + 1),
            (m + 1) as f64,
        ),
    };
    let k = match model {
        ErrorModel::GlobalBudget => k,
        ErrorModel::PerUnitStep => k - 1.0,
    };
    if k <= 0.0 {
        return Err(Error::InvalidArgument(
            "per-unit-step inversion needs m ≥ 2".into(),
        ));
    }
    Ok(((tol.ln() - ln_c) / k).exp())
}

/// `safety · Δt_{prev} · (target/Er_{prev})^{1/m}`, `target = tol` or
/// `Δt_{prev}·tol`.
pub fn step_size_heuristic(
    prev_dt: f64,
    prev_estimate: f64,
    tol: f64,
    m: usize,
    model: ErrorModel,
    safety: f64,
) -> Result<f64> {
    if !(prev_estimate > 0.0) {
        return Err(Error::InvalidArgument(
            "previous estimate must be positive".into(),
        ));
    }
    if !(prev_dt > 0.0) || m == 0 {
        return Err(Error::InvalidArgument(
            "previous step and dimension must be positive".into(),
        ));
    }
    let target = match model {
        ErrorModel::GlobalBudget => tol,
        ErrorModel::PerUnitStep => prev_dt * tol,
    };
    Ok(safety * prev_dt * (target / prev_estimate).powf(1.0 / m as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IteratedStep {
    pub dt: f64,
    pub iterations: usize,
    /// The last relative change was at most `1e−3`.
    pub converged: bool,
    /// The iterates moved in one direction only.
    pub monotone: bool,
}

/// Relative change below which the iterated step is considered converged.
pub const ITERATION_RTOL: f64 = 1e-3;

/// Fixed-point refinement `Δt ← Δt (target(Δt)/Er(Δt))^{1/m}` started at the
/// direct Era step. The safety factor is applied once to the converged value.
pub fn step_size_iterated(
    appr: &Approximant<'_>,
    tol: f64,
    estimator: EstimatorKind,
    cap: usize,
    model: ErrorModel,
    safety: f64,
) -> Result<IteratedStep> {
    let dec = appr.dec();
    let direct = step_size_direct(dec, tol, model, None)?;
    if !direct.is_finite()
        || matches!(estimator, EstimatorKind::Era | EstimatorKind::EraPhi) && appr.p() == 0
    {
        return Ok(IteratedStep {
            dt: safety * direct,
            iterations: 1,
            converged: true,
            monotone: true,
        });
    }
    let m = dec.m() as f64;
    let mut dt = direct;
    let mut iterations = 0;
    let mut converged = false;
    let mut direction = 0.0f64;
    let mut monotone = true;
    while iterations < cap.max(1) {
        let e = estimate(appr, estimator, dt)?.value;
        if !(e > 0.0) || !e.is_finite() {
            return Ok(IteratedStep {
                dt: safety * direct,
                iterations: iterations.max(1),
                converged: false,
                monotone,
            });
        }
        let target = match model {
            ErrorModel::GlobalBudget => tol,
            ErrorModel::PerUnitStep => dt * tol,
        };
        let next = dt * (target / e).powf(1.0 / m);
        iterations += 1;
        let change = next - dt;
        if direction != 0.0 && change != 0.0 && change.signum() != direction {
            monotone = false;
        }
        if change != 0.0 {
            direction = change.signum();
        }
        let rel = change.abs() / dt;
        dt = next;
        if rel <= ITERATION_RTOL {
            converged = true;
            break;
        }
    }
    Ok(IteratedStep {
        dt: safety * dt,
        iterations,
        converged,
        monotone,
    })
}

/// Result of [`early_stop_dimension`].
#[derive(Debug, Clone)]
pub struct EarlyStop {
    pub dec: KrylovDecomposition,
    /// Whether `Era ≤ tol·t` was reached before `m_max`.
    pub met: bool,
}

/// Grows the Krylov space one vector at a time and stops at the first `m`
/// with `Era(m, t, p) ≤ tol·t`.
pub fn early_stop_dimension<O: LinearOperator + ?Sized>(
    op: &O,
    v: &[C64],
    t: f64,
    tol: f64,
    p: usize,
    cfg: &KrylovConfig,
) -> Result<EarlyStop> {
    let mut dec = build_krylov_partial(op, v, cfg, 1)?;
    loop {
        if dec.breakdown() || era_value(&dec, t, p) <= tol * t {
            return Ok(EarlyStop { dec, met: true });
        }
        if dec.m() >= cfg.m_max {
            return Ok(EarlyStop { dec, met: false });
        }
        dec.extend_in_place(op, 1)?;
    }
}

const MAX_SUBSTEPS: usize = 1_000_000;

/// Restarted propagation of `e^{σtA} v`.
///
/// `nonexpansive` is the caller's assertion `μ₂(σA) ≤ 0`; it decides whether
/// the recorded estimates count as proven bounds.
pub fn propagate<O: LinearOperator>(
    op: &O,
    sigma: Prefactor,
    v: &[C64],
    horizon: Horizon,
    cfg: &KrylovConfig,
    ctrl: &ControllerSpec,
    estimator: EstimatorKind,
    nonexpansive: bool,
) -> Result<PropagationResult> {
    ctrl.validate()?;
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
    match horizon {
        Horizon::Until(t) if !(t > 0.0 && t.is_finite()) => {
            return Err(Error::InvalidArgument("final time must be positive".into()))
        }
        Horizon::Steps(0) => {
            return Err(Error::InvalidArgument(
                "at least one step is required".into(),
            ))
        }
        _ => {}
    }
    let kind = ctrl.approximant_kind(estimator);
    let safety = ctrl.safety();
    let m_nominal = cfg.m_max;

    let mut w = v.to_vec();
    let mut t = 0.0;
    let mut records: Vec<StepRecord> = Vec::new();
    let mut total_matvecs = 0;
    let mut accumulated = 0.0;
    let mut prev: Option<(f64, f64)> = None;

    loop {
        let done = match horizon {
            Horizon::Until(tf) => t >= tf,
            Horizon::Steps(n) => records.len() >= n,
        };
        if done {
            break;
        }
        if records.len() >= MAX_SUBSTEPS {
            return Err(Error::StepUnderflow {
                t,
                dt: records.last().map_or(0.0, |r| r.dt),
            });
        }
        let beta = norm2(&w);
        if beta == 0.0 {
            // the zero vector stays put; finish in a single record
            let dt = match horizon {
                Horizon::Until(tf) => tf - t,
                Horizon::Steps(_) => 0.0,
            };
            let zero = ErrorEstimate {
                kind: estimator,
                value: 0.0,
                is_proven_upper_bound: nonexpansive,
                extra_matvecs: 0,
            };
            records.push(StepRecord {
                j: records.len(),
                t_start: t,
                dt,
                m_used: 0,
                estimate: zero,
                matvecs: 0,
                controller_iterations: 0,
                controller_converged: true,
            });
            t += dt;
            continue;
        }
        let u: Vec<C64> = w.iter().map(|x| x / beta).collect();
        let dec = build_krylov(op, &u, cfg)?;
        let ap_kind = if kind == ApproxKind::Corrected && dec.v_next().is_none() {
            ApproxKind::Standard
        } else {
            kind
        };
        let appr = Approximant::new(&dec, op, sigma, ap_kind, 0)?.with_nonexpansive(nonexpansive);

        let tol = ctrl.tol;
        let mut converged = true;
        let (mut dt, iterations) = match ctrl.kind {
            ControllerKind::DirectEraGlobal => (
                safety * step_size_direct(&dec, tol, ErrorModel::GlobalBudget, None)?,
                1,
            ),
            ControllerKind::DirectEraLocal => (
                safety * step_size_direct(&dec, tol, ErrorModel::PerUnitStep, None)?,
                1,
            ),
            ControllerKind::DirectEraCorrected => {
                let nn = match dec.v_next() {
                    Some(_) => Some(appr.next_image()?.norm),
                    None => None,
                };
                (
                    safety * step_size_direct(&dec, tol, ctrl.error_model, nn)?,
                    1,
                )
            }
            ControllerKind::Heuristic => match prev {
                Some((pdt, pe)) if pe > 0.0 => (
                    step_size_heuristic(pdt, pe, tol, m_nominal, ctrl.error_model, safety)?,
                    1,
                ),
                Some((pdt, _)) => (pdt * 2.0, 1),
                None => (expokit_first_step(op.norm_inf(), m_nominal, tol)?, 1),
            },
            ControllerKind::HeuristicIterated => {
                let it = step_size_iterated(
                    &appr,
                    tol,
                    estimator,
                    ctrl.iteration_cap,
                    ctrl.error_model,
                    safety,
                )?;
                converged = it.converged;
                (it.dt, it.iterations)
            }
            ControllerKind::ExpokitFirstStepOnly => {
                (expokit_first_step(op.norm_inf(), m_nominal, tol)?, 1)
            }
        };
        let mut last = false;
        if let Horizon::Until(tf) = horizon {
            let remaining = tf - t;
            if !(dt < remaining) {
                dt = remaining;
                last = true;
            }
        }
        if !(dt > 0.0)
            || !dt.is_finite()
            || (!last && dt <= f64::EPSILON * t.max(f64::MIN_POSITIVE))
        {
            return Err(Error::StepUnderflow { t, dt });
        }

        let mut est = estimate(&appr, estimator, dt)?;
        est.value *= beta;
        let y = appr.apply(dt)?;
        w = y.into_iter().map(|x| x * beta).collect();
        let matvecs = dec.matvecs() + appr.extra_matvecs();
        total_matvecs += matvecs;
        accumulated += est.value;
        prev = Some((dt, est.value / beta));
        records.push(StepRecord {
            j: records.len(),
            t_start: t,
            dt,
            m_used: dec.m(),
            estimate: est,
            matvecs,
            controller_iterations: iterations,
            controller_converged: converged,
        });
        t = match horizon {
            Horizon::Until(tf) if last => tf,
            _ => t + dt,
        };
    }
    Ok(PropagationResult {
        w_final: w,
        records,
        accumulated_bound: accumulated,
        total_matvecs,
    })
}
