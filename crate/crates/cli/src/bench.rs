use crate::config::{BenchConfig, Config, ConfigError, RunSpec};
use crate::setup::Case;
use anyhow::{Context, Result};
use krylov_expm::approximant::Approximant;
use krylov_expm::estimators::{era, EstimatorKind};
use krylov_expm::krylov::KrylovConfig;
use krylov_expm::oracle::distance;
use krylov_expm::stepper::{
    early_stop_dimension, propagate, ControllerKind, ControllerSpec, ErrorModel, Horizon,
};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

pub const HEADER: [&str; 9] = [
    "controller",
    "estimator",
    "m",
    "tol",
    "N",
    "total_t",
    "total_matvecs",
    "accumulated_bound",
    "oracle_error_per_unit_t",
];

struct BenchRow {
    controller: String,
    estimator: EstimatorKind,
    m: usize,
    tol: f64,
    steps: usize,
    total_t: f64,
    matvecs: usize,
    bound: f64,
    error: f64,
    proven: bool,
}

impl BenchRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.controller.clone(),
            self.estimator.to_string(),
            self.m.to_string(),
            format!("{:e}", self.tol),
            self.steps.to_string(),
            format!("{:e}", self.total_t),
            self.matvecs.to_string(),
            format!("{:e}", self.bound),
            format!("{:e}", self.error / self.total_t),
        ]
    }

    /// A proven accumulated bound that the oracle error exceeds.
    fn violated(&self) -> bool {
        self.proven && self.error > self.bound * (1.0 + 1e-9) + 1e-13
    }
}

pub struct BenchReport {
    pub files: Vec<PathBuf>,
    pub violations: Vec<String>,
}

fn controller_name(kind: ControllerKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn one_run(case: &Case, bench: &BenchConfig, m: usize, run: &RunSpec) -> Result<BenchRow> {
    let p = &case.problem;
    let corrected = run.controller == ControllerKind::DirectEraCorrected;
    let dim = if bench.equal_cost && corrected {
        m - 1
    } else {
        m
    };
    let mut ctrl = ControllerSpec::new(run.controller, bench.tol);
    ctrl.error_model = run.error_model.unwrap_or(ErrorModel::PerUnitStep);
    if let Some(cap) = run.iteration_cap {
        ctrl.iteration_cap = cap;
    }
    ctrl.safety = run.safety;
    ctrl.validate()
        .map_err(|e| ConfigError(format!("run {:?}: {e}", run.controller)))?;
    let horizon = match (bench.steps, bench.t_final) {
        (Some(n), _) => Horizon::Steps(n),
        (None, Some(t)) => Horizon::Until(t),
        (None, None) => unreachable!("validated"),
    };
    let res = propagate(
        &p.op,
        p.sigma,
        &case.v,
        horizon,
        &KrylovConfig::new(dim),
        &ctrl,
        run.estimator,
        p.nonexpansive,
    )
    .with_context(|| {
        format!(
            "{} m={dim} {:?}/{}",
            case.label, run.controller, run.estimator
        )
    })?;
    let total_t = res.total_time();
    let error = distance(&res.w_final, &case.exact(total_t, 0)?);
    Ok(BenchRow {
        controller: controller_name(run.controller),
        estimator: run.estimator,
        m: dim,
        tol: bench.tol,
        steps: res.steps(),
        total_t,
        matvecs: res.total_matvecs,
        bound: res.accumulated_bound,
        error,
        proven: res.all_proven(),
    })
}

fn early_stop_run(case: &Case, tol: f64, t: f64, m_max: usize) -> Result<BenchRow> {
    let p = &case.problem;
    let r = early_stop_dimension(&p.op, &case.v, t, tol, 0, &KrylovConfig::new(m_max))?;
    let appr = Approximant::standard(&r.dec, &p.op, p.sigma)?.with_nonexpansive(p.nonexpansive);
    let bound = era(&appr, t)?;
    let error = distance(&appr.apply(t)?, &case.exact(t, 0)?);
    Ok(BenchRow {
        controller: "early_stop".into(),
        estimator: EstimatorKind::Era,
        m: r.dec.m(),
        tol,
        steps: 1,
        total_t: t,
        matvecs: r.dec.matvecs(),
        bound: bound.value,
        error,
        proven: bound.is_proven_upper_bound,
    })
}

pub fn run(cfg: &Config, out: &Path) -> Result<BenchReport> {
    let Some(bench) = &cfg.bench else {
        return Err(ConfigError("bench needs a \"bench\" section".into()).into());
    };
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = Vec::new();
    let mut violations = Vec::new();
    for spec in cfg.problems() {
        let case = Case::new(&spec, cfg.sigma, cfg.seed)?;
        let jobs: Vec<(usize, &RunSpec)> = cfg
            .dimensions()
            .into_iter()
            .flat_map(|m| bench.runs.iter().map(move |r| (m, r)))
            .collect();
        let mut rows: Vec<BenchRow> = jobs
            .par_iter()
            .map(|&(m, r)| one_run(&case, bench, m, r))
            .collect::<Result<_>>()?;
        if let Some(es) = &bench.early_stop {
            rows.push(early_stop_run(&case, bench.tol, es.t, es.m_max)?);
        }
        let path = out.join(format!("bench_{}.csv", case.label));
        let mut w =
            csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(HEADER)?;
        for row in &rows {
            w.write_record(row.record())?;
            if row.violated() {
                violations.push(format!(
                    "{} {} {} m={}: error {:e} exceeds accumulated bound {:e}",
                    case.label, row.controller, row.estimator, row.m, row.error, row.bound
                ));
            }
        }
        w.flush()?;
        files.push(path);
    }
    Ok(BenchReport { files, violations })
}
