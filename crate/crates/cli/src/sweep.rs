use crate::config::{logspace, Config, ConfigError, TGrid};
use crate::setup::{cell, format_sigma, Case};
use anyhow::{Context, Result};
use krylov_expm::approximant::{ApproxKind, Approximant};
use krylov_expm::estimators::{era, era_value, err1, quad_estimates, ErrorEstimate, EstimatorKind};
use krylov_expm::krylov::{build_krylov, KrylovConfig, KrylovDecomposition};
use krylov_expm::oracle::distance;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const WIDE_HEADER: [&str; 9] = [
    "t",
    "oracle_error",
    "Era",
    "Err1",
    "HermiteQuad",
    "ImprovedHermiteQuad",
    "TrapezoidQuad",
    "EffectiveOrderQuad",
    "rho",
];

pub const LONG_HEADER: [&str; 9] = [
    "problem",
    "m",
    "sigma",
    "p",
    "t",
    "estimator",
    "value",
    "extra_matvecs",
    "oracle_error",
];

/// Everything computed at one time point.
struct Row {
    t: f64,
    oracle_error: f64,
    estimates: Vec<ErrorEstimate>,
    rho: Option<f64>,
}

impl Row {
    fn get(&self, kinds: &[EstimatorKind]) -> Option<f64> {
        self.estimates
            .iter()
            .find(|e| kinds.contains(&e.kind))
            .map(|e| e.value)
    }

    fn wide(&self) -> Vec<String> {
        use EstimatorKind::*;
        vec![
            format!("{:e}", self.t),
            format!("{:e}", self.oracle_error),
            cell(self.get(&[Era, EraPhi, EraCorrected])),
            cell(self.get(&[Err1, Err1Phi, Err1Corrected])),
            cell(self.get(&[HermiteQuad])),
            cell(self.get(&[ImprovedHermiteQuad])),
            cell(self.get(&[TrapezoidQuad])),
            cell(self.get(&[EffectiveOrderQuad])),
            cell(self.rho),
        ]
    }
}

/// Summary of a finished sweep.
pub struct SweepReport {
    pub files: Vec<PathBuf>,
    pub violations: Vec<String>,
}

fn grid(g: &TGrid, dec: &KrylovDecomposition, p: usize) -> Result<Vec<f64>> {
    Ok(match g {
        TGrid::Values { values } => values.clone(),
        TGrid::Log {
            start,
            stop,
            points,
        } => logspace(*start, *stop, *points),
        TGrid::Era {
            era_from,
            era_to,
            points,
        } => {
            let c = era_value(dec, 1.0, p);
            if !(c > 0.0) {
                anyhow::bail!(
                    "Era vanishes (lucky breakdown at m = {}); use explicit t values",
                    dec.m()
                );
            }
            let m = dec.m() as f64;
            logspace(
                (era_from / c).powf(1.0 / m),
                (era_to / c).powf(1.0 / m),
                *points,
            )
        }
    })
}

fn evaluate(case: &Case, appr: &Approximant<'_>, t: f64) -> Result<Row> {
    let exact = case.exact(t, appr.p())?;
    let oracle_error = distance(&appr.apply(t)?, &exact);
    let mut estimates = Vec::new();
    let mut rho = None;
    match appr.kind() {
        ApproxKind::Standard => {
            estimates.push(era(appr, t)?);
            estimates.push(err1(appr, t, false)?);
            if appr.p() == 0 {
                estimates.extend(quad_estimates(appr, t, None)?);
                if t > 0.0 {
                    let r = appr.effective_order(t)?;
                    rho = r.reliable.then_some(r.rho);
                }
            }
        }
        ApproxKind::Corrected => {
            estimates.push(krylov_expm::estimators::era_corrected(appr, t)?);
            estimates.push(err1(appr, t, true)?);
        }
    }
    Ok(Row {
        t,
        oracle_error,
        estimates,
        rho,
    })
}

pub fn run(cfg: &Config, out: &Path) -> Result<SweepReport> {
    let Some(tg) = &cfg.t_grid else {
        return Err(ConfigError("sweep needs t_grid".into()).into());
    };
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = Vec::new();
    let mut violations = Vec::new();
    let mut long = csv::Writer::from_writer(Vec::new());
    long.write_record(LONG_HEADER)?;
    let keep = |k: EstimatorKind| cfg.estimators.as_ref().is_none_or(|list| list.contains(&k));

    for spec in cfg.problems() {
        let case = Case::new(&spec, cfg.sigma, cfg.seed)?;
        let sigma = format_sigma(case.problem.sigma);
        for m in cfg.dimensions() {
            let dec = build_krylov(&case.problem.op, &case.v, &KrylovConfig::new(m))?;
            let appr = Approximant::new(
                &dec,
                &case.problem.op,
                case.problem.sigma,
                cfg.approximation,
                cfg.p,
            )?
            .with_nonexpansive(case.problem.nonexpansive);
            let ts = grid(tg, &dec, cfg.p)?;
            let rows: Vec<Row> = ts
                .par_iter()
                .map(|&t| evaluate(&case, &appr, t))
                .collect::<Result<_>>()?;

            let path = out.join(format!("sweep_{}_m{m}.csv", case.label));
            let mut w = csv::Writer::from_path(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            w.write_record(WIDE_HEADER)?;
            for row in &rows {
                w.write_record(row.wide())?;
                for e in &row.estimates {
                    if e.is_proven_upper_bound && row.oracle_error > e.value * (1.0 + 1e-9) + 1e-13
                    {
                        violations.push(format!(
                            "{} m={m} t={:e}: error {:e} exceeds {} = {:e}",
                            case.label, row.t, row.oracle_error, e.kind, e.value
                        ));
                    }
                    if keep(e.kind) {
                        long.write_record([
                            case.label.clone(),
                            m.to_string(),
                            sigma.clone(),
                            cfg.p.to_string(),
                            format!("{:e}", row.t),
                            e.kind.to_string(),
                            format!("{:e}", e.value),
                            e.extra_matvecs.to_string(),
                            format!("{:e}", row.oracle_error),
                        ])?;
                    }
                }
            }
            w.flush()?;
            files.push(path);
        }
    }

    let long_path = out.join("sweep_long.csv");
    std::fs::write(&long_path, long.into_inner()?)?;
    let script = out.join("plot_sweep.py");
    std::fs::write(&script, plot_script(&files))?;
    files.push(long_path);
    files.push(script);
    Ok(SweepReport { files, violations })
}

/// Matplotlib script drawing one log-log panel per wide table.
fn plot_script(tables: &[PathBuf]) -> String {
    let mut s = String::from(
        "#!/usr/bin/env python3\n\
         # Generated by `krylov-expm sweep`. Draws error and estimates against t.\n\
         import csv, os, sys\n\
         import matplotlib\n\
         matplotlib.use(\"Agg\")\n\
         import matplotlib.pyplot as plt\n\n\
         here = os.path.dirname(os.path.abspath(__file__))\n\
         tables = [\n",
    );
    for p in tables {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let _ = writeln!(s, "    {name:?},");
    }
    s.push_str(
        "]\n\
         styles = {\"oracle_error\": \"k-\", \"Era\": \"r--\", \"Err1\": \"b:\", \"HermiteQuad\": \"g-.\",\n\
         \x20         \"ImprovedHermiteQuad\": \"c-.\", \"TrapezoidQuad\": \"m--\", \"EffectiveOrderQuad\": \"y:\"}\n\n\
         for name in tables:\n\
         \x20   with open(os.path.join(here, name)) as f:\n\
         \x20       rows = list(csv.DictReader(f))\n\
         \x20   t = [float(r[\"t\"]) for r in rows]\n\
         \x20   fig, ax = plt.subplots(figsize=(6, 4.5))\n\
         \x20   for col, style in styles.items():\n\
         \x20       pts = [(x, float(r[col])) for x, r in zip(t, rows) if r[col] and float(r[col]) > 0 and x > 0]\n\
         \x20       if pts:\n\
         \x20           ax.loglog(*zip(*pts), style, label=col)\n\
         \x20   ax.set_xlabel(\"t\")\n\
         \x20   ax.set_title(name[:-4])\n\
         \x20   ax.legend(fontsize=\"small\")\n\
         \x20   fig.tight_layout()\n\
         \x20   fig.savefig(os.path.join(here, name[:-4] + \".png\"), dpi=150)\n\
         \x20   if \"--show\" in sys.argv:\n\
         \x20       plt.show()\n",
    );
    s
}
