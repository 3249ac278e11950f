use krylov_expm::approximant::ApproxKind;
use krylov_expm::estimators::EstimatorKind;
use krylov_expm::problems::ProblemSpec;
use krylov_expm::stepper::{ControllerKind, ErrorModel};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Invalid or unreadable configuration. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

/// Time grid for sweeps.
///
/// * `{"values": [...]}` explicit points,
/// * `{"start": a, "stop": b, "points": k}` log-spaced,
/// * `{"era_from": e0, "era_to": e1, "points": k}` log-spaced between the
///   times at which Era takes the two values; resolved per Krylov dimension.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TGrid {
    Values {
        values: Vec<f64>,
    },
    Log {
        start: f64,
        stop: f64,
        points: usize,
    },
    Era {
        era_from: f64,
        era_to: f64,
        points: usize,
    },
}

impl TGrid {
    fn validate(&self) -> Result<(), ConfigError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match self {
            Self::Values { values } => {
                if values.is_empty() {
                    return Err(bad("t_grid.values is empty"));
                }
                if !values.iter().all(|&t| t.is_finite() && t >= 0.0) {
                    return Err(bad("t_grid.values must be finite and nonnegative"));
                }
            }
            Self::Log {
                start,
                stop,
                points,
            } => {
                if *points == 0 {
                    return Err(bad("t_grid.points must be at least 1"));
                }
                if !(positive(*start) && positive(*stop) && start <= stop) {
                    return Err(bad("t_grid needs 0 < start <= stop"));
                }
            }
            Self::Era {
                era_from,
                era_to,
                points,
            } => {
                if *points == 0 {
                    return Err(bad("t_grid.points must be at least 1"));
                }
                if !(positive(*era_from) && positive(*era_to) && era_from <= era_to) {
                    return Err(bad("t_grid needs 0 < era_from <= era_to"));
                }
            }
        }
        Ok(())
    }
}

/// Log-spaced points between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub controller: ControllerKind,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub error_model: Option<ErrorModel>,
    #[serde(default)]
    pub iteration_cap: Option<usize>,
    #[serde(default)]
    pub safety: Option<f64>,
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Era
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopSpec {
    pub t: f64,
    pub m_max: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Number of substeps. Exactly one of `steps` and `t_final` is required.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
    /// Run corrected controllers with dimension `m - 1` so every variant
    /// spends `m` matvecs per substep.
    #[serde(default)]
    pub equal_cost: bool,
    #[serde(default)]
    pub early_stop: Option<EarlyStopSpec>,
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(alias = "problem")]
    pub problems: OneOrMany<ProblemSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Overrides the problem's prefactor as `[re, im]`. Bounds computed with
    /// a non-default prefactor are not reported as proven.
    #[serde(default)]
    pub sigma: Option<[f64; 2]>,
    #[serde(default = "default_m")]
    pub m: OneOrMany<usize>,
    #[serde(default)]
    pub p: usize,
    #[serde(default = "default_kind")]
    pub approximation: ApproxKind,
    #[serde(default)]
    pub t_grid: Option<TGrid>,
    /// Estimators written to the long sweep table; all by default.
    #[serde(default)]
    pub estimators: Option<Vec<EstimatorKind>>,
    #[serde(default)]
    pub bench: Option<BenchConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_seed() -> u64 {
    2024
}

fn default_m() -> OneOrMany<usize> {
    OneOrMany::Many(vec![10, 30])
}

fn default_kind() -> ApproxKind {
    ApproxKind::Standard
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn problems(&self) -> Vec<ProblemSpec> {
        self.problems.to_vec()
    }

    pub fn dimensions(&self) -> Vec<usize> {
        self.m.to_vec()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let problems = self.problems();
        if problems.is_empty() {
            return Err(bad("no problems given"));
        }
        for p in &problems {
            p.validate()
                .map_err(|e| bad(format!("{}: {e}", p.label())))?;
        }
        let ms = self.dimensions();
        if ms.is_empty() || ms.contains(&0) {
            return Err(bad("m must be a nonempty list of positive dimensions"));
        }
        if let Some(s) = self.sigma {
            krylov_expm::Prefactor::try_from(s).map_err(|e| bad(format!("sigma: {e}")))?;
        }
        if self.approximation == ApproxKind::Corrected && self.p != 0 {
            return Err(bad(
                "the corrected approximation is only available for p = 0",
            ));
        }
        if let Some(g) = &self.t_grid {
            g.validate()?;
        }
        if let Some(b) = &self.bench {
            if !(b.tol.is_finite() && b.tol > 0.0) {
                return Err(bad("bench.tol must be positive"));
            }
            match (b.steps, b.t_final) {
                (Some(0), _) => return Err(bad("bench.steps must be at least 1")),
                (Some(_), None) => {}
                (None, Some(t)) if t.is_finite() && t > 0.0 => {}
                (None, Some(_)) => return Err(bad("bench.t_final must be positive")),
                _ => return Err(bad("bench needs exactly one of steps and t_final")),
            }
            if b.runs.is_empty() && b.early_stop.is_none() {
                return Err(bad("bench has no runs"));
            }
            if let Some(es) = &b.early_stop {
                if !(es.t.is_finite() && es.t > 0.0) || es.m_max == 0 {
                    return Err(bad("bench.early_stop needs t > 0 and m_max >= 1"));
                }
            }
            if b.equal_cost && ms.contains(&1) {
                return Err(bad("equal_cost needs m >= 2"));
            }
        }
        Ok(())
    }
}
