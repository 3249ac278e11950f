use krylov_expm::linalg::C64;
use krylov_expm::oracle::{oracle_laplacian, oracle_phi, oracle_series};
use krylov_expm::problems::{Problem, ProblemSpec};
use krylov_expm::{Prefactor, Result};

/// A built problem together with its starting vector.
pub struct Case {
    pub problem: Problem,
    pub v: Vec<C64>,
    pub label: String,
}

impl Case {
    pub fn new(spec: &ProblemSpec, sigma: Option<[f64; 2]>, seed: u64) -> Result<Self> {
        let mut problem = spec.build()?;
        if let Some(s) = sigma {
            let s = Prefactor::try_from(s)?;
            if s != problem.sigma {
                eprintln!(
                    "warning: {}: prefactor overridden, bounds are not reported as proven",
                    spec.label()
                );
                problem.sigma = s;
                problem.nonexpansive = false;
            }
        }
        let v = spec.starting_vector(problem.n(), seed);
        Ok(Self {
            label: spec.label(),
            problem,
            v,
        })
    }

    /// Reference value of `φ_p(σtA)v` (`p = 0`: `exp(σtA)v`).
    pub fn exact(&self, t: f64, p: usize) -> Result<Vec<C64>> {
        let pr = &self.problem;
        let target = match pr.spec {
            ProblemSpec::Hubbard { .. } => 1e-13,
            _ => 1e-14,
        };
        match pr.spec {
            ProblemSpec::SchrodingerFree { n } | ProblemSpec::Heat { n } if p == 0 => {
                oracle_laplacian(n, pr.sigma, t, &self.v)
            }
            _ if p == 0 => oracle_series(&pr.op, pr.sigma, t, &self.v, target),
            _ => oracle_phi(&pr.op, pr.sigma, t, &self.v, p, target),
        }
    }
}

pub fn format_sigma(s: Prefactor) -> String {
    let z = s.value();
    format!("{}{:+}i", z.re, z.im)
}

/// Empty string for missing values, shortest round-trip form otherwise.
pub fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:e}"))
}
