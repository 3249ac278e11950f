use crate::config::Config;
use crate::setup::Case;
use anyhow::{Context, Result};
use krylov_expm::linalg::mtx::write_matrix_market;
use krylov_expm::linalg::{LinearOperator, Symmetry};
use serde::Serialize;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub label: String,
    pub n: usize,
    pub nnz: usize,
    pub symmetry: Symmetry,
    pub sigma: [f64; 2],
    pub nonexpansive: bool,
}

pub fn run(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = Vec::new();
    for spec in cfg.problems() {
        let case = Case::new(&spec, cfg.sigma, cfg.seed)?;
        let op = &case.problem.op;
        let mtx = out.join(format!("{}.mtx", case.label));
        let f =
            std::fs::File::create(&mtx).with_context(|| format!("writing {}", mtx.display()))?;
        let mut w = BufWriter::new(f);
        write_matrix_market(op, &mut w)?;
        w.flush()?;
        let meta = Metadata {
            label: case.label.clone(),
            n: op.n(),
            nnz: op.nnz(),
            symmetry: op.symmetry(),
            sigma: case.problem.sigma.into(),
            nonexpansive: case.problem.nonexpansive,
        };
        let json = out.join(format!("{}.json", case.label));
        std::fs::write(&json, serde_json::to_string_pretty(&meta)? + "\n")?;
        files.push(mtx);
        files.push(json);
    }
    Ok(files)
}
