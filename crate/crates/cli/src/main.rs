//! `krylov-expm` experiment runner.
//!
//! Exit codes: 0 success, 1 a proven error bound was exceeded by the oracle
//! error, 2 invalid configuration or any other failure.

mod bench;
mod build;
mod config;
mod setup;
mod sweep;

use clap::{Args, Parser, Subcommand};
use config::{Config, ConfigError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "krylov-expm",
    version,
    about = "Krylov approximation of exp(σtA)v with a-posteriori error bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the configured operators and export them as Matrix Market files.
    Build(Common),
    /// Tabulate the approximation error and all estimators over a time grid.
    Sweep(Common),
    /// Run restarted propagation with the configured step-size controllers.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for starting vectors; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(Config, PathBuf), ConfigError> {
        let mut cfg = Config::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(ConfigError("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
        }
        Ok((cfg, out))
    }
}

fn list(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn report(violations: &[String]) -> ExitCode {
    if violations.is_empty() {
        return ExitCode::SUCCESS;
    }
    for v in violations {
        eprintln!("bound violated: {v}");
    }
    ExitCode::from(1)
}

fn execute(cmd: &Command) -> anyhow::Result<ExitCode> {
    let (Command::Build(common) | Command::Sweep(common) | Command::Bench(common)) = cmd;
    let (cfg, out) = common.load()?;
    Ok(match cmd {
        Command::Build(_) => {
            list(&build::run(&cfg, &out)?);
            ExitCode::SUCCESS
        }
        Command::Sweep(_) => {
            let r = sweep::run(&cfg, &out)?;
            list(&r.files);
            report(&r.violations)
        }
        Command::Bench(_) => {
            let r = bench::run(&cfg, &out)?;
            list(&r.files);
            report(&r.violations)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            if e.downcast_ref::<ConfigError>().is_some() {
                eprintln!("{e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violations_map_to_exit_one() {
        let code = |v: &[String]| format!("{:?}", report(v));
        assert_eq!(code(&[]), format!("{:?}", ExitCode::SUCCESS));
        assert_eq!(
            code(&["heat m=10".into()]),
            format!("{:?}", ExitCode::from(1))
        );
    }
}
