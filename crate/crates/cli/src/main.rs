//! `lvbif`: bifurcation diagrams for the radial competition system.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "lvbif",
    version,
    about = "Bifurcation analysis of a radial two-species competition system"
)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of radial cells.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Number of nonzero Neumann modes to compute.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Absolute β ceiling for continuation.
    #[arg(long = "beta-max", global = true)]
    beta_max: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print a machine-readable summary to stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Neumann eigenpairs and the comparison with Bessel zeros.
    Eigen,
    /// Bifurcation points from the constant branch.
    Points,
    /// Continue the branch through β_j in both directions.
    Branch {
        #[arg(long)]
        mode: Option<usize>,
    },
    /// Limit profile and segregation distances along a stored branch.
    Limit {
        #[arg(long)]
        mode: Option<usize>,
    },
    /// Randomized check of the scalar inequalities.
    Verify {
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Collect stored branches into one diagram table.
    Report,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Fail {
    pub code: u8,
    pub msg: String,
}

impl Fail {
    pub fn validation(msg: String) -> Self {
        Fail { code: 2, msg }
    }

    pub fn theorem(msg: String) -> Self {
        Fail { code: 4, msg }
    }
}

impl From<lvbif::Error> for Fail {
    fn from(e: lvbif::Error) -> Self {
        use lvbif::Error::*;
        let code = match e {
            InvalidParams(_) | Domain(_) | GridMismatch(_) | SpectrumTooShort(_) => 2,
            NoConvergence { .. } | Singular(_) | Bracketing(_) | Internal(_) => 3,
        };
        Fail {
            code,
            msg: e.to_string(),
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, Fail> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = cli.grid {
        cfg.grid = v;
    }
    if let Some(v) = cli.modes {
        cfg.modes = v;
    }
    if let Some(v) = cli.beta_max {
        cfg.beta_max = Some(v);
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.workers {
        cfg.workers = Some(v);
    }
    match &cli.cmd {
        Cmd::Branch { mode: Some(j) } | Cmd::Limit { mode: Some(j) } => cfg.mode = *j,
        Cmd::Verify { draws: Some(d) } => cfg.draws = *d,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<serde_json::Value, Fail> {
    let cfg = build_config(cli)?;
    if let Some(w) = cfg.workers {
        // only fails if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| Fail::validation(format!("cannot create {}: {e}", cfg.out.display())))?;
    match cli.cmd {
        Cmd::Eigen => commands::eigen(&cfg),
        Cmd::Points => commands::points(&cfg),
        Cmd::Branch { .. } => commands::branch(&cfg),
        Cmd::Limit { .. } => commands::limit(&cfg),
        Cmd::Verify { .. } => commands::verify(&cfg),
        Cmd::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            if cli.json {
                match lvbif::export::to_sorted_json(&summary) {
                    Ok(s) => print!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(3);
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
