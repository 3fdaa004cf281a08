//! `twistube`: eigenvalue-moment bounds for twisted tubes from a TOML run
//! configuration.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::{config_hash, Emitter};

/// Environment variable that overrides the configured thread count.
const THREADS_ENV: &str = "TWISTUBE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "twistube", version, about = "Eigenvalue-moment bounds for twisted tubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; overrides the configuration and the environment.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for sampled slice points and eigensolver start vectors.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Bound sweep over the configured σ and Λ values.
    Bound,
    /// Bound versus its large-Λ surrogate.
    Asymptotics,
    /// Classical Berezin bound on truncated tubes versus the twisted bound.
    Compare,
    /// Slice intervals, width laws and Friedrichs checks for sampled points.
    Slices,
    /// Finite-difference eigenvalues below a cutoff.
    Spectrum,
    /// Eigenvalue moments against the bound; exit status 3 on failure.
    Verify,
    /// Sampled tube surface for plotting.
    Geometry,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Bound => "bound",
            Command::Asymptotics => "asymptotics",
            Command::Compare => "compare",
            Command::Slices => "slices",
            Command::Spectrum => "spectrum",
            Command::Verify => "verify",
            Command::Geometry => "geometry",
        }
    }
}

fn read_config(path: &Path) -> Result<(RunConfig, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::validation("--config", format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::validation("--config", "file is not UTF-8"))?;
    Ok((RunConfig::parse(&text)?, config_hash(&bytes)))
}

/// Flag, then environment, then configuration; otherwise rayon decides.
fn thread_count(flag: Option<usize>, configured: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(CliError::validation("--threads", "must be at least 1"))
        } else {
            Ok(Some(n))
        };
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::validation(THREADS_ENV, format!("{v:?} is not a positive integer"))),
        };
    }
    Ok(configured)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::validation("--config", "a configuration file is required"))?;
    let (mut cfg, hash) = read_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = thread_count(cli.threads, cfg.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let mut em = Emitter::new(&out, hash, cfg.seed)?;
    let result = match cli.command {
        Command::Bound => commands::bound(&cfg, &mut em),
        Command::Asymptotics => commands::asymptotics(&cfg, &mut em),
        Command::Compare => commands::compare(&cfg, &mut em),
        Command::Slices => commands::slices(&cfg, &mut em),
        Command::Spectrum => commands::spectrum(&cfg, &mut em),
        Command::Geometry => commands::geometry(&cfg, &mut em),
        Command::Verify => commands::verify(&cfg, &mut em).and_then(|reports| {
            let failed = reports.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                Err(CliError::Verification {
                    failed,
                    total: reports.len(),
                })
            } else {
                Ok(())
            }
        }),
    };
    for p in em.written() {
        eprintln!("wrote {}", p.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twistube {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
