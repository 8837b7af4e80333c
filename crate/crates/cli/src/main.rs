//! `infospec`: information-spectrum bounds, codes and transmissibility checks
//! for scenarios described in JSON.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use commands::Context;
use output::Table;
use scenario::{Overrides, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "infospec",
    version,
    about = "Information-spectrum laboratory for joint source-channel coding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (JSON, version 1).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Directory for CSV output, one file per table; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the blocklength grid, e.g. `--n 10,20,40`.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Override the slack: one value sets a constant schedule; a list sets the bound sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    /// Tail level of the limit estimators.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Enumeration budget (outcome count).
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for sampled codebooks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Entropy and information spectra as atoms.
    Spectrum,
    /// Feinstein, Verdu-Han and separation bounds over the n and gamma grids.
    Bounds,
    /// Build and evaluate two-step and threshold codes.
    Code,
    /// Brute-force optimal error.
    Oracle,
    /// Transmissibility condition traces.
    Check,
    /// Rate and capacity estimates.
    Rates,
    /// Every table for the scenario.
    Report,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] infospec::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Model(e) if e.is_budget() => 1,
            CliError::Model(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Validation("--scenario <path> is required".into()))?;
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: not UTF-8: {e}", path.display())))?;
    let mut scenario = Scenario::parse(text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let overrides = Overrides {
        n_grid: cli.n.clone(),
        gammas: cli.gamma.clone(),
        eps: cli.eps,
        budget: cli.budget,
        seed: cli.seed,
    };
    scenario.apply(&overrides);
    scenario
        .validate()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;

    let hash = format!("{:x}", Sha256::digest(&bytes));
    let provenance = provenance(&scenario.name, cli);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let ctx = Context::new(&scenario);
    let tables = pool.install(|| match cli.command {
        Command::Spectrum => commands::spectrum(&ctx),
        Command::Bounds => commands::bounds(&ctx),
        Command::Code => commands::code(&ctx),
        Command::Oracle => commands::oracle(&ctx),
        Command::Check => commands::check(&ctx),
        Command::Rates => commands::rates(&ctx),
        Command::Report => commands::report(&ctx),
    })?;
    emit(&tables, &provenance, &hash, cli.out.as_ref())
}

/// Scenario name plus any command-line overrides, for the provenance line.
fn provenance(name: &str, cli: &Cli) -> String {
    let mut parts = Vec::new();
    let join = |v: &[String]| v.join(";");
    if let Some(n) = &cli.n {
        parts.push(format!(
            "n={}",
            join(&n.iter().map(|x| x.to_string()).collect::<Vec<_>>())
        ));
    }
    if let Some(g) = &cli.gamma {
        parts.push(format!(
            "gamma={}",
            join(&g.iter().map(|x| x.to_string()).collect::<Vec<_>>())
        ));
    }
    if let Some(e) = cli.eps {
        parts.push(format!("eps={e}"));
    }
    if let Some(b) = cli.budget {
        parts.push(format!("budget={b}"));
    }
    if let Some(s) = cli.seed {
        parts.push(format!("seed={s}"));
    }
    if parts.is_empty() {
        name.to_string()
    } else {
        format!("{name} overrides={}", parts.join(","))
    }
}

fn emit(
    tables: &[Table],
    scenario: &str,
    hash: &str,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    let render = |t: &Table| {
        t.to_csv(scenario, hash)
            .map_err(|e| CliError::Io(e.to_string()))
    };
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            for t in tables {
                std::fs::write(dir.join(format!("{}.csv", t.name)), render(t)?).map_err(io)?;
            }
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(stdout).map_err(io)?;
                }
                stdout.write_all(&render(t)?).map_err(io)?;
            }
        }
    }
    Ok(())
}
