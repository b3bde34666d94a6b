use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plasma_shock_cli::{run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "plasma-shock", version, about = "Shock structure of a fully ionized two-fluid plasma")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `outputs.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `solver.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel multi-start searches.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `KEY=VAL` with a dotted key, e.g. `solver.match_radius=2e-5`. Repeatable.
    #[arg(long = "tol-override", global = true, value_name = "KEY=VAL")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Tabulate every rest point sharing the upstream constants.
    Restpoints,
    /// Compute the shock profile and its residual report.
    Profile,
    /// Germain or parameter sweep.
    Sweep,
    /// Run the diagnostic suite.
    Check,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let path = args.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("solver.seed={seed}"));
    }
    let cfg = RunConfig::from_path(path, &overrides)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.outputs.dir));
    let command = match args.command {
        Cmd::Restpoints => Command::RestPoints,
        Cmd::Profile => Command::Profile,
        Cmd::Sweep => Command::Sweep,
        Cmd::Check => Command::Check,
    };
    let outcome = run(command, &cfg, &out)?;
    // a closed stdout must not turn a finished run into a failure
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", outcome.message);
    for f in &outcome.files {
        let _ = writeln!(stdout, "wrote {}", f.display());
    }
    Ok(outcome.code)
}
