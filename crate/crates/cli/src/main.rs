use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use thermoshift_cli::config::{apply_override, finish, preset, read_file};
use thermoshift_cli::{run_command, to_json, Command, RunOptions};

/// Thermodynamic formalism for interval IFS: pressure, eigendata, Gibbs
/// tables, equilibrium checks and dimension roots, reported as JSON.
#[derive(Parser, Debug)]
#[command(name = "thermoshift", version)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "system"])))]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON or TOML configuration file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// built-in system: bernoulli, affine, geometric-tail or cf
    #[arg(long, value_name = "TAG")]
    system: Option<String>,

    /// override a config value, e.g. --set numerics.grid=4096
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// stream the cylinder table as JSON lines to this file
    #[arg(long, value_name = "PATH")]
    tables: Option<PathBuf>,

    /// worker threads (default: all cores); results do not depend on it
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// include wall time in the report
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, (u8, String)> {
    let usage = |e: &dyn std::fmt::Display| (2u8, e.to_string());
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| usage(&e))?;
    }
    let mut value = match (&cli.config, &cli.system) {
        (Some(path), _) => read_file(path).map_err(|e| usage(&e))?,
        (None, Some(tag)) => preset(tag).map_err(|e| usage(&e))?,
        (None, None) => unreachable!("clap requires a source"),
    };
    for spec in &cli.overrides {
        apply_override(&mut value, spec).map_err(|e| usage(&e))?;
    }
    if let Some(seed) = cli.seed {
        apply_override(&mut value, &format!("seed={seed}")).map_err(|e| usage(&e))?;
    }
    let config = finish(value).map_err(|e| usage(&e))?;

    let opts = RunOptions {
        tables: cli.tables,
        timing: cli.timing,
    };
    let report = run_command(cli.command, &config, &opts).map_err(|e| (e.exit_code() as u8, e.to_string()))?;
    let text = to_json(&report, true).map_err(|e| (1, e.to_string()))?;
    match &cli.out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| (2, format!("{}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    for c in report
        .checks
        .iter()
        .filter(|c| c.status != thermoshift_core::Verdict::Pass)
    {
        eprintln!("{}: {:?}", c.name, c.status);
    }
    Ok(if report.passed() { 0 } else { 1 })
}
