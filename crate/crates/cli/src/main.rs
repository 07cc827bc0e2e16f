//! `kzchain`: runs the simulation scenarios and writes CSV/JSON results.

mod config;
mod error;
mod output;
mod scenarios;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Config, RawConfig};
use error::CliError;
use output::Outputs;
use scenarios::{find, SCENARIOS};

/// Environment variable holding the worker-thread count.
const WORKERS_VAR: &str = "KZCHAIN_WORKERS";

#[derive(Parser)]
#[command(
    name = "kzchain",
    version,
    about = "Quench dynamics of the transverse-field Ising chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario. Parameters come from --config and then from
    /// `--key value` pairs, e.g. `kzchain run ed-drive --g 0.25 --A 0.005`.
    Run {
        scenario: String,
        /// TOML file with flat `key = value` entries.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default out/<scenario>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parameter overrides as `--key value` or `--key=value`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
        params: Vec<String>,
    },
    /// List scenarios and their parameters.
    List,
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn init_workers() -> Result<usize, CliError> {
    if let Ok(text) = std::env::var(WORKERS_VAR) {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::validation(format!("{WORKERS_VAR} must be a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("{WORKERS_VAR}: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn run(scenario: &str, config: Option<PathBuf>, out: Option<PathBuf>, params: &[String]) -> Result<(), CliError> {
    let mut raw = match &config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    raw.apply_overrides(params)?;
    if let Some(dir) = out {
        raw.output_dir = Some(dir);
    }
    let resolved: Config = raw.resolve(scenario)?;
    let workers = init_workers()?;
    let def = find(scenario).expect("resolved scenario exists");
    let mut outputs = Outputs::create(&resolved.output_dir)?;
    let start = Instant::now();
    let summary = (def.run)(&resolved, &mut outputs)?;
    let wall = start.elapsed().as_secs_f64();
    let manifest = json!({
        "scenario": resolved.scenario,
        "version": env!("CARGO_PKG_VERSION"),
        "config": resolved,
        "outputs": outputs.files,
        "summary": summary,
        "workers": workers,
        "wall_time_s": wall,
    });
    let files = outputs.files.clone();
    outputs.json("manifest.json", &manifest)?;
    println!("{scenario}: wrote {} to {}", files.join(", "), outputs.dir().display());
    println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    Ok(())
}

fn list() -> std::io::Result<()> {
    let mut w = std::io::stdout().lock();
    for s in SCENARIOS {
        writeln!(w, "{:<16} {}", s.name, s.description)?;
        for p in s.params {
            let default = (p.default)().to_string();
            writeln!(
                w,
                "    {:<18} {:<17} default {:<28} {}",
                p.key,
                p.kind.to_string(),
                default,
                p.help
            )?;
        }
        writeln!(w, "    outputs: {}, manifest.json", s.outputs.join(", "))?;
    }
    Ok(())
}

fn validate(path: PathBuf) -> Result<(), CliError> {
    let raw = RawConfig::load(&path)?;
    let scenario = raw
        .scenario
        .clone()
        .ok_or_else(|| CliError::validation("config: missing 'scenario' key"))?;
    let c = raw.resolve(&scenario)?;
    println!("{}: valid {} configuration", path.display(), c.scenario);
    for (k, v) in &c.params {
        println!("    {k} = {v}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            config,
            out,
            params,
        } => run(&scenario, config, out, &params),
        // a closed pipe is not an error for a listing
        Command::List => {
            let _ = list();
            Ok(())
        }
        Command::Validate { config } => validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kzchain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
