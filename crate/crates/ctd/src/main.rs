use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ctd::config::{Command, ExperimentConfig};
use ctd::error::{exit, CliError, Result};

/// Nested-well rotor experiments.
///
/// Settings are taken from `--config` (a key=value file or any file this
/// tool wrote) and then overridden by flags.
#[derive(Debug, Parser)]
#[command(name = "ctd", version)]
struct Cli {
    /// analyze | schedule | verify | sample | mcmc | ctd-demo; may come from the config header
    command: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    truncation: Option<String>,
    /// exact | paper
    #[arg(long)]
    mode: Option<String>,
    /// One value or a comma-separated list
    #[arg(long)]
    beta: Option<String>,
    /// n_lo..n_hi
    #[arg(long)]
    schedule: Option<String>,
    /// L or LxL
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    sweeps: Option<String>,
    #[arg(long = "burn-in")]
    burn_in: Option<String>,
    #[arg(long)]
    thin: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Independent replicas per schedule entry (ctd-demo)
    #[arg(long)]
    seeds: Option<String>,
    /// random | aligned | neel
    #[arg(long)]
    init: Option<String>,
    /// Probability of a uniform proposal; the rest targets well windows
    #[arg(long = "w-global")]
    w_global: Option<String>,
    /// Comma-separated acceptance criteria (verify)
    #[arg(long)]
    criteria: Option<String>,
    /// Directory for the offset and convexity tables (verify)
    #[arg(long)]
    tables: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Extra key=value settings, e.g. tol.mcmc_tv=0.01
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn configure(cli: &Cli) -> Result<(Command, ExperimentConfig)> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let flags = [
        ("epsilon", &cli.epsilon),
        ("truncation", &cli.truncation),
        ("mode", &cli.mode),
        ("beta", &cli.beta),
        ("schedule", &cli.schedule),
        ("dims", &cli.dims),
        ("sweeps", &cli.sweeps),
        ("burn_in", &cli.burn_in),
        ("thin", &cli.thin),
        ("seed", &cli.seed),
        ("seeds", &cli.seeds),
        ("init", &cli.init),
        ("w_global", &cli.w_global),
        ("criteria", &cli.criteria),
        ("format", &cli.format),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| CliError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v).map_err(|e| CliError::Config(format!("--set {k}: {e}")))?;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(t) = &cli.tables {
        cfg.tables = Some(t.clone());
    }
    let command = match &cli.command {
        Some(c) => c.parse().map_err(CliError::Config)?,
        None => cfg
            .command
            .ok_or_else(|| CliError::Config("no command given and none recorded in the config".into()))?,
    };
    Ok((command, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure(&cli).and_then(|(command, cfg)| ctd::commands::run(command, &cfg));
    match result {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
