mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::{Ctx, ConfigError};
use config::RunConfig;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Critical curve, contact points and equilibria of N.
    Analyze,
    /// Singular relaxation cycle.
    Cycle,
    /// Full-eps trajectory and limit cycle.
    Simulate,
    /// Epsilon ladder: exit offsets, Floquet exponents, distances.
    Scale,
    /// Friction oscillator regimes over a belt-speed grid.
    Regimes,
    /// Stroke counts over an (eps, delta) grid.
    Strokes,
    /// Special solution of the rescaling-chart Riccati equation.
    Riccati,
    /// Built-in models and their parameters.
    ListModels,
}

/// Slow-fast analysis of planar systems z' = N(z) f(z) + eps G(z; eps).
#[derive(Debug, Parser)]
#[command(name = "gspt", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single eps value (overrides `eps` in the config).
    #[arg(long)]
    eps: Option<f64>,
    /// Only report errors.
    #[arg(long)]
    quiet: bool,
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config = match (&cli.config, cli.command) {
        (Some(path), _) => RunConfig::load(path).map_err(ConfigError)?,
        (None, Command::ListModels) => RunConfig::default(),
        (None, _) => return Err(ConfigError("--config is required for this command".into()).into()),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("gspt-out"));
    let ctx = Ctx {
        config,
        out_dir,
        eps_override: cli.eps,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Analyze => commands::analyze(&ctx),
        Command::Cycle => commands::cycle(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Scale => commands::scale(&ctx),
        Command::Regimes => commands::regimes(&ctx),
        Command::Strokes => commands::strokes(&ctx),
        Command::Riccati => commands::riccati(&ctx),
        Command::ListModels => commands::list_models(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}
