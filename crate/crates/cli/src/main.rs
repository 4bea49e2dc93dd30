//! `relaxo`: command-line front end for the relaxometry simulator.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relaxometry::config::{SceneConfig, PRESET_NAMES};
use relaxometry::{Error, Protocol};

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "relaxo", version, about = "Direct NV versus reporter-spin T1 relaxometry: rates, signals, speed maps and images")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scene configuration file (JSON).
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset: fig1c, fig2a-fig2d, fig3-reporter, fig3-nv, fig3-tilted, fig3-tilted-flipped.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Override the configuration's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Relaxation rates, couplings and field variances of the scene.
    Rates {
        /// Drop the target from the scene.
        #[arg(long)]
        without_target: bool,
    },
    /// Protocol signal versus probe time, with the telegraph oracle.
    Signal {
        /// Overrides the configured protocol (reporter or direct).
        #[arg(long)]
        protocol: Option<Protocol>,
        #[arg(long)]
        without_target: bool,
        /// Skip the Monte Carlo columns.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Speed-enhancement map over two scene parameters.
    Sweep {
        /// Points per axis, overriding the configuration.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Simulated scanning image with adaptive dwell.
    Image {
        /// Pixels per side, overriding the configuration.
        #[arg(long)]
        pixels: Option<usize>,
    },
    /// Telegraph Monte Carlo against exp(-tau/T1).
    Oracle,
    /// Print the effective configuration as JSON.
    Config,
}

fn load(common: &Common) -> Result<(SceneConfig, String), Error> {
    let (mut cfg, source) = match (&common.config, &common.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            (SceneConfig::from_json(&text)?, path.display().to_string())
        }
        (None, Some(name)) => (SceneConfig::preset(name)?, format!("preset:{name}")),
        (None, None) => {
            return Err(Error::invalid("config", format!("give --config PATH or --preset NAME ({})", PRESET_NAMES.join(", "))));
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok((cfg, source))
}

/// 1 I/O, 3 invalid input, 4 computation failure. Usage errors exit with 2
/// from the argument parser.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        e if e.is_validation() => 3,
        _ => 4,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Error::invalid("threads", "must be >= 1"));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (cfg, source) = load(&cli.common)?;
    let ctx = commands::Context::new(cfg, source, cli.common.format)?;
    let outputs = match &cli.command {
        Command::Rates { without_target } => commands::rates(&ctx, *without_target)?,
        Command::Signal { protocol, without_target, no_oracle } => commands::signal(&ctx, *protocol, *without_target, !*no_oracle)?,
        Command::Sweep { points } => commands::sweep(&ctx, *points)?,
        Command::Image { pixels } => commands::image(&ctx, *pixels)?,
        Command::Oracle => commands::oracle(&ctx)?,
        Command::Config => commands::config(&ctx),
    };
    commands::emit(outputs, cli.common.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("relaxo: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
