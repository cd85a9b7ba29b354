use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kerr_echo_cli::{parse_config, presets, run_scenario, ConfigError, RunError, ScenarioConfig};

/// Simulates echoes in a kicked Kerr-nonlinear oscillator and writes CSV data.
///
/// Set KERR_ECHO_THREADS to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "kerr-echo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        /// Output prefix (overrides `output.prefix` in the file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in preset.
    Preset {
        name: String,
        /// Output prefix; defaults to the preset name.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset's scenario file instead of running it.
        #[arg(long)]
        show: bool,
    },
    /// List built-in presets.
    PresetsList,
}

fn run(cfg: &ScenarioConfig, prefix: &Path) -> Result<(), RunError> {
    log::info!("running {:?} scenario, output prefix {}", cfg.mode, prefix.display());
    for path in run_scenario(cfg, prefix)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = kerr_echo_cli::init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::PresetsList => {
            for name in presets::names() {
                let cfg = presets::preset(name).expect("built-in presets are valid");
                println!("{name:<16}{}", cfg.description.unwrap_or_default());
            }
            Ok(())
        }
        Command::Preset { name, out, show } => match presets::preset(&name) {
            Err(e) => Err(RunError::Config(e)),
            Ok(_) if show => {
                print!("{}", presets::preset_source(&name).expect("exists"));
                Ok(())
            }
            Ok(cfg) => run(&cfg, &out.unwrap_or_else(|| PathBuf::from(&name))),
        },
        Command::Run { config, out } => match parse_config(&config) {
            Err(e) => Err(RunError::Config(e)),
            Ok(cfg) => {
                let prefix = out
                    .or_else(|| cfg.output.prefix.as_ref().map(PathBuf::from))
                    .unwrap_or_else(|| config.with_extension(""));
                run(&cfg, &prefix)
            }
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let RunError::Config(ConfigError::Parse { .. }) = e {
                eprintln!("hint: see `kerr-echo preset fig2 --show` for a complete scenario file");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
