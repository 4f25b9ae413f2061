use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fieldlab_core::runner::{run, RunConfig, Task};
use fieldlab_core::FieldlabError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Check,
    Solve,
    Envelope,
    Transfer,
    Sweep,
    Verify,
}

impl From<Command> for Task {
    fn from(c: Command) -> Self {
        match c {
            Command::Check => Task::Check,
            Command::Solve => Task::Solve,
            Command::Envelope => Task::Envelope,
            Command::Transfer => Task::Transfer,
            Command::Sweep => Task::Sweep,
            Command::Verify => Task::Verify,
        }
    }
}

/// Radial bound states, envelopes and Kirchhoff transfers in batch mode.
#[derive(Debug, Parser)]
#[command(name = "fieldlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Dotted override, e.g. `--set shooting.integrator.atol=1e-13`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory (replaces `output` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = RunConfig::load(&cli.config, &cli.overrides).and_then(|mut cfg| {
        if let Some(out) = cli.out {
            cfg.output = out;
        }
        run(cli.command.into(), &cfg)
    });
    match result {
        Ok(summary) => {
            for m in &summary.messages {
                println!("{m}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fieldlab: {e}");
            exit(&e)
        }
    }
}

fn exit(e: &FieldlabError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
