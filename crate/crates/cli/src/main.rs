use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfs_core::SfsError;

mod commands;

#[derive(Parser)]
#[command(
    name = "sfs",
    version,
    about = "Height from shading: render, reconstruct, evaluate, bench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scene to an 8-bit image and mask.
    Render(Common),
    /// Recover a height field from an image.
    Reconstruct(Common),
    /// Score a reconstructed height field.
    Evaluate(Common),
    /// Run a benchmark table.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Directory for relative output paths (default: the config's directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "SFS_THREADS")]
    threads: Option<usize>,
}

fn exit_code(e: &SfsError) -> u8 {
    match e {
        SfsError::Config(_) | SfsError::InvalidParameter(_) | SfsError::Unsupported(_) => 2,
        SfsError::NoConvergence(_) => 3,
        SfsError::Io(_) | SfsError::MalformedHeader(_) | SfsError::UnsupportedDepth(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Render(c) => (commands::Kind::Render, c),
        Command::Reconstruct(c) => (commands::Kind::Reconstruct, c),
        Command::Evaluate(c) => (commands::Kind::Evaluate, c),
        Command::Bench(c) => (commands::Kind::Bench, c),
    };
    let run = commands::Invocation {
        config: common.config,
        out_dir: common.out_dir,
        threads: common.threads,
    };
    match commands::run(kind, &run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sfs: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
