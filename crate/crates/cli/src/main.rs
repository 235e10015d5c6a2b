use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;
use skewspec_cli::output::OutDir;
use skewspec_cli::{commands, config, CliError, Command};

/// Certified spectral bounds for skew-shift, Harper and related operators.
#[derive(Debug, Parser)]
#[command(name = "skewspec", version)]
struct Args {
    command: Command,
    /// TOML config file; omitted sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set grids.nx=512`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

fn thread_count(configured: usize) -> usize {
    let cap = std::env::var("SKEWSPEC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|v| *v > 0);
    match (configured, cap) {
        (0, Some(c)) => c,
        (n, Some(c)) => n.min(c),
        (n, None) => n,
    }
}

fn run(args: &Args) -> Result<(), CliError> {
    let cfg = config::load(args.config.as_deref(), &args.sets, args.command)?;
    let threads = thread_count(cfg.threads);
    if threads > 0 {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let out = OutDir::create(&args.out)?;
    let start = Instant::now();
    let written = commands::run(&cfg, &out)?;
    out.write_json(
        "run_metadata.json",
        &json!({
            "wall_time_seconds": start.elapsed().as_secs_f64(),
            "threads": rayon::current_num_threads(),
            "files": written,
        }),
    )?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("skewspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
