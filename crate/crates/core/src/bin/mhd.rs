use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mhd_core::cli::{exit_code, parse_config, run, Mode};

/// Decoupled second-order finite element solver for 2D incompressible MHD.
#[derive(Parser, Debug)]
#[command(name = "mhd", version, allow_negative_numbers = true)]
struct Args {
    /// single-run, converge-time, converge-space or energy
    mode: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cells per side.
    #[arg(long = "M")]
    m: Option<String>,
    /// Time step; fractions like 1/500 are accepted.
    #[arg(long)]
    tau: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    t: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Use the published mesh and step settings instead of desk-scale ones.
    #[arg(long)]
    paper_exact: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = args.mode.parse::<Mode>().and_then(|mode| {
        let flags: Vec<(&str, String)> = [("M", &args.m), ("tau", &args.tau), ("T", &args.t), ("out", &args.out)]
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        let cfg = parse_config(mode, args.config.as_deref(), &flags, args.paper_exact)?;
        run(&cfg)
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mhd: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
