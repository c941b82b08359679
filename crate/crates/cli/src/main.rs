use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fracsys::report::{run, Mode, RunConfig};

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analyze,
    GroundState,
    Landscape,
    Nondegen,
    Rayleigh,
    Sweep,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Analyze => Mode::Analyze,
            ModeArg::GroundState => Mode::GroundState,
            ModeArg::Landscape => Mode::Landscape,
            ModeArg::Nondegen => Mode::Nondegen,
            ModeArg::Rayleigh => Mode::Rayleigh,
            ModeArg::Sweep => Mode::Sweep,
        }
    }
}

/// Proportional solutions, non-degeneracy and least-energy checks for a
/// coupled fractional Schrödinger system.
#[derive(Parser)]
#[command(name = "fracsys", version)]
struct Cli {
    mode: ModeArg,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    #[arg(long = "grid-L")]
    grid_l: Option<f64>,
    #[arg(long = "gs-tol")]
    gs_tol: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long = "descent-tol")]
    descent_tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fracsys: {}: {e}", cli.config.display());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    cfg.grid_n = cli.grid_n.or(cfg.grid_n);
    cfg.grid_l = cli.grid_l.or(cfg.grid_l);
    cfg.gs_tol = cli.gs_tol.unwrap_or(cfg.gs_tol);
    cfg.restarts = cli.restarts.unwrap_or(cfg.restarts);
    cfg.descent_tol = cli.descent_tol.unwrap_or(cfg.descent_tol);

    match run(&cfg, cli.mode.into(), &cli.out) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.exit_code != 0 {
                if let Some(msg) = outcome.report["error"]["message"].as_str() {
                    eprintln!("fracsys: {msg}");
                }
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("fracsys: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
