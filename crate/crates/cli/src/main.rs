use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xxz_cli::config::{ExperimentConfig, RawConfig};
use xxz_cli::experiment::{self, prepare_out_dir, AnalysisOverrides, Grid};
use xxz_cli::presets::{self, Scale};
use xxz_cli::CliError;

/// Trajectory-ensemble simulator for disordered XXZ chains under collisional dephasing.
///
/// Configuration values can be overridden with environment variables named
/// XXZ_<SECTION>_<KEY>, e.g. XXZ_NOISE_RC=0.5 or XXZ_ENSEMBLE_TRAJECTORIES=20.
#[derive(Parser)]
#[command(name = "xxzsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Parallel {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write into a non-empty output directory.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        parallel: Parallel,
    },
    /// Run the cartesian product of a grid file over a base configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        parallel: Parallel,
    },
    /// Detect plateaus in an existing series CSV and print the report as JSON.
    Analyze {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        slope: Option<f64>,
        #[arg(long)]
        dmin: Option<f64>,
    },
    /// Run a named figure preset.
    Preset {
        #[arg(long, required_unless_present = "list")]
        name: Option<String>,
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
        /// Reduced trajectory count and grid (the default).
        #[arg(long, conflicts_with = "paper")]
        desk: bool,
        /// Full trajectory counts and grids.
        #[arg(long)]
        paper: bool,
        /// Write the preset's config and grid without running it.
        #[arg(long)]
        emit_only: bool,
        /// Print the available presets.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        parallel: Parallel,
    },
}

fn load_config(path: &Path) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::load(path)?;
    raw.apply_env(std::env::vars())?;
    Ok(raw)
}

fn threads(p: &Parallel) -> Result<Option<usize>, CliError> {
    match p.threads {
        Some(0) => Err(CliError::Validation("--threads must be at least 1".into())),
        t => Ok(t),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, force, parallel } => {
            let cfg = ExperimentConfig::from_raw(&load_config(&config)?)?;
            let result = experiment::run(&cfg, &out, force, threads(&parallel)?)?;
            eprintln!(
                "wrote {} (final {} = {:.6})",
                out.display(),
                if cfg.n_exc == 1 { "IPR" } else { "IER" },
                result.loc_final
            );
        }
        Command::Sweep { config, grid, out, force, parallel } => {
            let raw = load_config(&config)?;
            let grid = Grid::load(&grid)?;
            let threads = threads(&parallel)?;
            prepare_out_dir(&out, force)?;
            let results = experiment::run_sweep(&raw, &grid, &out, threads)?;
            eprintln!("wrote {} points to {}", results.len(), out.display());
        }
        Command::Analyze { series, window, slope, dmin } => {
            let report = experiment::analyze_series(&series, AnalysisOverrides { window, slope, d_min: dmin })?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{text}");
        }
        Command::Preset { name, out, desk: _, paper, emit_only, list, force, parallel } => {
            let scale = if paper { Scale::Paper } else { Scale::Desk };
            if list {
                for n in presets::NAMES {
                    let p = presets::preset(n, scale).expect("catalogued");
                    println!("{n:<8} {:>4} points  {:<16} {}", p.grid.points().len(), p.runtime, p.description);
                }
                return Ok(());
            }
            let (name, out) = (name.expect("required by clap"), out.expect("required by clap"));
            let preset = presets::preset(&name, scale).ok_or_else(|| {
                CliError::Validation(format!("unknown preset `{name}`; known: {}", presets::NAMES.join(", ")))
            })?;
            let results = presets::run_preset(&preset, &out, force, threads(&parallel)?, emit_only)?;
            eprintln!("preset {name}: {} points in {}", results.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
