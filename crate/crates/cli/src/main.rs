use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use cumsense::config::{Engine, ExperimentConfig, ExperimentKind, LagMap, RatioSweep, SignalKind};

#[derive(Parser)]
#[command(name = "cumsense", version, about = "Compressive cumulant sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smallest branch counts that can determine the cumulant.
    Feasibility(Flags),
    /// Minimal sparse ruler, printed as comma-separated marks.
    Ruler(Flags),
    /// Write simulated signal blocks.
    Gen(Flags),
    /// Monte-Carlo MSE of third-order cumulant recovery vs compression ratio.
    C3csMse(Flags),
    /// One third-order cumulant reconstruction.
    C3csRecover(Flags),
    /// Monte-Carlo NMSE of ruler-based slice estimates vs compression ratio.
    CcssNmse(Flags),
    /// One cumulant slice estimate.
    Slice(Flags),
    /// MUSIC pseudospectra from covariance and fourth-order slices.
    Music(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: out/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Compression ratio sweep lo:hi:step.
    #[arg(long)]
    ratios: Option<RatioSweep>,
    /// Block counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Slice orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Add colored Gaussian noise at this SNR.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Drop any configured noise.
    #[arg(long, conflicts_with = "snr_db")]
    clean: bool,
    #[arg(long, value_enum)]
    signal: Option<SignalKind>,
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    #[arg(long, value_enum)]
    lag_map: Option<LagMap>,
    /// Block lags kept by the direct engine.
    #[arg(long)]
    block_lags: Option<usize>,
    /// MUSIC lag-matrix order.
    #[arg(long)]
    order: Option<usize>,
    /// MUSIC frequency grid size.
    #[arg(long)]
    grid: Option<usize>,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, Flags) {
        match self {
            Command::Feasibility(f) => (ExperimentKind::Feasibility, f),
            Command::Ruler(f) => (ExperimentKind::Ruler, f),
            Command::Gen(f) => (ExperimentKind::Gen, f),
            Command::C3csMse(f) => (ExperimentKind::C3csMse, f),
            Command::C3csRecover(f) => (ExperimentKind::C3csRecover, f),
            Command::CcssNmse(f) => (ExperimentKind::CcssNmse, f),
            Command::Slice(f) => (ExperimentKind::Slice, f),
            Command::Music(f) => (ExperimentKind::Music, f),
        }
    }
}

fn resolve(kind: ExperimentKind, f: Flags) -> Result<(ExperimentConfig, bool)> {
    let mut cfg = match &f.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if cfg.experiment != kind {
                bail!("{} holds a {} config, not {}", path.display(), cfg.experiment.name(), kind.name());
            }
            cfg
        }
        None => ExperimentConfig::defaults(kind),
    };
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {$(
            if let Some(v) = f.$flag { cfg.$field = v; }
        )*};
    }
    set!(n => n, trials => trials, seed => seed, signal => signal, engine => engine, lag_map => lag_map,
         block_lags => block_lags, order => music_order, grid => music_grid, k => k, q => q);
    if let Some(m) = f.m {
        cfg.m = Some(m);
        cfg.ratios = None;
    }
    if let Some(r) = f.ratios {
        cfg.ratios = Some(r);
    }
    if f.clean {
        cfg.noise = None;
    }
    if let Some(snr) = f.snr_db {
        cfg.set_snr_db(snr);
    }
    if f.out.is_some() {
        cfg.out = f.out;
    }
    cfg.validate()?;
    Ok((cfg, f.print_config))
}

fn main() -> ExitCode {
    let (kind, flags) = Cli::parse().command.split();
    let result = resolve(kind, flags).and_then(|(cfg, print_only)| {
        if print_only {
            // a closed pipe is not an error for a printing command
            let _ = writeln!(std::io::stdout(), "{}", cfg.to_json());
            return Ok(());
        }
        let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
        let summary = cumsense::run(&cfg, &dir)?;
        let _ = writeln!(std::io::stdout(), "{summary}");
        eprintln!("wrote {}", dir.display());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
