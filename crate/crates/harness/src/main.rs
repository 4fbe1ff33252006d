use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cycspec::config::Config;
use cycspec::output::emit_gnuplot;
use cycspec::{emit_results, run, ExperimentKind, HarnessError};

/// Run a coherent-link experiment family and write its results as CSV.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Cli {
    /// TOML configuration file.
    config: PathBuf,
    /// Experiment family; defaults to the one named in the config.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// Output CSV path.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Override the number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Reduced profile: 2^14 symbols, one seed, two OSNR points.
    #[arg(long)]
    smoke: bool,
}

fn exit_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Config(_) => 2,
        HarnessError::Simulation(_) | HarnessError::Output(_) => 3,
    }
}

fn main_inner(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = Config::load(&cli.config)?;
    if cli.smoke {
        cfg.apply_smoke();
    }
    if let Some(n) = cli.seeds {
        cfg.experiment.n_seeds = n;
    }
    cfg.validate()?;
    let kind = cli.experiment.unwrap_or(cfg.experiment.kind);
    let (rows, summary) = run(&cfg, kind)?;
    emit_results(&rows, &cli.out)?;
    if let Some(dir) = &cfg.output.gnuplot_dir {
        emit_gnuplot(&summary, dir.as_ref(), kind.as_str())?;
    }
    let failed = rows.iter().filter(|r| r.failure.is_some()).count();
    println!("{} {} rows -> {} (config {})", kind.as_str(), rows.len(), cli.out.display(), cfg.hash());
    if failed > 0 {
        println!("{failed} rows recorded a receiver failure");
    }
    print!("{}", summary.render());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
