use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cv2x_sweep::{
    load_config, parse_config, write_outputs, CsvLayout, Mode, RunConfig, SweepError,
};

/// Runs threshold sweeps of the distance-prioritized channel-access model and
/// writes CSV tables plus a summary report.
#[derive(Debug, Parser)]
#[command(name = "cv2x-sweep", version)]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Evaluation path, overriding the configuration.
    #[arg(short, long, value_parser = parse_mode)]
    mode: Option<Mode>,

    /// Output directory, overriding the configuration.
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Seed for both the scenario and the simulator.
    #[arg(short, long)]
    seed: Option<u64>,

    /// Write one CSV per metric instead of a single combined table.
    #[arg(long)]
    split_csv: bool,

    /// Increase log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "analytic" => Ok(Mode::Analytic),
        "montecarlo" => Ok(Mode::Montecarlo),
        "both" => Ok(Mode::Both),
        _ => Err(format!("expected analytic, montecarlo or both, got `{s}`")),
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, SweepError> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => parse_config("")?,
    };
    if let Some(mode) = cli.mode {
        config.mode = mode;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.scenario.seed = seed;
        config.montecarlo.seed = Some(seed);
    }
    if cli.split_csv {
        config.csv_layout = CsvLayout::PerMetric;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), SweepError> {
    let config = resolve(cli)?;
    let outcome = cv2x_sweep::run_sweep_detailed(&config)?;
    let written = write_outputs(
        &config,
        &outcome.rows,
        &outcome.montecarlo,
        &config.output_dir,
    )?;
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}
