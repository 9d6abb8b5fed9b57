use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mbradar::dsp::Window;
use mbradar_cli::{load, run, CliError, Experiment, Overrides};

/// Photonic multiband radar simulator.
#[derive(Parser, Debug)]
#[command(name = "mbradar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Reject unknown config keys (default).
    #[arg(long, global = true, conflicts_with = "lax")]
    strict: bool,

    /// Warn about unknown config keys instead of failing.
    #[arg(long, global = true)]
    lax: bool,

    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Harmonic coefficients, subband plan and de-chirped spectrum.
    SimulateSpectrum(RunArgs),
    /// Single-band (or selected-mode) range profiles.
    RangeProfile(RunArgs),
    /// Multiband fused range profile.
    Fuse(RunArgs),
    /// Range-Doppler image of a rotating scene.
    Isar(RunArgs),
    /// Bisect the smallest resolvable two-target separation per mode.
    SweepResolution(RunArgs),
    /// Run the experiment named in the config.
    Run(RunArgs),
    /// Check a config without running anything.
    Validate(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario file (JSON).
    config: PathBuf,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Range window: rect, hann or blackman-harris.
    #[arg(long)]
    window: Option<Window>,

    /// subband:L, fused-direct or fused-allpole.
    #[arg(long)]
    mode: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[allow(clippy::result_large_err)]
fn execute(cli: &Cli) -> Result<(), CliError> {
    let (args, experiment) = match &cli.command {
        Command::SimulateSpectrum(a) => (a, Some(Experiment::Spectrum)),
        Command::RangeProfile(a) => (a, Some(Experiment::Range)),
        Command::Fuse(a) => (a, Some(Experiment::Fuse)),
        Command::Isar(a) => (a, Some(Experiment::Isar)),
        Command::SweepResolution(a) => (a, Some(Experiment::Sweep)),
        Command::Run(a) | Command::Validate(a) => (a, None),
    };
    let ov = Overrides {
        seed: args.seed,
        output_dir: args.out.clone(),
        window: args.window,
        mode: args.mode.clone(),
        experiment,
    };
    let scn = load(&args.config, !cli.lax, &ov)?;
    if let Command::Validate(_) = cli.command {
        println!("{}: valid {} scenario", args.config.display(), scn.config.experiment.name());
        return Ok(());
    }
    let report = run(&scn)?;
    println!("{} done: {} files in {}", report.experiment.name(), report.files.len(), scn.config.output_dir.display());
    Ok(())
}
