use std::path::PathBuf;
use std::process::ExitCode;

use chaoslight::harness::{
    run_eigen, run_experiment, write_eigen_outputs, write_outputs, ExperimentConfig, ExperimentKind,
};
use chaoslight::{Error, Result};
use clap::{Parser, Subcommand};

/// Laser + chaotic-light ionization experiments on a 1D soft-core atom.
#[derive(Debug, Parser)]
#[command(name = "chaoslight", version, about)]
struct Cli {
    /// Experiment config (TOML). Without it the built-in protocol is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of chaotic-light realizations.
    #[arg(long, global = true)]
    realizations: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "CHAOSLIGHT_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground-state energy and the first bound levels.
    Eigen,
    /// Ionization probability against laser peak field.
    AmplitudeSweep,
    /// Enhancement factor against chaotic rms amplitude.
    Enhancement,
    /// Wavepacket density maps for the four field configurations.
    Density,
    /// Bound-level populations at the end of the pulse.
    Populations,
    /// Frequency-resolved gain of the bare and driven atom.
    Frag,
    /// Enhancement against the upper edge of the chaotic band.
    Bandwidth,
    /// Enhancement curves for narrow bands around the first transition.
    Narrowband,
    /// Enhancement curves for odd and all-order harmonic combs.
    Harmonics,
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Eigen => return None,
            Command::AmplitudeSweep => ExperimentKind::AmplitudeSweep,
            Command::Enhancement => ExperimentKind::EnhancementCurve,
            Command::Density => ExperimentKind::DensityMap,
            Command::Populations => ExperimentKind::Populations,
            Command::Frag => ExperimentKind::Frag,
            Command::Bandwidth => ExperimentKind::BandwidthSweep,
            Command::Narrowband => ExperimentKind::NarrowbandCurve,
            Command::Harmonics => ExperimentKind::HarmonicCurve,
        })
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let kind = cli.command.kind();
    let mut cfg = match (&cli.config, kind) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(kind)) => ExperimentConfig::preset(kind),
        (None, None) => ExperimentConfig::preset(ExperimentKind::AmplitudeSweep),
    };
    if let Some(kind) = kind {
        if cfg.kind != kind {
            return Err(Error::Config(format!(
                "config describes a {} experiment, not {kind}",
                cfg.kind
            )));
        }
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = cli.realizations {
        cfg.n_realizations = n;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli).map_err(|e| e.in_stage("config"))?;
    match cli.command.kind() {
        None => {
            let report = run_eigen(&cfg)?;
            println!("E0 = {:.6}", report.basis.ground_energy());
            println!("omega12 = {:.6}", report.first_transition());
            for (k, e) in report.basis.energies.iter().enumerate() {
                println!("level {k:2}  {e:.6}");
            }
            write_eigen_outputs(&cfg, &report, &cfg.output_dir).map_err(|e| e.in_stage("output"))?;
        }
        Some(_) => {
            let result = run_experiment(&cfg)?;
            let manifest =
                write_outputs(&cfg, &result, &cfg.output_dir).map_err(|e| e.in_stage("output"))?;
            for (k, v) in &result.summary {
                println!("{k} = {v}");
            }
            println!("wrote {}", manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("chaoslight: stage 'startup' failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chaoslight: {e}");
            ExitCode::FAILURE
        }
    }
}
