use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sqwlab::harness::{
    dump_operator, parse_config, run_with_threads, verify_dir, EstimatorKind, ExperimentConfig, HarnessError, EXIT_ASSERTION,
    EXIT_PASS, EXIT_USAGE,
};

/// Random scattering quantum walks: spectra, correlators and disorder averages.
#[derive(Debug, Parser)]
#[command(name = "sqwlab", version, arg_required_else_help = true)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the edge list and the walk matrix of one realization.
    Build,
    /// Eigenvalues of one realization.
    Spectrum,
    /// Spectral measure and correlator of two edges for one realization.
    Ec,
    /// Fractional moments of the resolvent.
    Fracmom,
    /// Single-phase spectral average.
    Specavg,
    /// Gap probability of the reflection walk against its bound.
    Gapprob,
    /// Fractional-moment decay over a strength ladder.
    Decay,
    /// Dynamical probe decay over a strength ladder.
    Dynloc,
    /// Two-step geometric resolvent identity.
    CheckIdentities,
    /// Correlator against fractional moments of a restricted walk.
    CheckFmec,
    /// Off-block resolvent moments near the identity family.
    Smallness,
    /// Every estimator listed in the config.
    Run,
    /// Check that every output file matches the sidecar's config hash.
    Verify {
        /// Output directory (default: --out, then the config's out_dir).
        dir: Option<PathBuf>,
    },
}

fn load(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let path = cli.config.as_ref().ok_or_else(|| HarnessError::Parse("--config is required".into()))?;
    let mut config = parse_config(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn estimator(command: &Command) -> Option<EstimatorKind> {
    Some(match command {
        Command::Spectrum => EstimatorKind::Spectrum,
        Command::Ec => EstimatorKind::Ec,
        Command::Fracmom => EstimatorKind::Fracmom,
        Command::Specavg => EstimatorKind::Specavg,
        Command::Gapprob => EstimatorKind::Gapprob,
        Command::Decay => EstimatorKind::Decay,
        Command::Dynloc => EstimatorKind::Dynloc,
        Command::CheckIdentities => EstimatorKind::Identities,
        Command::CheckFmec => EstimatorKind::Fmec,
        Command::Smallness => EstimatorKind::Smallness,
        Command::Build | Command::Run | Command::Verify { .. } => return None,
    })
}

fn execute(cli: &Cli) -> Result<i32, HarnessError> {
    if let Command::Verify { dir } = &cli.command {
        let dir = match (dir, &cli.out) {
            (Some(d), _) | (None, Some(d)) => d.clone(),
            (None, None) => load(cli)?.out_dir,
        };
        let problems = verify_dir(&dir)?;
        for p in &problems {
            eprintln!("{p}");
        }
        if !cli.quiet && problems.is_empty() {
            println!("{}: all files match the sidecar", dir.display());
        }
        return Ok(if problems.is_empty() { EXIT_PASS } else { EXIT_ASSERTION });
    }

    let config = load(cli)?;
    if let Command::Build = cli.command {
        let files = dump_operator(&config, &config.out_dir)?;
        if !cli.quiet {
            for f in files {
                println!("wrote {}", config.out_dir.join(f).display());
            }
        }
        return Ok(EXIT_PASS);
    }
    let config = match estimator(&cli.command) {
        Some(kind) => config.only(kind),
        None => config,
    };
    let outcome = run_with_threads(&config, cli.threads)?;
    if !cli.quiet {
        for r in &outcome.records {
            match r.std_error {
                Some(se) => println!("{} {} = {} +- {}", r.estimator, r.key, number(r.value), number(se)),
                None => println!("{} {} = {}", r.estimator, r.key, number(r.value)),
            }
        }
        println!("wrote {} files to {} (config {})", outcome.files.len(), config.out_dir.display(), &outcome.config_hash[..12]);
    }
    for f in &outcome.failures {
        eprintln!("FAILED {f}");
    }
    Ok(outcome.exit_code())
}

fn number(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
