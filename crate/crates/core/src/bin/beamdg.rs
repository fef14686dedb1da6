use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use beamdg::cli::{
    run_convergence, run_energy_history, run_solve, ConfigError, ExperimentConfig, RunOutput,
};
use clap::{Args, Parser, Subcommand};

/// Energy-based DG experiments for the Euler-Bernoulli beam.
#[derive(Parser)]
#[command(name = "beamdg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error norms and observed rates over a sequence of meshes.
    Convergence(Paths),
    /// Discrete energy over time, as CSV and SVG.
    EnergyHistory(Paths),
    /// Sampled solution and pointwise error at the final time.
    Solve(Paths),
}

#[derive(Args)]
struct Paths {
    /// Experiment config (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(command: &Command) -> Result<(RunOutput, String), ConfigError> {
    let (paths, runner, default_stem): (
        &Paths,
        fn(&ExperimentConfig) -> Result<RunOutput, ConfigError>,
        &str,
    ) = match command {
        Command::Convergence(p) => (p, run_convergence, "convergence"),
        Command::EnergyHistory(p) => (p, run_energy_history, "energy_history"),
        Command::Solve(p) => (p, run_solve, "solution"),
    };
    let config = ExperimentConfig::from_file(&paths.config)?;
    let output = runner(&config)?;
    Ok((output, config.stem(default_stem).to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = match &cli.command {
        Command::Convergence(p) | Command::EnergyHistory(p) | Command::Solve(p) => p.out.clone(),
    };
    let (output, stem) = match run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = output.write_to(&out_dir, &stem) {
        eprintln!("cannot write to {}: {e}", out_dir.display());
        return ExitCode::from(1);
    }
    let mut stdout = std::io::stdout().lock();
    let mut failed = false;
    for case in &output.record.cases {
        match &case.failure {
            Some(msg) => {
                failed = true;
                eprintln!("N = {}: FAILED: {msg}", case.n);
            }
            None => {
                let detail = case
                    .reports
                    .last()
                    .map(|r| format!("energy-norm error {:.3e} at t = {}", r.report.energy, r.t))
                    .or_else(|| {
                        case.history.as_ref().map(|h| {
                            format!("max relative energy drift {:.3e}", h.max_relative_drift)
                        })
                    })
                    .unwrap_or_else(|| "done".into());
                let _ = writeln!(stdout, "N = {}: {detail} ({:.2} s)", case.n, case.seconds);
            }
        }
    }
    if let Some(rates) = &output.record.rates {
        let shown: Vec<String> = rates
            .energy
            .iter()
            .flatten()
            .map(|r| format!("{r:.2}"))
            .collect();
        let _ = writeln!(stdout, "energy-norm rates: {}", shown.join(" "));
    }
    let _ = writeln!(stdout, "wrote {}", out_dir.display());
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
