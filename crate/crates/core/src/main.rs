use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use critsense::runner::{self, Experiment, ExperimentConfig, Output, OutputFormat};

#[derive(Parser)]
#[command(version, about = "Criticality-enhanced quantum sensing simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Homodyne quadrature protocol sweep over g
    Quadrature(Common),
    /// Qubit-readout (Loschmidt echo) protocol sweep
    Loschmidt(Common),
    /// Exact and analytic QFI sweep for a critical model
    Qfi(Common),
    /// Full Rabi model at finite frequency ratio
    FiniteEta(Common),
    /// Homodyne protocol under Lindblad noise
    Noise(Common),
    /// Run the invariant suite
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path, `-` for standard output
    #[arg(long)]
    output: Option<String>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    workers: Option<usize>,
    /// Upper bound on the Fock cutoff
    #[arg(long)]
    cutoff_max: Option<usize>,
}

const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn config(experiment: Experiment, args: &Common) -> critsense::Result<ExperimentConfig> {
    let mut c = match &args.config {
        Some(path) => ExperimentConfig::from_path(path, Some(experiment))?,
        None => ExperimentConfig::defaults(experiment),
    };
    if let Some(o) = &args.output {
        c.output = o.parse::<Output>()?;
    }
    if let Some(f) = &args.format {
        c.format = f.parse::<OutputFormat>()?;
    }
    if args.workers.is_some() {
        c.workers = args.workers;
    }
    if let Some(max) = args.cutoff_max {
        c.cutoff.max = max;
        c.cutoff.initial = c.cutoff.initial.min(max);
    }
    c.validate()?;
    Ok(c)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Quadrature(a) => (Experiment::Quadrature, a),
        Command::Loschmidt(a) => (Experiment::Loschmidt, a),
        Command::Qfi(a) => (Experiment::Qfi, a),
        Command::FiniteEta(a) => (Experiment::FiniteEta, a),
        Command::Noise(a) => (Experiment::Noise, a),
        Command::Validate(a) => (Experiment::Validate, a),
    };
    let config = match config(experiment, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match runner::run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARTIAL);
        }
    };
    if experiment == Experiment::Validate {
        for c in &out.checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    } else if let Err(e) = runner::emit(&out.records, config.format, &config.output) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_PARTIAL);
    }
    for f in &out.fits {
        eprintln!(
            "fit {}: exponent {:.4}, intercept {:.4}, R^2 {:.6}, {} points",
            f.label, f.fit.exponent, f.fit.intercept, f.fit.r_squared, f.fit.points_used
        );
    }
    for o in &out.optima {
        eprintln!("optimum eta {:.4e}: g_o {:.6}, delta {:.6}, F {:.6e}", o.eta, o.g_o, o.delta, o.inv_var);
    }
    for f in &out.failures {
        eprintln!("failed point {} (param {}): {}", f.index, f.param, f.message);
    }
    if out.success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    }
}
