use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use solenoid::config::Experiment;
use solenoid::{run_experiment, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Experiments on skew-product solenoidal attractors.
#[derive(Parser, Debug)]
#[command(name = "solenoid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (structured text); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Budget override as key=value, e.g. --budget samples=1000000.
    #[arg(long = "budget", global = true)]
    budgets: Vec<String>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Restrict to the named systems.
    #[arg(long = "system", global = true)]
    systems: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiments listed in the configuration.
    Run,
    /// Print the effective configuration and exit.
    Config,
    /// Entropy-slope dimension of m_x beside box counting and the predicted dimension.
    DimEstimate,
    /// Exponential separation of fiber values at random base points.
    SeparationScan,
    /// Condition (H) versus (H*) scan.
    DichotomyCheck,
    /// Entropy porosity of m_x.
    Porosity,
    /// Entropy of the symbolic-partition measures.
    ThetaEntropy,
    /// Decomposition of m_x into partition measures.
    DecompositionCheck,
    /// Attractor raster.
    Render,
    /// Weierstrass-graph box counting.
    Weierstrass,
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Command::Run | Command::Config => return None,
            Command::DimEstimate => Experiment::DimEstimate,
            Command::SeparationScan => Experiment::SeparationScan,
            Command::DichotomyCheck => Experiment::DichotomyCheck,
            Command::Porosity => Experiment::Porosity,
            Command::ThetaEntropy => Experiment::ThetaEntropy,
            Command::DecompositionCheck => Experiment::DecompositionCheck,
            Command::Render => Experiment::Render,
            Command::Weierstrass => Experiment::Weierstrass,
        })
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    for b in &cli.budgets {
        config.budgets.set(b)?;
    }
    if !cli.systems.is_empty() {
        for name in &cli.systems {
            if !config.systems.iter().any(|s| &s.name == name) {
                bail!("no system named `{name}` in the configuration");
            }
        }
        config.systems.retain(|s| cli.systems.contains(&s.name));
    }
    if let Some(e) = cli.command.experiment() {
        config.experiments = vec![e.name().to_string()];
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let config = effective_config(cli)?;
    if let Command::Config = cli.command {
        print!("{}", config.to_toml()?);
        return Ok(());
    }
    let report = run_experiment(&config)?;
    for r in &report.records {
        let system = r.system.as_deref().unwrap_or("-");
        match &r.error {
            None => println!("{:<20} {:<18} ok     {}", r.experiment, system, r.files.len()),
            Some(e) => println!("{:<20} {:<18} failed {e}", r.experiment, system),
        }
    }
    println!("summary: {}", config.output_dir.join("summary.toml").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("solenoid: {e:#}");
            ExitCode::FAILURE
        }
    }
}
