use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hemonet", version, about = "Oxygen use by circulating robot swarms")]
pub struct Cli {
    /// Worker threads for ensemble and Monte Carlo runs (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct NetworkArg {
    /// Network JSON file, or `-` for standard input. Defaults to the built-in network.
    #[arg(long)]
    pub network: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the built-in network as JSON.
    ExportDefault {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check flow, pressure and volume consistency of a network.
    Validate {
        #[command(flatten)]
        network: NetworkArg,
        /// Also write validation.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady-state oxygen and robot power in every segment.
    Sweep {
        #[command(flatten)]
        network: NetworkArg,
        /// Robot counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        robots: Vec<f64>,
        /// Consumption policy JSON (default: maximum uptake).
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Also write per-sample traces.
        #[arg(long)]
        traces: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Traces along the portal, slow spleen or coronary routes.
    Scenario {
        which: Scenario,
        #[command(flatten)]
        network: NetworkArg,
        #[arg(long)]
        robots: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo of robots carrying an oxygen tank.
    Tank(TankArgs),
    /// Ensemble over randomly varied circulation parameters.
    Sensitivity {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1e11, 3e11, 1e12])]
        robots: Vec<f64>,
        #[arg(long, env = "HEMONET_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convection, mixing and locomotion estimates as JSON.
    MixingReport,
}

#[derive(Debug, Args)]
pub struct TankArgs {
    #[command(flatten)]
    pub network: NetworkArg,
    #[arg(long, value_enum, default_value_t = Policy::Always)]
    pub policy: Policy,
    /// Simulated robot histories.
    #[arg(long, default_value_t = 1000)]
    pub robots_sim: usize,
    /// Observation period after the warmup.
    #[arg(long, default_value_t = 20.0)]
    pub minutes: f64,
    /// Swarm size setting the background oxygen field.
    #[arg(long, default_value_t = 3e11)]
    pub swarm: f64,
    #[arg(long, env = "HEMONET_SEED")]
    pub seed: Option<u64>,
    /// Top ambient uptake up to the draw power instead of supplying all of it.
    #[arg(long)]
    pub supplement: bool,
    /// Path ids robots never take, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub avoid: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Portal,
    Spleen,
    Coronary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Always,
    WhenFull,
}
