use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kmfg::{run, Command, ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "kmfg", version, about = "Kuramoto mean-field game experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

/// Options every subcommand accepts.
#[derive(Args)]
struct Common {
    /// Config file with `key = value` lines and `[command]` sections
    #[arg(long)]
    config: Option<PathBuf>,

    /// Run directory; `KMFG_OUTPUT_DIR` takes precedence
    #[arg(long)]
    output_dir: Option<PathBuf>,

    #[arg(long)]
    beta: Option<f64>,

    #[arg(long)]
    sigma: Option<f64>,

    /// Grid size (even, at least 16)
    #[arg(long)]
    grid_n: Option<usize>,

    /// Extra `key=value` settings, applied last
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stationary value function and Gibbs density for one forcing amplitude
    Stationary {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma: Option<f64>,
        /// Grid size
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fixed points of F_kappa and a sweep over kappa
    Bifurcation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        kappa_min: Option<f64>,
        #[arg(long)]
        kappa_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Time-dependent equilibrium by damped Picard iteration
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kappa: Option<f64>,
        /// uniform, exp_cos, exp_neg_sin, two_cluster or a CSV path
        #[arg(long, value_name = "NAME|PATH")]
        init: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Rescaled profiles against the explicit Eikonal solution
    Eikonal {
        #[command(flatten)]
        common: Common,
        /// Comma-separated amplitudes
        #[arg(long, value_name = "CSV-LIST")]
        gammas: Option<String>,
    },
    /// Linearised response operators and the remainder probe
    Linearize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Interacting-particle simulation under a fixed feedback
    Particles {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kappa: Option<f64>,
        /// Number of particles
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// zero, stationary, stationary:GAMMA or mfg_run:DIR
        #[arg(long, value_name = "SRC")]
        drift: Option<String>,
    },
}

fn pair<T: ToString>(key: &str, v: Option<T>) -> Option<(String, String)> {
    v.map(|v| (key.to_string(), v.to_string()))
}

fn build(cmd: Cmd) -> Result<RunConfig, ConfigError> {
    let (command, common, flags) = match cmd {
        Cmd::Stationary { common, gamma, n } => {
            (Command::Stationary, common, vec![pair("gamma", gamma), pair("n", n)])
        }
        Cmd::Bifurcation { common, kappa, kappa_min, kappa_max, steps } => (
            Command::Bifurcation,
            common,
            vec![pair("kappa", kappa), pair("kappa_min", kappa_min), pair("kappa_max", kappa_max), pair("steps", steps)],
        ),
        Cmd::Evolve { common, kappa, init, horizon } => (
            Command::Evolve,
            common,
            vec![pair("kappa", kappa), pair("init", init), pair("horizon", horizon)],
        ),
        Cmd::Eikonal { common, gammas } => (Command::Eikonal, common, vec![pair("gammas", gammas)]),
        Cmd::Linearize { common, kappa, lambda } => {
            (Command::Linearize, common, vec![pair("kappa", kappa), pair("lambda", lambda)])
        }
        Cmd::Particles { common, kappa, n, seed, drift } => (
            Command::Particles,
            common,
            vec![pair("kappa", kappa), pair("n_particles", n), pair("seed", seed), pair("drift", drift)],
        ),
    };
    let mut config = RunConfig::defaults(command);
    if let Some(path) = &common.config {
        config.apply_path(path)?;
    }
    let shared = [
        pair("beta", common.beta),
        pair("sigma", common.sigma),
        pair("grid_n", common.grid_n),
        pair("output_dir", common.output_dir.map(|p| p.display().to_string())),
    ];
    for (k, v) in shared.into_iter().chain(flags).flatten() {
        config.set(&k, &v)?;
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        config.set(k.trim(), v)?;
    }
    if let Some(dir) = std::env::var_os("KMFG_OUTPUT_DIR").filter(|d| !d.is_empty()) {
        config.output_dir = PathBuf::from(dir);
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli.command).map_err(kmfg::RunError::from).and_then(run);
    match result {
        Ok(manifest) => {
            println!("{}", manifest.config.output_dir.join("summary.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kmfg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
