use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rulex_cli::config::RunConfig;
use rulex_cli::{cmd_extract, cmd_generate, cmd_report, cmd_stats, cmd_train, exit_code};

/// Rule extraction from student-model data with a neural network and a
/// genetic algorithm. Log verbosity is read from EDM_RULEX_LOG.
#[derive(Parser)]
#[command(name = "edm-rulex", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output (run) directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Schema JSON; defaults to the built-in student schema.
    #[arg(long, global = true, value_name = "PATH")]
    schema: Option<PathBuf>,
    /// Cohort CSV; defaults to <out>/cohort.csv.
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic cohort.
    Generate {
        /// `published` or a population spec JSON file.
        #[arg(long)]
        spec: Option<String>,
        /// Cohort size (published only).
        #[arg(long)]
        n: Option<usize>,
        /// `units-1-2` or a planted-rule JSON file.
        #[arg(long)]
        planted: Option<String>,
        /// Label noise rate for planted rules.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Train the network on a cohort.
    Train {
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Extract rules from a trained network.
    Extract {
        /// Model JSON; defaults to <out>/model.json.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        #[arg(long)]
        pop: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        confidence: Option<f64>,
    },
    /// Gender comparisons, MANOVA, partial correlations and reliability.
    Stats,
    /// Summarize a run directory.
    Report,
}

fn build_config(cli: &Cli) -> rulex_core::Result<RunConfig> {
    let mut config = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    if let Some(out) = &c.out {
        config.out = out.clone();
    }
    if c.schema.is_some() {
        config.schema = c.schema.clone();
    }
    if c.data.is_some() {
        config.dataset = c.data.clone();
    }
    match &cli.command {
        Command::Generate { spec, n, planted, noise } => {
            if let Some(spec) = spec {
                config.generate.spec = spec.clone();
            }
            if let Some(n) = n {
                config.generate.n = *n;
            }
            if planted.is_some() {
                config.generate.planted = planted.clone();
            }
            if noise.is_some() {
                config.generate.noise = *noise;
            }
        }
        Command::Train { hidden, epochs } => {
            if hidden.is_some() {
                config.train.hidden_size = *hidden;
            }
            if let Some(e) = epochs {
                config.train.max_epochs = *e;
            }
        }
        Command::Extract {
            model,
            pop,
            generations,
            confidence,
        } => {
            if model.is_some() {
                config.model = model.clone();
            }
            if let Some(p) = pop {
                config.extract.ga.population = *p;
            }
            if let Some(g) = generations {
                config.extract.ga.generations = *g;
            }
            if let Some(c) = confidence {
                config.extract.confidence = *c;
            }
        }
        Command::Stats | Command::Report => {}
    }
    Ok(config)
}

fn run(cli: &Cli) -> rulex_core::Result<String> {
    let config = build_config(cli)?;
    match cli.command {
        Command::Generate { .. } => cmd_generate(&config),
        Command::Train { .. } => cmd_train(&config),
        Command::Extract { .. } => cmd_extract(&config),
        Command::Stats => cmd_stats(&config),
        Command::Report => cmd_report(&config.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EDM_RULEX_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
