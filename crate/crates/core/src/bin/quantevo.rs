use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quantevo::cli::{cmd_evaluate, cmd_extract, cmd_optimize, RunConfig};

#[derive(Parser)]
#[command(version, about = "Learn color quantizations for BIC/GCH and evaluate them on image retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one feature vector per dataset image.
    Extract(Flags),
    /// Learn a quantization on the whole dataset.
    Optimize(Flags),
    /// Cross-validate learned quantizations against the baseline.
    Evaluate(Flags),
}

#[derive(Args)]
struct Flags {
    /// `key = value` file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    /// bic or gch
    #[arg(long)]
    descriptor: Option<String>,
    #[arg(long)]
    genome: Option<String>,
    /// Uniform quantization with this many bins per axis.
    #[arg(long)]
    baseline: Option<String>,
    /// Comma-separated dimension limits, or `sweep`.
    #[arg(long)]
    limit: Option<String>,
    /// Comma-separated subset of baseline,nla,la.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    folds: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    population: Option<String>,
    #[arg(long)]
    generations: Option<String>,
    #[arg(long)]
    crossover: Option<String>,
    #[arg(long)]
    mutation: Option<String>,
    #[arg(long)]
    tournament: Option<String>,
    #[arg(long)]
    elitism: Option<String>,
    /// Reference intervals per axis.
    #[arg(long)]
    n: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(String, String)> {
        [
            ("descriptor", &self.descriptor),
            ("dataset", &self.dataset),
            ("genome", &self.genome),
            ("baseline", &self.baseline),
            ("limit", &self.limit),
            ("methods", &self.methods),
            ("folds", &self.folds),
            ("seed", &self.seed),
            ("out", &self.out),
            ("population", &self.population),
            ("generations", &self.generations),
            ("crossover", &self.crossover),
            ("mutation", &self.mutation),
            ("tournament", &self.tournament),
            ("elitism", &self.elitism),
            ("n", &self.n),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn run(cli: Cli) -> quantevo::Result<()> {
    let flags = match &cli.command {
        Command::Extract(f) | Command::Optimize(f) | Command::Evaluate(f) => f,
    };
    let cfg = RunConfig::load(flags.config.as_deref(), &flags.overrides())?;
    match cli.command {
        Command::Extract(_) => {
            let s = cmd_extract(&cfg)?;
            println!("extracted {} images, dimension {} ({} skipped)", s.images, s.dimension, s.skipped);
        }
        Command::Optimize(_) => {
            let rec = cmd_optimize(&cfg)?;
            println!(
                "best genome {} fitness {:.6} dimension {} (generation {})",
                rec.best_genome,
                rec.best_fitness,
                rec.best_dimension(),
                rec.best_generation
            );
        }
        Command::Evaluate(_) => {
            let report = cmd_evaluate(&cfg)?;
            print!("{}", report.summary_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
