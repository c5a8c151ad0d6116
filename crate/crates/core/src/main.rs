use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kansa::check::{operator_self_test, standard_kernels};
use kansa::experiment::{
    render_summary_table, run_trials, singularity_census, write_census_csv, write_summary_csv,
    write_trials_csv, ExperimentConfig,
};
use kansa::{KansaError, KernelFamily, ProblemId};

#[derive(Parser)]
#[command(name = "kansa", version, about = "Kansa collocation with polyharmonic splines and random centers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run RMSE experiments over grid sizes and perturbation radii.
    Run(RunArgs),
    /// Count singular and near-singular collocation matrices.
    Census(RunArgs),
    /// Check operator applications against finite differences.
    Check {
        /// Random (center, point) pairs per kernel.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with any of the keys below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<u8>,
    /// TPS or RP.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    /// Nodes per side, comma separated (N = n^2).
    #[arg(long = "grid_sizes", alias = "grid-sizes", value_delimiter = ',')]
    grid_sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    deltas: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-trial CSV path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Summary CSV path (default: `<output>` with a `_summary` suffix).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Omit the timestamp line at the top of the CSV files.
    #[arg(long)]
    no_timestamp: bool,
}

impl RunArgs {
    fn config(&self) -> kansa::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.problem {
            cfg.problem = ProblemId::try_from(p)?;
        }
        if let Some(f) = &self.family {
            cfg.family = f.parse::<KernelFamily>()?;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(g) = &self.grid_sizes {
            cfg.grid_sizes = g.clone();
        }
        if let Some(d) = &self.deltas {
            cfg.deltas = d.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summary_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("trials");
    output.with_file_name(format!("{stem}_summary.csv"))
}

fn create(path: &Path) -> kansa::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(args: &RunArgs) -> kansa::Result<()> {
    let cfg = args.config()?;
    let report = run_trials(&cfg)?;
    let timestamp = !args.no_timestamp;
    write_trials_csv(create(&cfg.output)?, &report.records, timestamp)?;
    let summary = args.summary.clone().unwrap_or_else(|| summary_path(&cfg.output));
    write_summary_csv(create(&summary)?, &report.summaries, timestamp)?;

    println!(
        "problem {}, {} k={}, {} trials per cell, seed {}",
        cfg.problem, cfg.family, cfg.k, cfg.trials, cfg.seed
    );
    print!("{}", render_summary_table(&report.summaries));
    let singular: usize = report.summaries.iter().map(|s| s.singular_count).sum();
    let near: usize = report.summaries.iter().map(|s| s.near_singular_count).sum();
    println!("singular: {singular}, near-singular: {near}");
    println!("wrote {} and {}", cfg.output.display(), summary.display());
    Ok(())
}

fn census(args: &RunArgs) -> kansa::Result<()> {
    let cfg = args.config()?;
    let run = singularity_census(&cfg)?;
    write_census_csv(create(&cfg.output)?, &run.records, !args.no_timestamp)?;
    for cell in &run.cells {
        println!("N={:<5} delta={:<8} {}", cell.n_points, cell.delta, cell.report);
    }
    println!("wrote {}", cfg.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<bool, KansaError> = match &cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Census(args) => census(args).map(|_| true),
        Command::Check { pairs, seed } => {
            let report = operator_self_test(&standard_kernels(), *pairs, *seed);
            for case in &report.cases {
                println!("{case}");
            }
            Ok(report.passed())
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("self-check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
