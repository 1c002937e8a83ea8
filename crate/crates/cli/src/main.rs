use anyhow::Result;
use clap::{Parser, Subcommand};
use lotsizing_cli::{bench, gen, report, simulate};

/// Rolling-horizon lot-sizing experiments.
#[derive(Debug, Parser)]
#[command(name = "lotsizing", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write instance files for a parameter grid.
    Gen(gen::GenArgs),
    /// Simulate policies on instances and write the aggregate CSV.
    Simulate(simulate::SimulateArgs),
    /// Compare the extensive form with branch-and-cut on warmed-up states.
    Bench(bench::BenchArgs),
    /// Merge aggregate CSVs and add cost deltas against the quantile policy.
    Report(report::ReportArgs),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Gen(args) => {
            let rows = gen::run(&args)?;
            eprintln!("wrote {} instances to {}", rows.len(), args.out.display());
        }
        Command::Simulate(args) => {
            let rows = simulate::run(&args)?;
            eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
        }
        Command::Bench(args) => {
            let rows = bench::run(&args)?;
            eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
        }
        Command::Report(args) => {
            let rows = report::run(&args)?;
            eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
        }
    }
    Ok(())
}
