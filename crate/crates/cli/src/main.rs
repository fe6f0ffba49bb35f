//! `bellgap`: Bell-inequality thresholds, quantum bounds, and genetic
//! searches for extremal operator configurations, from the command line.
//!
//! Exit codes: 0 success (and, for `search`, target met), 1 target missed
//! or verification failed, 2 configuration or parse error, 3 resource
//! limit, 4 numerical failure.

mod commands;
mod record;
mod render;
mod run_config;
mod weight_source;

use clap::{Parser, Subcommand};

use commands::{
    BellmatGenArgs, BellmatReduceArgs, BellmatValidateArgs, BoundsPlotArgs, GapSampleArgs,
    HvVerifyArgs, NormsArgs, ReportArgs, SearchArgs,
};

#[derive(Parser)]
#[command(
    name = "bellgap",
    version,
    about = "Bell-inequality thresholds, quantum bounds, and genetic searches \
             for extremal operator configurations"
)]
struct Cli {
    /// Worker-thread cap for the data-parallel kernels; results never
    /// depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Norms, bounds, and the quantum gap of one weight matrix.
    Norms(NormsArgs),

    /// Generate, validate, and reduce Bell matrices.
    #[command(subcommand)]
    Bellmat(BellmatCommand),

    /// Genetic search for operator configurations maximizing the
    /// Bell-operator norm, or verification of a stored run.
    Search(SearchArgs),

    /// Quantum bounds and thresholds of the Bell-matrix class by size.
    BoundsPlot(BoundsPlotArgs),

    /// Sample random weight matrices and histogram their scaled gaps.
    GapSample(GapSampleArgs),

    /// Check that random hidden-variable models never beat the HV norm
    /// and that the maximizing corner strategy attains it.
    HvVerify(HvVerifyArgs),

    /// Re-render a stored search record as markdown, CSV, or JSON.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum BellmatCommand {
    /// Draw random Bell matrices.
    Gen(BellmatGenArgs),

    /// Check that a matrix file belongs to the Bell class.
    Validate(BellmatValidateArgs),

    /// Signed permutations carrying a Bell matrix to canonical form.
    Reduce(BellmatReduceArgs),
}

fn exit_code(e: &bellgap::Error) -> i32 {
    use bellgap::Error;
    match e {
        Error::ResourceLimit(_) => 3,
        Error::Numeric(_) => 4,
        _ => 2,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be positive");
            std::process::exit(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }

    let result = match &cli.command {
        Command::Norms(args) => commands::cmd_norms(args),
        Command::Bellmat(BellmatCommand::Gen(args)) => commands::cmd_bellmat_gen(args),
        Command::Bellmat(BellmatCommand::Validate(args)) => commands::cmd_bellmat_validate(args),
        Command::Bellmat(BellmatCommand::Reduce(args)) => commands::cmd_bellmat_reduce(args),
        Command::Search(args) => commands::cmd_search(args),
        Command::BoundsPlot(args) => commands::cmd_bounds_plot(args),
        Command::GapSample(args) => commands::cmd_gap_sample(args),
        Command::HvVerify(args) => commands::cmd_hv_verify(args),
        Command::Report(args) => commands::cmd_report(args),
    };

    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
