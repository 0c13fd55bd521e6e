//! The `elicit` command line and HTTP service over `elicit-core`.

pub mod commands;
pub mod server;

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{Exit, Outcome, UserError};

#[derive(Debug, Parser)]
#[command(
    name = "elicit",
    version,
    about = "Probability elicitation over belief networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, validate and compile; print constraint counts per statement.
    Check { input: PathBuf },
    /// Print per-constituent probability bounds from the linear constraints.
    Bounds {
        input: PathBuf,
        #[command(flatten)]
        tol: commands::ToleranceArgs,
    },
    /// Run the sampler and print run statistics and per-query summaries.
    Sample {
        input: PathBuf,
        #[command(flatten)]
        run: commands::RunArgs,
        #[command(flatten)]
        tol: commands::ToleranceArgs,
        /// Extra queries to summarize, e.g. -q "P(h | ~n)".
        #[arg(short = 'q', long = "query")]
        queries: Vec<String>,
        /// Save the session, samples included, to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the second-order histogram of one query as CSV.
    Query {
        input: PathBuf,
        #[arg(short = 'q', long = "query")]
        query: String,
        #[command(flatten)]
        run: commands::RunArgs,
        #[command(flatten)]
        tol: commands::ToleranceArgs,
    },
    /// List the cliques of the triangulated moral graph.
    Cliques { input: PathBuf },
    /// Start the HTTP/JSON service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Persist sessions as JSON files in this directory.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

/// Runs every subcommand except `serve`.
pub fn execute(command: &Command) -> Result<Outcome, UserError> {
    match command {
        Command::Check { input } => commands::check(input),
        Command::Bounds { input, tol } => commands::bounds(input, tol),
        Command::Sample {
            input,
            run,
            tol,
            queries,
            out,
        } => commands::sample(input, run, tol, queries, out.as_ref()),
        Command::Query {
            input,
            query,
            run,
            tol,
        } => commands::query(input, query, run, tol),
        Command::Cliques { input } => commands::cliques(input),
        Command::Serve { .. } => Err(UserError("serve runs only from the binary".into())),
    }
}
