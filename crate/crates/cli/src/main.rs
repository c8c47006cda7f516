use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

mod commands;
mod config;
mod error;

use commands::ChunkMethod;
use config::{Overrides, RunConfig, ORACLE_URL_ENV};
use error::CliError;

/// Query-focused evidence extraction over long documents.
#[derive(Debug, Parser)]
#[command(name = "cfic", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract evidence spans for a query from one document (or a .jsonl batch).
    Extract {
        #[arg(long)]
        query: String,
        #[arg(long)]
        doc: PathBuf,
        /// Document id for plain text input; defaults to the file stem.
        #[arg(long)]
        doc_id: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a document into baseline chunks, optionally reranked for a query.
    Chunk {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long, value_enum, default_value = "sw")]
        method: ChunkMethod,
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one pipeline over a JSONL dataset and report F1.
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// Skip malformed records instead of failing.
        #[arg(long)]
        lenient: bool,
        /// Report JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary table; stderr when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Sample evidence spans and questions from a corpus as training triplets.
    SftMake {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the extraction pipeline at several decode lengths.
    SweepD {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        d_values: Vec<usize>,
        #[arg(long)]
        lenient: bool,
        /// CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.overrides, std::env::var(ORACLE_URL_ENV).ok())?;
    tracing::debug!(?cfg, "resolved config");
    match cli.command {
        Command::Extract {
            query,
            doc,
            doc_id,
            out,
        } => commands::extract(&cfg, &query, &doc, doc_id.as_deref(), out.as_deref()),
        Command::Chunk {
            doc,
            method,
            query,
            out,
        } => commands::chunk(&cfg, &doc, method, query.as_deref(), out.as_deref()),
        Command::Eval {
            data,
            lenient,
            out,
            table,
        } => commands::eval(&cfg, &data, lenient, out.as_deref(), table.as_deref()),
        Command::SftMake { corpus, out } => commands::sft_make_cmd(&cfg, &corpus, out.as_deref()),
        Command::SweepD {
            data,
            d_values,
            lenient,
            out,
        } => commands::sweep_d(&cfg, &data, &d_values, lenient, out.as_deref()),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("CFIC_LOG").unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
