use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attrib_cli::{
    cmd_datagen, cmd_edit, cmd_evaluate, cmd_metrics, CliError, Overrides, RunConfig, EXIT_FATAL, EXIT_OK,
};
use attrib_core::par::Cancellation;
use clap::{Parser, Subcommand};
use tracing::Level;

/// Evidence attribution, revision, and editor training-data generation.
#[derive(Debug, Parser)]
#[command(name = "attrib", version)]
struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Claims or seed queries processed at once.
    #[arg(long, global = true)]
    parallelism: Option<usize>,

    /// Serve every client from fixture files in this directory.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,

    /// Evidence snippets kept per attribution report.
    #[arg(long, global = true)]
    budget: Option<usize>,

    /// Evidence slots given to the editor.
    #[arg(long, global = true)]
    slots: Option<usize>,

    /// Relevance score a passage needs to count as gold evidence.
    #[arg(long, global = true)]
    threshold: Option<f64>,

    /// More log output on stderr; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build editor training data from seed queries, one per line.
    Datagen {
        seeds: Option<PathBuf>,
        out_dir: Option<PathBuf>,
    },
    /// Research and revise claims from a JSONL file.
    Edit {
        claims: Option<PathBuf>,
        out_file: Option<PathBuf>,
        /// Write edits and their reports without scoring them.
        #[arg(long)]
        no_metrics: bool,
    },
    /// Edit claims, score the edits, and write a report.
    Evaluate {
        claims: Option<PathBuf>,
        out_dir: Option<PathBuf>,
    },
    /// Score (x, y, evidence) triples or (attr, pres) pairs given as JSONL.
    Metrics {
        input: Option<PathBuf>,
        /// Write the result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn pick(given: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    given
        .or_else(|| configured.clone())
        .ok_or_else(|| CliError::Config(format!("no {what} given on the command line or in the config")))
}

fn run(cli: Cli, cancel: &Cancellation) -> Result<i32, CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        parallelism: cli.parallelism,
        fixtures: cli.fixtures,
        budget: cli.budget,
        slots: cli.slots,
        threshold: cli.threshold,
    };
    let cfg = RunConfig::resolve(cli.config.as_deref(), |name| std::env::var(name).ok(), &overrides)?;
    let paths = &cfg.paths;
    match cli.command {
        Command::Datagen { seeds, out_dir } => {
            let seeds = pick(seeds, &paths.input, "seed file")?;
            let out = pick(out_dir, &paths.output, "output directory")?;
            require_file(&seeds)?;
            cmd_datagen(&seeds, &out, &cfg, &cfg.clients()?, Some(cancel))
        }
        Command::Edit {
            claims,
            out_file,
            no_metrics,
        } => {
            let claims = pick(claims, &paths.input, "claims file")?;
            let out = pick(out_file, &paths.output, "output file")?;
            require_file(&claims)?;
            cmd_edit(&claims, &out, &cfg, &cfg.clients()?, no_metrics, Some(cancel))
        }
        Command::Evaluate { claims, out_dir } => {
            let claims = pick(claims, &paths.input, "claims file")?;
            let out = pick(out_dir, &paths.output, "output directory")?;
            require_file(&claims)?;
            let (code, table) = cmd_evaluate(&claims, &out, &cfg, &cfg.clients()?, Some(cancel))?;
            print!("{table}");
            Ok(code)
        }
        Command::Metrics { input, out } => {
            let input = pick(input, &paths.input, "input file")?;
            let result = cmd_metrics(&input, || cfg.clients())?;
            let mut bytes = serde_json::to_vec_pretty(&result).map_err(attrib_core::Error::from)?;
            bytes.push(b'\n');
            match out {
                Some(path) => std::fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })?,
                None => std::io::stdout().write_all(&bytes).map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })?,
            }
            Ok(EXIT_OK)
        }
    }
}

/// Fails before any client is built when the input is missing.
fn require_file(path: &Path) -> Result<(), CliError> {
    std::fs::metadata(path).map(|_| ()).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => Level::WARN,
        1 => Level::INFO,
        _ => Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();

    let cancel = Cancellation::new();
    let handler = cancel.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        eprintln!("interrupted, finishing in-flight work");
        handler.cancel();
    }) {
        tracing::warn!(error = %e, "could not install interrupt handler");
    }

    let code = match run(cli, &cancel) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FATAL
        }
    };
    ExitCode::from(code as u8)
}
