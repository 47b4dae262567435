//! `ned`: build dictionaries, train word experts, disambiguate and score.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::{env, fs, io};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{parse_kv, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ned_core::Error),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, #[source] io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_schema_error() => 2,
            CliError::Core(_) | CliError::Io(..) | CliError::Internal(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ned",
    version,
    about = "Word-expert named-entity disambiguation"
)]
struct Cli {
    /// Flat key=value config file (defaults to $NED_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override any config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(flatten)]
    flags: Flags,

    #[command(subcommand)]
    command: Command,
}

/// Shorthand flags for the common config keys.
#[derive(Args, Default)]
struct Flags {
    #[arg(long, global = true)]
    pages: Option<String>,
    #[arg(long, global = true)]
    redirects: Option<String>,
    #[arg(long, global = true)]
    links: Option<String>,
    #[arg(long, global = true)]
    kb: Option<String>,
    #[arg(long, global = true)]
    corpus: Option<String>,
    #[arg(long, global = true)]
    queries: Option<String>,
    #[arg(long, global = true)]
    gold: Option<String>,
    /// Directory holding one text file per document id.
    #[arg(long, global = true)]
    docs: Option<String>,
    /// Directory of optional `<docid>.ann` standoff annotation files.
    #[arg(long, global = true)]
    annotations: Option<String>,
    #[arg(long, global = true)]
    canonical: Option<String>,
    #[arg(long, global = true)]
    dictionary: Option<String>,
    #[arg(long, global = true)]
    models: Option<String>,
    #[arg(long, global = true)]
    answers: Option<String>,
    /// Ranked candidate lists (`query_id  rank  entity`).
    #[arg(long, global = true)]
    ranked: Option<String>,
    /// EXCT, LNRM, FUZZ or HEUR.
    #[arg(long, global = true)]
    cascade: Option<String>,
    /// T100, SENT or PARA.
    #[arg(long, global = true)]
    span_mode: Option<String>,
    /// LEX or SENSE.
    #[arg(long, global = true)]
    match_mode: Option<String>,
    #[arg(long, global = true)]
    classifier: Option<String>,
    #[arg(long, global = true)]
    expand: Option<String>,
    #[arg(long = "l2", global = true)]
    l2_strength: Option<String>,
    #[arg(long, global = true)]
    workers: Option<String>,
}

impl Flags {
    fn into_map(self) -> BTreeMap<String, String> {
        let pairs = [
            ("pages", self.pages),
            ("redirects", self.redirects),
            ("links", self.links),
            ("kb", self.kb),
            ("corpus", self.corpus),
            ("queries", self.queries),
            ("gold", self.gold),
            ("docs", self.docs),
            ("annotations", self.annotations),
            ("canonical", self.canonical),
            ("dictionary", self.dictionary),
            ("models", self.models),
            ("answers", self.answers),
            ("ranked", self.ranked),
            ("cascade", self.cascade),
            ("span_mode", self.span_mode),
            ("match_mode", self.match_mode),
            ("classifier", self.classifier),
            ("expand", self.expand),
            ("l2_strength", self.l2_strength),
            ("workers", self.workers),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Resolve redirects to canonical pages (writes `canonical`).
    BuildCanonical,
    /// Harvest the scored dictionary (writes `dictionary`).
    BuildDict,
    /// Print ranked candidates for each string.
    Lookup {
        #[arg(required = true)]
        strings: Vec<String>,
    },
    /// Write training spans for one string.
    ExtractSpans {
        string: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train word experts (writes `models`); defaults to the query names,
    /// else every dictionary string.
    Train { strings: Vec<String> },
    /// Answer every query (writes `answers`, and `ranked` when set).
    Disambiguate,
    /// Score answers against the gold standard.
    Evaluate {
        /// Machine-readable TSV instead of the aligned table.
        #[arg(long)]
        tsv: bool,
        /// Also print the P/R curve from the `ranked` lists.
        #[arg(long)]
        pr: bool,
        #[arg(long, default_value = "1,2,3,5,10,20,50,inf")]
        ks: String,
    },
    /// Ambiguity and synonymy tables.
    Stats,
    /// Precision/recall at k from the `ranked` lists.
    PrCurve {
        #[arg(long, default_value = "1,2,3,5,10,20,50,inf")]
        ks: String,
    },
}

fn load_config(
    cli_config: Option<PathBuf>,
    set: &[String],
    flags: Flags,
) -> Result<RunConfig, CliError> {
    let path = cli_config.or_else(|| env::var_os("NED_CONFIG").map(PathBuf::from));
    let file = match path {
        Some(p) => {
            let text = fs::read_to_string(&p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            parse_kv(&text, &p.display().to_string())?
        }
        None => BTreeMap::new(),
    };
    let mut overrides = parse_kv(&set.join("\n"), "--set")?;
    overrides.extend(flags.into_map());
    RunConfig::resolve(file, overrides)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config, &cli.set, cli.flags)?;
    let command = cli.command;
    with_workers(&cfg, || commands::dispatch(&cfg, command))
}

#[cfg(feature = "parallel")]
fn with_workers<F>(cfg: &RunConfig, f: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<(), CliError> + Send,
{
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<F>(_cfg: &RunConfig, f: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<(), CliError> + Send,
{
    f()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ned: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
