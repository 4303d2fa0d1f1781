//! Single entry-point binary exposing every pipeline stage as a
//! subcommand. Exit codes: 0 on success, 1 on data errors, 2 on
//! configuration errors. Every run writes a manifest beside its primary
//! output.

mod commands;
mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "retrocorpus",
    version,
    about = "Build, filter, and evaluate retro-translated parallel corpora"
)]
struct Cli {
    /// Worker threads for parallel stages; output never depends on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a source corpus into canonical document JSONL.
    Ingest {
        /// Ingest spec (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar for per-line error records (default: <out>.errors.jsonl).
        #[arg(long)]
        errors: Option<PathBuf>,
    },
    /// Translate documents into parallel pairs through a backend.
    Translate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Backend spec file (TOML) or the builtin `mock-identity`.
        #[arg(long)]
        backend: String,
        /// Response cache directory.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Translation direction as `<source>:<target>`.
        #[arg(long, default_value = "pt-PT:en")]
        direction: String,
        /// Dead-letter file (default: <out>.dead.jsonl).
        #[arg(long)]
        dead_letter: Option<PathBuf>,
        /// RFC 3339 timestamp stamped on produced pairs. Defaults to the
        /// Unix epoch for mock backends and to cache-entry time for HTTP.
        #[arg(long)]
        created_at: Option<String>,
    },
    /// Run the quality-filter funnel over documents or pairs.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pipeline config (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Funnel report JSON path.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-stage verdict log JSONL path.
        #[arg(long)]
        verdicts: Option<PathBuf>,
        /// Tokenizer override: `whitespace` or a spec file.
        #[arg(long)]
        tokenizer: Option<String>,
    },
    /// Per-domain corpus statistics for a pair file.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// `whitespace` or a tokenizer spec file.
        #[arg(long, default_value = "whitespace")]
        tokenizer: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = ["json", "table", "csv"], default_value = "json")]
        format: String,
    },
    /// Export instruction-tuning records from a pair file.
    ExportSft {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Prompt template (TOML); the stock template applies otherwise.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, default_value = "whitespace")]
        tokenizer: String,
        #[arg(long, default_value_t = 1024)]
        max_tokens: u64,
        /// Skipped-record report (default: <out>.skipped.jsonl).
        #[arg(long)]
        skipped: Option<PathBuf>,
    },
    /// Reference-based evaluation of hypothesis vs reference texts.
    Eval {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Comma-separated subset of: bleu, rouge-l, exact.
        #[arg(long, default_value = "bleu,rouge-l,exact")]
        metrics: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "system")]
        system: String,
        #[arg(long, default_value = "benchmark")]
        benchmark: String,
    },
    /// Train or apply the language-variety classifier.
    Vid {
        #[command(subcommand)]
        action: VidAction,
    },
    /// Compare translations produced from two aligned corpora.
    Audit {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum VidAction {
    /// Train the classifier on labeled documents.
    Train(VidTrainArgs),
    /// Score hypothesis documents against references.
    Score(VidScoreArgs),
}

#[derive(Args)]
struct VidTrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Args)]
struct VidScoreArgs {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Failures carry the exit-code class with them.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Data(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) => m,
        }
    }
}

/// What a command hands back for manifest writing and exit-code
/// selection.
pub struct CommandOutcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// The manifest is written beside this file.
    pub primary: PathBuf,
    pub effective_config: serde_json::Value,
    pub summary: BTreeMap<String, serde_json::Value>,
    pub data_errors: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let started_at = chrono::Utc::now();

    let command_name = command_name(&cli.command);
    let outcome = dispatch(cli);

    match outcome {
        Ok(outcome) => {
            let manifest = manifest::RunManifest {
                command: command_name,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: manifest::config_hash(&outcome.effective_config),
                inputs: outcome.inputs.iter().map(|p| p.display().to_string()).collect(),
                outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
                started_at,
                finished_at: chrono::Utc::now(),
                summary: outcome.summary,
            };
            match manifest::write_manifest(&manifest, &outcome.primary) {
                Ok(path) => log::info!("manifest written to {}", path.display()),
                Err(e) => {
                    eprintln!("error: could not write manifest: {e}");
                    return ExitCode::from(1);
                }
            }
            if outcome.data_errors > 0 {
                log::warn!("{} data error(s); see manifest and sidecars", outcome.data_errors);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}

fn command_name(command: &Command) -> String {
    match command {
        Command::Ingest { .. } => "ingest",
        Command::Translate { .. } => "translate",
        Command::Filter { .. } => "filter",
        Command::Stats { .. } => "stats",
        Command::ExportSft { .. } => "export-sft",
        Command::Eval { .. } => "eval",
        Command::Vid {
            action: VidAction::Train(_),
        } => "vid train",
        Command::Vid {
            action: VidAction::Score(_),
        } => "vid score",
        Command::Audit { .. } => "audit",
    }
    .to_string()
}

fn dispatch(cli: Cli) -> Result<CommandOutcome, Failure> {
    let workers = cli.workers.max(1);
    match cli.command {
        Command::Ingest { spec, out, errors } => commands::ingest::run(&spec, &out, errors),
        Command::Translate {
            input,
            out,
            backend,
            cache,
            direction,
            dead_letter,
            created_at,
        } => commands::translate::run(commands::translate::Params {
            input,
            out,
            backend,
            cache,
            direction,
            dead_letter,
            created_at,
            workers,
        }),
        Command::Filter {
            input,
            out,
            config,
            report,
            verdicts,
            tokenizer,
        } => commands::filter::run(commands::filter::Params {
            input,
            out,
            config,
            report,
            verdicts,
            tokenizer,
            workers,
        }),
        Command::Stats {
            input,
            tokenizer,
            out,
            format,
        } => commands::stats::run(&input, &tokenizer, &out, &format),
        Command::ExportSft {
            input,
            out,
            template,
            tokenizer,
            max_tokens,
            skipped,
        } => commands::export_sft::run(commands::export_sft::Params {
            input,
            out,
            template,
            tokenizer,
            max_tokens,
            skipped,
        }),
        Command::Eval {
            hyp,
            reference,
            metrics,
            out,
            system,
            benchmark,
        } => commands::eval::run(&hyp, &reference, &metrics, &out, &system, &benchmark),
        Command::Vid { action } => match action {
            VidAction::Train(args) => commands::vid::train(&args.input, &args.model, args.alpha),
            VidAction::Score(args) => {
                commands::vid::score(&args.hyp, &args.reference, &args.model, &args.out)
            }
        },
        Command::Audit { a, b, out } => commands::audit::run(&a, &b, &out),
    }
}
