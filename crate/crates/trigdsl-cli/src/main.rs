//! `trigdsl` — command-line toolchain for the trigger DSL.
//!
//! Subcommands cover the whole life cycle of a trigger: `compile` / `lint` /
//! `decompile` for the DSL ↔ IR round trip, `gen` for LLM-backed generation
//! from natural language, `run` for replaying a recorded sample stream
//! through the trigger engines into the capture logger, and `eval` for the
//! evaluation protocols (consistency, detection, runtime).
//!
//! Exit codes are a stable contract:
//!
//! * `0` — success
//! * `1` — validation or user error (bad input, failed diagnostics,
//!   missing labels)
//! * `2` — external-service failure (LLM endpoint, fixture replay miss,
//!   perception backend)

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// A command failure, split by who must fix it: the user (`1`) or an
/// external service (`2`).
#[derive(Debug)]
pub enum Failure {
    User(String),
    External(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::User(_) => 1,
            Failure::External(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::User(msg) | Failure::External(msg) => msg,
        }
    }
}

/// Shorthand constructors so call sites read as `user(...)` / `external(...)`.
pub fn user(msg: impl Into<String>) -> Failure {
    Failure::User(msg.into())
}

pub fn external(msg: impl Into<String>) -> Failure {
    Failure::External(msg.into())
}

pub type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(
    name = "trigdsl",
    version,
    about = "Compiler, runtime, and evaluation toolchain for the trigger DSL"
)]
struct Cli {
    /// Topic configuration file: {"topics": [{name, kind, unit?}...],
    /// "default_input": "..."}. Enables topic-aware validation.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile trigger DSL sources into one JSON IR file per TRIGGER block.
    Compile {
        /// DSL source file (may contain several TRIGGER blocks).
        input: PathBuf,
        /// Directory the .trigger.json files are written to.
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Parse, compile, and validate sources; print diagnostics, write nothing.
    Lint {
        /// DSL source file.
        input: PathBuf,
    },
    /// Render a compiled trigger IR file back to canonical DSL.
    Decompile {
        /// A .trigger.json file.
        input: PathBuf,
    },
    /// Generate a trigger from a natural-language query via the LLM.
    Gen {
        /// The data collection request, in plain language.
        query: String,
        /// Sampling seed forwarded to the model.
        #[arg(long)]
        seed: Option<u64>,
        /// Sampling temperature (default 1.0).
        #[arg(long)]
        temperature: Option<f64>,
        /// Replay recorded fixtures from this directory instead of calling
        /// a live endpoint.
        #[arg(long, value_name = "DIR")]
        replay: Option<PathBuf>,
        /// Record live responses as fixtures into this directory.
        #[arg(long, value_name = "DIR")]
        record: Option<PathBuf>,
        /// Output IR path (default: "<trigger name>.trigger.json").
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Replay a sample stream through the trigger engines and the logger.
    Run {
        /// JSONL stream of samples ({"topic", "timestamp", "value"}), or '-'
        /// for stdin. Timestamps drive the virtual clock.
        #[arg(long, value_name = "FILE")]
        stream: PathBuf,
        /// Capture output directory (captures.jsonl + blobs/).
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Directory the oracle backend and blob store resolve image
        /// references against (default: the stream file's directory).
        #[arg(long, value_name = "DIR")]
        oracle_base: Option<PathBuf>,
        /// Compiled .trigger.json files to arm.
        #[arg(required = true, value_name = "TRIGGER")]
        triggers: Vec<PathBuf>,
    },
    /// Run an evaluation protocol and write JSON + text reports.
    Eval {
        #[arg(long, value_enum)]
        mode: EvalMode,
        /// Report output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// consistency: paired generation texts (pairs.json).
        #[arg(long, value_name = "FILE")]
        pairs: Option<PathBuf>,
        /// detection | runtime: labeled corpus (corpus.json).
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        /// detection: protocol queries file (queries.json).
        #[arg(long, value_name = "FILE")]
        queries: Option<PathBuf>,
        /// detection: LLM fixture directory to replay.
        #[arg(long, value_name = "DIR")]
        replay: Option<PathBuf>,
        /// Oracle backend base directory (default: the corpus file's
        /// directory).
        #[arg(long, value_name = "DIR")]
        oracle_base: Option<PathBuf>,
        /// runtime: passes per trigger, the first being an untimed warm-up.
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        /// runtime: compiled .trigger.json files to benchmark.
        #[arg(value_name = "TRIGGER")]
        triggers: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalMode {
    Consistency,
    Detection,
    Runtime,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Compile { input, out } => commands::compile(&input, &out, config),
        Command::Lint { input } => commands::lint(&input, config),
        Command::Decompile { input } => commands::decompile(&input),
        Command::Gen {
            query,
            seed,
            temperature,
            replay,
            record,
            out,
        } => commands::gen(commands::GenArgs {
            query,
            seed,
            temperature,
            replay,
            record,
            out,
            config,
        }),
        Command::Run {
            stream,
            out,
            oracle_base,
            triggers,
        } => commands::run(commands::RunManifest {
            stream,
            out,
            oracle_base,
            triggers,
            config,
        }),
        Command::Eval {
            mode,
            out,
            pairs,
            corpus,
            queries,
            replay,
            oracle_base,
            repetitions,
            triggers,
        } => match mode {
            EvalMode::Consistency => commands::eval_consistency(pairs.as_deref(), &out),
            EvalMode::Detection => commands::eval_detection(commands::DetectionArgs {
                corpus,
                queries,
                replay,
                oracle_base,
                out,
            }),
            EvalMode::Runtime => commands::eval_runtime(commands::RuntimeArgs {
                corpus,
                oracle_base,
                repetitions,
                triggers,
                out,
            }),
        },
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
