//! Implementations of the CLI subcommands.
//!
//! Every function returns `CliResult<()>`; `main` turns a [`Failure`] into
//! the exit code. Informational output goes to stdout, problems to stderr.

use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use trigdsl::cache::{DataCache, StreamSample};
use trigdsl::clock::VirtualClock;
use trigdsl::dsl::{parse, pretty_print};
use trigdsl::evalkit::{
    consistency_eval, detection_eval, runtime_bench, text_table, Corpus, DetectionSummary,
    QueryCategory, QueryEval, SimilarityReport,
};
use trigdsl::ir::{
    compile as compile_ast, decompile as decompile_ir, from_json, to_json, validate,
    validate_with_topics, IrDiagnostic, TriggerIr,
};
use trigdsl::llm::{
    generate, system_context, GenerationRequest, HttpTransport, LlmError, LlmTransport,
    RecordingTransport, ReplayTransport, DEFAULT_TEMPERATURE,
};
use trigdsl::logger::CaptureLogger;
use trigdsl::predicates::{OracleBackend, PerceptionBackend, PredicateRegistry};
use trigdsl::runtime::TriggerManager;
use trigdsl::topic::{Topic, TopicSet};

use crate::{external, user, CliResult, Failure};

// ------------------------------------------------------------- shared ------

/// The `--config` file: declared topics plus the implicit predicate input.
#[derive(Debug, Deserialize)]
struct Config {
    topics: Vec<Topic>,
    #[serde(default)]
    default_input: Option<String>,
}

impl Config {
    fn load(path: &Path) -> CliResult<Config> {
        let text = fs::read_to_string(path)
            .map_err(|e| user(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| user(format!("malformed config {}: {e}", path.display())))
    }

    fn topic_set(&self) -> CliResult<TopicSet> {
        let mut set = TopicSet::new();
        for topic in &self.topics {
            set.declare(topic.clone())
                .map_err(|e| user(format!("bad topic config: {e}")))?;
        }
        Ok(set)
    }
}

fn load_config(path: Option<&Path>) -> CliResult<Option<Config>> {
    path.map(Config::load).transpose()
}

fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| user(format!("cannot read {}: {e}", path.display())))
}

fn load_ir(path: &Path) -> CliResult<TriggerIr> {
    from_json(&read_to_string(path)?).map_err(|d| user(format!("{}: {d}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| user(format!("cannot write {}: {e}", path.display())))
}

/// Validates one compiled trigger, printing warnings and collecting errors.
fn check_ir(
    ir: &TriggerIr,
    registry: &PredicateRegistry,
    topics: Option<&TopicSet>,
    default_input: Option<&str>,
    errors: &mut Vec<String>,
) {
    let diagnostics = match topics {
        Some(topics) => validate_with_topics(ir, registry, topics, default_input),
        None => validate(ir, registry),
    };
    for diagnostic in diagnostics {
        if diagnostic.is_error() {
            errors.push(diagnostic.to_string());
        } else {
            eprintln!("{diagnostic}");
        }
    }
}

// ------------------------------------------------------------ compile ------

pub fn compile(input: &Path, out: &Path, config: Option<&Path>) -> CliResult<()> {
    let source = read_to_string(input)?;
    let asts = parse(&source).map_err(|diagnostics| {
        user(diagnostics
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("\n"))
    })?;
    if asts.is_empty() {
        return Err(user(format!("{}: no TRIGGER blocks found", input.display())));
    }

    let config = load_config(config)?;
    let topics = config.as_ref().map(|c| c.topic_set()).transpose()?;
    let default_input = config.as_ref().and_then(|c| c.default_input.as_deref());
    let registry = PredicateRegistry::with_builtins();

    let mut errors = Vec::new();
    let mut outputs: Vec<(String, String)> = Vec::new();
    for ast in &asts {
        let ir = compile_ast(ast);
        if outputs.iter().any(|(name, _)| *name == ir.name) {
            errors.push(format!("duplicate trigger name '{}'", ir.name));
        }
        check_ir(&ir, &registry, topics.as_ref(), default_input, &mut errors);
        outputs.push((ir.name.clone(), to_json(&ir)));
    }
    if !errors.is_empty() {
        return Err(user(errors.join("\n")));
    }

    fs::create_dir_all(out).map_err(|e| user(format!("cannot create {}: {e}", out.display())))?;
    for (name, json) in &outputs {
        write_file(&out.join(format!("{name}.trigger.json")), json)?;
    }
    println!("compiled {} trigger(s) to {}", outputs.len(), out.display());
    Ok(())
}

pub fn lint(input: &Path, config: Option<&Path>) -> CliResult<()> {
    let source = read_to_string(input)?;
    let asts = parse(&source).map_err(|diagnostics| {
        user(diagnostics
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("\n"))
    })?;

    let config = load_config(config)?;
    let topics = config.as_ref().map(|c| c.topic_set()).transpose()?;
    let default_input = config.as_ref().and_then(|c| c.default_input.as_deref());
    let registry = PredicateRegistry::with_builtins();

    let mut errors = Vec::new();
    for ast in &asts {
        let ir = compile_ast(ast);
        check_ir(&ir, &registry, topics.as_ref(), default_input, &mut errors);
    }
    if !errors.is_empty() {
        return Err(user(errors.join("\n")));
    }
    println!("{} trigger(s), no errors", asts.len());
    Ok(())
}

pub fn decompile(input: &Path) -> CliResult<()> {
    let ir = load_ir(input)?;
    let ast = decompile_ir(&ir).map_err(|diagnostics: Vec<IrDiagnostic>| {
        user(diagnostics
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("\n"))
    })?;
    print!("{}", pretty_print(&ast));
    Ok(())
}

// ---------------------------------------------------------------- gen ------

pub struct GenArgs<'a> {
    pub query: String,
    pub seed: Option<u64>,
    pub temperature: Option<f64>,
    pub replay: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub config: Option<&'a Path>,
}

fn make_transport(
    replay: Option<&Path>,
    record: Option<&Path>,
) -> CliResult<Box<dyn LlmTransport>> {
    if let Some(dir) = replay {
        return Ok(Box::new(ReplayTransport::new(dir)));
    }
    let http = HttpTransport::from_env().map_err(|e| {
        external(format!("no LLM endpoint and no --replay directory: {e}"))
    })?;
    match record {
        Some(dir) => Ok(Box::new(
            RecordingTransport::new(Box::new(http), dir)
                .map_err(|e| user(format!("cannot open --record directory: {e}")))?,
        )),
        None => Ok(Box::new(http)),
    }
}

fn describe_llm_error(error: LlmError) -> Failure {
    match error {
        LlmError::Transport(e) => external(e.to_string()),
        LlmError::Exhausted {
            attempts,
            diagnostics_history,
        } => {
            let mut msg = format!("generation failed after {attempts} attempts");
            for (i, diagnostics) in diagnostics_history.iter().enumerate() {
                msg.push_str(&format!("\nattempt {}:", i + 1));
                for diagnostic in diagnostics {
                    msg.push_str(&format!("\n  - {diagnostic}"));
                }
            }
            external(msg)
        }
    }
}

pub fn gen(args: GenArgs<'_>) -> CliResult<()> {
    let config = load_config(args.config)?;
    let topics = match &config {
        Some(config) => config.topic_set()?,
        None => TopicSet::new(),
    };
    let registry = PredicateRegistry::with_builtins();
    let transport = make_transport(args.replay.as_deref(), args.record.as_deref())?;

    let request = GenerationRequest {
        query: args.query,
        system_context: system_context(&registry, &topics),
        seed: args.seed,
        temperature: args.temperature.unwrap_or(DEFAULT_TEMPERATURE),
    };
    let result = generate(&request, transport.as_ref(), &registry).map_err(describe_llm_error)?;

    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.trigger.json", result.ir.name)));
    write_file(&out, &to_json(&result.ir))?;

    // The IR validated, so it decompiles.
    let ast = decompile_ir(&result.ir).expect("validated IR decompiles");
    print!("{}", pretty_print(&ast));
    eprintln!(
        "wrote {} ({} attempt{})",
        out.display(),
        result.attempts,
        if result.attempts == 1 { "" } else { "s" }
    );
    Ok(())
}

// ---------------------------------------------------------------- run ------

/// Everything `run` needs, resolved fail-fast before any sample is replayed.
pub struct RunManifest<'a> {
    pub stream: PathBuf,
    pub out: PathBuf,
    pub oracle_base: Option<PathBuf>,
    pub triggers: Vec<PathBuf>,
    pub config: Option<&'a Path>,
}

/// Picks the perception backend: `--oracle-base`, else the external backend
/// when its URL env var is set, else the oracle rooted at `fallback_base`.
fn make_backend(
    oracle_base: Option<&Path>,
    fallback_base: &Path,
) -> (Arc<dyn PerceptionBackend>, PathBuf) {
    if let Some(base) = oracle_base {
        return (Arc::new(OracleBackend::new(base)), base.to_path_buf());
    }
    if let Ok(addr) = std::env::var(trigdsl::predicates::BACKEND_URL_ENV) {
        return (
            Arc::new(trigdsl::predicates::ExternalBackend::new(addr)),
            fallback_base.to_path_buf(),
        );
    }
    (
        Arc::new(OracleBackend::new(fallback_base)),
        fallback_base.to_path_buf(),
    )
}

pub fn run(manifest: RunManifest<'_>) -> CliResult<()> {
    // Fail fast: config, triggers, and stream must all resolve before the
    // first sample is replayed.
    let config = load_config(manifest.config)?
        .ok_or_else(|| user("run needs --config with the topic declarations"))?;
    let topics = config.topic_set()?;
    let default_input = config.default_input.as_deref();

    let from_stdin = manifest.stream.as_os_str() == "-";
    if !from_stdin && !manifest.stream.is_file() {
        return Err(user(format!(
            "stream {} does not exist",
            manifest.stream.display()
        )));
    }

    let irs: Vec<TriggerIr> = manifest
        .triggers
        .iter()
        .map(|path| load_ir(path))
        .collect::<CliResult<_>>()?;

    let stream_dir = manifest
        .stream
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let (backend, data_root) = make_backend(manifest.oracle_base.as_deref(), &stream_dir);

    let registry = Arc::new(PredicateRegistry::with_builtins());
    let cache = Arc::new(DataCache::with_topics(&topics));
    let clock = Arc::new(VirtualClock::new());
    let mut manager = TriggerManager::new(registry, backend, cache.clone(), clock.clone());
    for ir in irs {
        let name = ir.name.clone();
        manager.add_trigger(ir, default_input).map_err(|diagnostics| {
            user(diagnostics
                .iter()
                .map(|d| format!("{name}: {d}"))
                .collect::<Vec<_>>()
                .join("\n"))
        })?;
    }

    let logger = CaptureLogger::create(&manifest.out)
        .map_err(|e| user(format!("cannot open capture dir {}: {e}", manifest.out.display())))?;
    logger.set_data_root(&data_root);

    let reader: Box<dyn BufRead> = if from_stdin {
        Box::new(std::io::stdin().lock())
    } else {
        Box::new(std::io::BufReader::new(fs::File::open(&manifest.stream).map_err(
            |e| user(format!("cannot open {}: {e}", manifest.stream.display())),
        )?))
    };

    let mut logger = logger;
    let mut dropped: u64 = 0;
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| user(format!("stream read failed: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: StreamSample = serde_json::from_str(&line)
            .map_err(|e| user(format!("stream line {}: {e}", index + 1)))?;
        clock.set(sample.timestamp);
        if let Err(e) = cache.publish_stream(&sample) {
            eprintln!("warning: line {}: {e}", index + 1);
            dropped += 1;
            continue;
        }
        manager.poll_once(&mut logger);
    }
    logger
        .close()
        .map_err(|e| user(format!("closing capture log: {e}")))?;

    let rows: Vec<Vec<String>> = manager
        .stats()
        .iter()
        .map(|(name, stats)| {
            vec![
                name.clone(),
                stats.evaluations.to_string(),
                stats.activations.to_string(),
                stats.errors.to_string(),
                format!("{:.1}", stats.mean_duration_ns() / 1_000.0),
            ]
        })
        .collect();
    print!(
        "{}",
        text_table(
            &["trigger", "evaluations", "activations", "errors", "mean_us"],
            &rows,
        )
    );
    let stats = logger.stats();
    println!(
        "{} record(s) written, {} outcome(s) recorded, {} sample(s) dropped",
        stats.records_written, stats.outcomes_recorded, dropped
    );
    Ok(())
}

// --------------------------------------------------------------- eval ------

fn report_out(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| user(format!("cannot create {}: {e}", out.display())))
}

/// Paired generation texts: `{"dsl": [[a, b]...], "code": [[a, b]...]}`.
#[derive(Debug, Deserialize)]
struct PairsDoc {
    dsl: Vec<(String, String)>,
    code: Vec<(String, String)>,
}

#[derive(Debug, Serialize)]
struct ConsistencyReport {
    dsl: SimilarityReport,
    code: SimilarityReport,
}

pub fn eval_consistency(pairs: Option<&Path>, out: &Path) -> CliResult<()> {
    let pairs = pairs.ok_or_else(|| user("--mode consistency needs --pairs"))?;
    let doc: PairsDoc = serde_json::from_str(&read_to_string(pairs)?)
        .map_err(|e| user(format!("malformed {}: {e}", pairs.display())))?;

    let dsl = consistency_eval(&doc.dsl).map_err(|e| user(e.to_string()))?;
    let code = consistency_eval(&doc.code).map_err(|e| user(e.to_string()))?;

    let text = format!(
        "DSL mode\n{}\nCode mode\n{}",
        dsl.to_text_table(),
        code.to_text_table()
    );
    print!("{text}");

    report_out(out)?;
    let report = ConsistencyReport { dsl, code };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&out.join("consistency.json"), &format!("{json}\n"))?;
    write_file(&out.join("consistency.txt"), &text)?;
    Ok(())
}

/// The protocol file for detection mode: sampling settings plus the query
/// list (extra keys such as a reference DSL are ignored).
#[derive(Debug, Deserialize)]
struct ProtocolFile {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_temperature")]
    temperature: f64,
    queries: Vec<ProtocolEntry>,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

#[derive(Debug, Deserialize)]
struct ProtocolEntry {
    name: String,
    category: QueryCategory,
    query: String,
}

pub struct DetectionArgs {
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub replay: Option<PathBuf>,
    pub oracle_base: Option<PathBuf>,
    pub out: PathBuf,
}

fn corpus_base(corpus_path: &Path, oracle_base: Option<&Path>) -> PathBuf {
    match oracle_base {
        Some(base) => base.to_path_buf(),
        None => corpus_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf(),
    }
}

pub fn eval_detection(args: DetectionArgs) -> CliResult<()> {
    let corpus_path = args
        .corpus
        .ok_or_else(|| user("--mode detection needs --corpus"))?;
    let queries_path = args
        .queries
        .ok_or_else(|| user("--mode detection needs --queries"))?;

    let corpus = Corpus::load(&corpus_path).map_err(|e| user(e.to_string()))?;
    let protocol: ProtocolFile = serde_json::from_str(&read_to_string(&queries_path)?)
        .map_err(|e| user(format!("malformed {}: {e}", queries_path.display())))?;
    let backend = OracleBackend::new(corpus_base(&corpus_path, args.oracle_base.as_deref()));
    let transport = make_transport(args.replay.as_deref(), None)?;

    let registry = PredicateRegistry::with_builtins();
    let context = system_context(&registry, &corpus.topics());
    let mut evals = Vec::new();
    for entry in &protocol.queries {
        let request = GenerationRequest {
            query: entry.query.clone(),
            system_context: context.clone(),
            seed: protocol.seed,
            temperature: protocol.temperature,
        };
        let generated =
            generate(&request, transport.as_ref(), &registry).map_err(describe_llm_error)?;
        let report = detection_eval(&generated.ir, &entry.name, &corpus, &registry, &backend)
            .map_err(|e| user(e.to_string()))?;
        evals.push(QueryEval {
            query: entry.query.clone(),
            category: entry.category,
            report,
        });
    }

    let summary = DetectionSummary::from_queries(evals);
    let text = summary.to_text_table();
    print!("{text}");

    report_out(&args.out)?;
    let json = serde_json::to_string_pretty(&summary).expect("report serializes");
    write_file(&args.out.join("detection.json"), &format!("{json}\n"))?;
    write_file(&args.out.join("detection.txt"), &text)?;
    Ok(())
}

pub struct RuntimeArgs {
    pub corpus: Option<PathBuf>,
    pub oracle_base: Option<PathBuf>,
    pub repetitions: usize,
    pub triggers: Vec<PathBuf>,
    pub out: PathBuf,
}

pub fn eval_runtime(args: RuntimeArgs) -> CliResult<()> {
    let corpus_path = args
        .corpus
        .ok_or_else(|| user("--mode runtime needs --corpus"))?;
    if args.triggers.is_empty() {
        return Err(user("--mode runtime needs at least one .trigger.json"));
    }

    let corpus = Corpus::load(&corpus_path).map_err(|e| user(e.to_string()))?;
    let backend = OracleBackend::new(corpus_base(&corpus_path, args.oracle_base.as_deref()));
    let registry = PredicateRegistry::with_builtins();

    let irs: Vec<TriggerIr> = args
        .triggers
        .iter()
        .map(|path| load_ir(path))
        .collect::<CliResult<_>>()?;
    let pairs: Vec<(&TriggerIr, &str)> = irs.iter().map(|ir| (ir, ir.name.as_str())).collect();

    let report = runtime_bench(&pairs, &corpus, &registry, &backend, args.repetitions)
        .map_err(|e| user(e.to_string()))?;
    let text = report.to_text_table();
    print!("{text}");

    report_out(&args.out)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&args.out.join("runtime.json"), &format!("{json}\n"))?;
    write_file(&args.out.join("runtime.txt"), &text)?;
    Ok(())
}
