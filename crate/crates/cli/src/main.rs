//! `shotcap` command-line interface.
//!
//! Subcommands cover the pipeline end to end: `preprocess` (manifest to
//! filtered dialogue dataset plus rejection log), `plan` (frame plans),
//! `render` (prompts), `generate` (backend predictions), `evaluate`
//! (metric report), and `report` (report rendering).
//!
//! Exit codes: 0 success, 1 validation or alignment failure (including
//! usage errors), 2 I/O or backend failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use shotcap::dataset::{self, DatasetError, FilterOptions, Scope, ShotEntry};
use shotcap::decoding::DecodingError;
use shotcap::harness::{
    emit_report, evaluate_run, generate_predictions, parse_report, BackendDescriptor, BackendKind,
    HarnessError, ReportFormat, RunManifest, SamplingSpec,
};
use shotcap::metrics::{MetricsError, Task};
use shotcap::prompting::{self, PromptError, PromptMode};
use shotcap::sampling::{self, SamplingError, SamplingMethod};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO_OR_BACKEND: i32 = 2;

#[derive(Debug)]
enum CliError {
    Dataset(DatasetError),
    Sampling(SamplingError),
    Prompt(PromptError),
    Decoding(DecodingError),
    Metrics(MetricsError),
    Harness(HarnessError),
    Io(PathBuf, std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Dataset(e) => write!(f, "{e}"),
            CliError::Sampling(e) => write!(f, "{e}"),
            CliError::Prompt(e) => write!(f, "{e}"),
            CliError::Decoding(e) => write!(f, "{e}"),
            CliError::Metrics(e) => write!(f, "{e}"),
            CliError::Harness(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "i/o error at {}: {e}", path.display()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Dataset(e)
    }
}
impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        CliError::Sampling(e)
    }
}
impl From<PromptError> for CliError {
    fn from(e: PromptError) -> Self {
        CliError::Prompt(e)
    }
}
impl From<DecodingError> for CliError {
    fn from(e: DecodingError) -> Self {
        CliError::Decoding(e)
    }
}
impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Metrics(e)
    }
}
impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Harness(e)
    }
}

fn harness_exit_code(error: &HarnessError) -> i32 {
    match error {
        HarnessError::Dataset(e) => dataset_exit_code(e),
        HarnessError::Startup(_) | HarnessError::Io { .. } => EXIT_IO_OR_BACKEND,
        _ => EXIT_VALIDATION,
    }
}

fn dataset_exit_code(error: &DatasetError) -> i32 {
    match error {
        DatasetError::Io { .. } => EXIT_IO_OR_BACKEND,
        _ => EXIT_VALIDATION,
    }
}

fn exit_code(error: &CliError) -> i32 {
    match error {
        CliError::Dataset(e) => dataset_exit_code(e),
        CliError::Sampling(e) => match e {
            SamplingError::InvalidSpan { .. } | SamplingError::InvalidArgument(_) => {
                EXIT_VALIDATION
            }
            _ => EXIT_IO_OR_BACKEND,
        },
        CliError::Prompt(_) | CliError::Decoding(_) | CliError::Metrics(_) => EXIT_VALIDATION,
        CliError::Harness(e) => harness_exit_code(e),
        CliError::Io(_, _) => EXIT_IO_OR_BACKEND,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Train,
    Eval,
}

impl From<ModeArg> for PromptMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Train => PromptMode::Train,
            ModeArg::Eval => PromptMode::Eval,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Captioning,
    Summarization,
}

impl From<TaskArg> for Task {
    fn from(task: TaskArg) -> Self {
        match task {
            TaskArg::Captioning => Task::Captioning,
            TaskArg::Summarization => Task::Summarization,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Uniform,
    HeadTail,
}

impl From<MethodArg> for SamplingMethod {
    fn from(method: MethodArg) -> Self {
        match method {
            MethodArg::Uniform => SamplingMethod::Uniform,
            MethodArg::HeadTail => SamplingMethod::HeadTail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    Shot,
    FullVideo,
    All,
}

impl ScopeArg {
    fn keeps(self, scope: Scope) -> bool {
        match self {
            ScopeArg::All => true,
            ScopeArg::Shot => scope == Scope::Shot,
            ScopeArg::FullVideo => scope == Scope::FullVideo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Mock,
    Subprocess,
    Network,
}

impl From<BackendArg> for BackendKind {
    fn from(backend: BackendArg) -> Self {
        match backend {
            BackendArg::Mock => BackendKind::Mock,
            BackendArg::Subprocess => BackendKind::Subprocess,
            BackendArg::Network => BackendKind::Network,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Structured,
}

impl From<FormatArg> for ReportFormat {
    fn from(format: FormatArg) -> Self {
        match format {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Structured => ReportFormat::Structured,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "shotcap",
    version,
    about = "Shot-level video captioning pipeline: preprocessing, frame plans, prompts, generation, and metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and filter a manifest into a dialogue dataset plus a rejection log
    Preprocess(PreprocessArgs),
    /// Compute frame-index plans for dataset entries
    Plan(PlanArgs),
    /// Render instruction prompts for dataset entries
    Render(RenderArgs),
    /// Run a generation backend over a dataset and write predictions
    Generate(GenerateArgs),
    /// Score predictions against references and emit a report
    Evaluate(EvaluateArgs),
    /// Render a structured report file
    Report(ReportArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    /// Annotation manifest to load
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for the dataset, references, and rejection log
    #[arg(long)]
    out_dir: PathBuf,
    /// Whether to embed ground truth (train) or hold it out (eval)
    #[arg(long, value_enum, default_value_t = ModeArg::Eval)]
    mode: ModeArg,
    /// Keep only entries of this scope
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    scope: ScopeArg,
    /// Captions with fewer tokens than this are rejected
    #[arg(long, default_value_t = 1)]
    min_caption_tokens: usize,
    /// Prompt token budget
    #[arg(long, default_value_t = 3072)]
    max_prompt_tokens: usize,
}

#[derive(Args)]
struct PlanArgs {
    /// Annotation manifest to load
    #[arg(long)]
    manifest: PathBuf,
    /// Sampling method
    #[arg(long, value_enum, default_value_t = MethodArg::Uniform)]
    method: MethodArg,
    /// Frames per plan
    #[arg(long, default_value_t = 120)]
    n_frames: usize,
    /// Seed for head-tail sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only entries of this scope
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    scope: ScopeArg,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Annotation manifest to load
    #[arg(long)]
    manifest: PathBuf,
    /// Whether to embed ground truth (train) or stop at the cue (eval)
    #[arg(long, value_enum, default_value_t = ModeArg::Eval)]
    mode: ModeArg,
    /// Keep only entries of this scope
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    scope: ScopeArg,
    /// Prompt token budget
    #[arg(long, default_value_t = 3072)]
    max_prompt_tokens: usize,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Run-manifest file; explicit flags below override its values
    #[arg(long)]
    run_manifest: Option<PathBuf>,
    /// Annotation manifest to generate from
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Directory for predictions, references, and failures
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Run identifier
    #[arg(long, default_value = "run")]
    run_id: String,
    #[arg(long, value_enum, default_value_t = TaskArg::Captioning)]
    task: TaskArg,
    /// Backend kind
    #[arg(long, value_enum, default_value_t = BackendArg::Mock)]
    backend: BackendArg,
    /// Subprocess command or network URL
    #[arg(long, default_value = "")]
    endpoint: String,
    /// Per-entry backend timeout in seconds
    #[arg(long, default_value_t = 60.0)]
    timeout_secs: f64,
    /// Maximum concurrent backend calls
    #[arg(long, default_value_t = 4)]
    max_in_flight: usize,
    /// Sampling method
    #[arg(long, value_enum, default_value_t = MethodArg::Uniform)]
    method: MethodArg,
    /// Frames per plan
    #[arg(long, default_value_t = 120)]
    n_frames: usize,
    /// Seed for head-tail sampling
    #[arg(long, default_value_t = 0)]
    sampling_seed: u64,
    /// Decoding temperature
    #[arg(long, default_value_t = 0.2)]
    temperature: f64,
    /// Nucleus sampling mass
    #[arg(long, default_value_t = 0.9)]
    top_p: f64,
    /// Banned n-gram size (0 disables)
    #[arg(long, default_value_t = 3)]
    no_repeat_ngram_size: usize,
    /// Generation length cap
    #[arg(long, default_value_t = 128)]
    max_new_tokens: usize,
    /// Generation seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prompt token budget
    #[arg(long, default_value_t = 3072)]
    max_prompt_tokens: usize,
    /// Decoder template with {video}, {frame_index}, {out} placeholders
    #[arg(long)]
    decoder_command: Option<String>,
    /// Directory for extracted frames
    #[arg(long)]
    frames_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predictions file ({entry_id, prediction} per line)
    #[arg(long)]
    predictions: PathBuf,
    /// References file ({entry_id, reference} per line)
    #[arg(long)]
    references: PathBuf,
    #[arg(long, value_enum, default_value_t = TaskArg::Captioning)]
    task: TaskArg,
    /// Row label for the rendered table
    #[arg(long, default_value = "model")]
    model: String,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
    /// Also write the structured report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Structured report file to render
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
}

type LoadedEntries = (
    Vec<ShotEntry>,
    Vec<dataset::LoadDiagnostic>,
    Vec<dataset::Rejection>,
);

fn load_entries(
    manifest: &Path,
    scope: ScopeArg,
    min_caption_tokens: usize,
) -> Result<LoadedEntries, CliError> {
    let load = dataset::load_manifest(manifest)?;
    let options = FilterOptions { min_caption_tokens };
    let (kept, rejected) = dataset::filter_corrupted(&load.videos, &options);
    let entries = dataset::segment_shots(&kept)
        .into_iter()
        .filter(|entry| scope.keeps(entry.scope))
        .collect();
    Ok((entries, load.diagnostics, rejected))
}

fn write_or_print(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, content).map_err(|e| CliError::Io(path.to_path_buf(), e))
        }
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
        }
    }
}

fn cmd_preprocess(args: &PreprocessArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Io(args.out_dir.clone(), e))?;
    let (entries, diagnostics, rejected) =
        load_entries(&args.manifest, args.scope, args.min_caption_tokens)?;

    let mode: PromptMode = args.mode.into();
    let dataset_name = match mode {
        PromptMode::Train => "sft_train.jsonl",
        PromptMode::Eval => "sft_eval.jsonl",
    };
    let dataset_path = args.out_dir.join(dataset_name);
    let written =
        dataset::write_sft_dataset(&entries, mode, &dataset_path, Some(args.max_prompt_tokens))?;

    let log_path = args.out_dir.join("rejections.jsonl");
    dataset::write_rejection_log(&diagnostics, &rejected, &log_path)?;

    println!(
        "wrote {written} entries to {} ({} invalid records, {} rejections logged to {})",
        dataset_path.display(),
        diagnostics.len(),
        rejected.len(),
        log_path.display()
    );
    if mode == PromptMode::Eval {
        println!(
            "references written to {}",
            dataset::references_path(&dataset_path).display()
        );
    }
    Ok(())
}

fn cmd_plan(args: &PlanArgs) -> Result<(), CliError> {
    let (entries, _, _) = load_entries(&args.manifest, args.scope, 1)?;
    let mut out = String::new();
    for entry in &entries {
        let plan = sampling::plan_for_entry(entry, args.method.into(), args.n_frames, args.seed)?;
        out.push_str(&serde_json::to_string(&plan).expect("plans always serialize"));
        out.push('\n');
    }
    write_or_print(args.out.as_deref(), &out)
}

fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    let (entries, _, _) = load_entries(&args.manifest, args.scope, 1)?;
    let mut out = String::new();
    for entry in &entries {
        let instance = prompting::render_prompt(entry, args.mode.into());
        let instance = prompting::enforce_budget(instance, args.max_prompt_tokens)?;
        out.push_str(&serde_json::to_string(&instance).expect("prompts always serialize"));
        out.push('\n');
    }
    write_or_print(args.out.as_deref(), &out)
}

/// Merges flag values over a run-manifest file; explicitly given flags win.
fn resolve_run_manifest(
    args: &GenerateArgs,
    matches: &ArgMatches,
) -> Result<RunManifest, CliError> {
    let given = |id: &str| matches.value_source(id) == Some(ValueSource::CommandLine);

    let mut manifest = match &args.run_manifest {
        Some(path) => RunManifest::load(path)?,
        None => {
            let dataset_path = args.dataset.clone().ok_or_else(|| {
                CliError::Harness(HarnessError::InvalidManifest(
                    "--dataset is required without --run-manifest".to_string(),
                ))
            })?;
            let output_dir = args.output_dir.clone().ok_or_else(|| {
                CliError::Harness(HarnessError::InvalidManifest(
                    "--output-dir is required without --run-manifest".to_string(),
                ))
            })?;
            RunManifest {
                run_id: args.run_id.clone(),
                task: args.task.into(),
                sampling: SamplingSpec::default(),
                generation: Default::default(),
                backend: BackendDescriptor::default(),
                dataset_path,
                output_dir,
                max_prompt_tokens: args.max_prompt_tokens,
                decoder_command: None,
                frames_dir: None,
            }
        }
    };

    if given("dataset") {
        manifest.dataset_path = args.dataset.clone().expect("given on the command line");
    }
    if given("output_dir") {
        manifest.output_dir = args.output_dir.clone().expect("given on the command line");
    }
    if given("run_id") {
        manifest.run_id = args.run_id.clone();
    }
    if given("task") {
        manifest.task = args.task.into();
    }
    if given("backend") {
        manifest.backend.kind = args.backend.into();
    }
    if given("endpoint") {
        manifest.backend.endpoint = args.endpoint.clone();
    }
    if given("timeout_secs") {
        manifest.backend.timeout_secs = args.timeout_secs;
    }
    if given("max_in_flight") {
        manifest.backend.max_in_flight = args.max_in_flight;
    }
    if given("method") {
        manifest.sampling.method = args.method.into();
    }
    if given("n_frames") {
        manifest.sampling.n_frames = args.n_frames;
    }
    if given("sampling_seed") {
        manifest.sampling.seed = args.sampling_seed;
    }
    if given("temperature") {
        manifest.generation.temperature = args.temperature;
    }
    if given("top_p") {
        manifest.generation.top_p = args.top_p;
    }
    if given("no_repeat_ngram_size") {
        manifest.generation.no_repeat_ngram_size = args.no_repeat_ngram_size;
    }
    if given("max_new_tokens") {
        manifest.generation.max_new_tokens = args.max_new_tokens;
    }
    if given("seed") {
        manifest.generation.seed = args.seed;
    }
    if given("max_prompt_tokens") {
        manifest.max_prompt_tokens = args.max_prompt_tokens;
    }
    if given("decoder_command") {
        manifest.decoder_command = args.decoder_command.clone();
    }
    if given("frames_dir") {
        manifest.frames_dir = args.frames_dir.clone();
    }
    Ok(manifest)
}

fn cmd_generate(args: &GenerateArgs, matches: &ArgMatches) -> Result<(), CliError> {
    let manifest = resolve_run_manifest(args, matches)?;
    let outcome = generate_predictions(&manifest)?;
    println!(
        "wrote {} predictions to {}",
        outcome.written,
        outcome.predictions_path.display()
    );
    println!(
        "references written to {}",
        outcome.references_path.display()
    );
    if let Some(path) = &outcome.failures_path {
        println!(
            "{} entries failed; reasons logged to {}",
            outcome.failures.len(),
            path.display()
        );
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let mut report = evaluate_run(&args.predictions, &args.references, args.task.into())?;
    report.model = args.model.clone();
    if let Some(path) = &args.out {
        let structured = emit_report(&report, ReportFormat::Structured);
        std::fs::write(path, structured).map_err(|e| CliError::Io(path.clone(), e))?;
    }
    print!("{}", emit_report(&report, args.format.into()));
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(&args.input).map_err(|e| CliError::Io(args.input.clone(), e))?;
    let report = parse_report(&text)?;
    print!("{}", emit_report(&report, args.format.into()));
    Ok(())
}

fn run() -> i32 {
    let mut command = Cli::command();
    let matches = match command.try_get_matches_from_mut(std::env::args_os()) {
        Ok(matches) => matches,
        Err(error) => {
            let code = match error.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let _ = error.print();
            return code;
        }
    };
    let cli = Cli::from_arg_matches(&matches).expect("matches come from this command");

    let result = match &cli.command {
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Render(args) => cmd_render(args),
        Command::Generate(args) => {
            let sub = matches
                .subcommand_matches("generate")
                .expect("generate was parsed");
            cmd_generate(args, sub)
        }
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(error) => {
            eprintln!("error: {error}");
            exit_code(&error)
        }
    }
}

fn main() {
    std::process::exit(run());
}
