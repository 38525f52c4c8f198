//! End-to-end orchestration: dataset in, prompts rendered, frames planned,
//! backend invoked, predictions scored, report emitted.
//!
//! Runs are deterministic for the mock backend regardless of parallelism:
//! entries are dispatched by id order, results are collected per entry, and
//! all output files are written in entry-id order.

mod backend;

pub use backend::{
    probe_endpoint, Backend, BackendError, BackendRequest, BackendResponse, MockBackend,
    NetworkBackend, SubprocessBackend,
};

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, DatasetError, FilterOptions, Scope, ShotEntry};
use crate::decoding::{DecodingError, GenerationConfig};
use crate::metrics::{self, EntryFailure, MetricReport, MetricsError, Task};
use crate::prompting::{self, PromptMode, DEFAULT_MAX_PROMPT_TOKENS};
use crate::sampling::{self, SamplingMethod};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error(transparent)]
    Decoding(#[from] DecodingError),

    #[error("invalid run manifest: {0}")]
    InvalidManifest(String),

    #[error("no entries match task {task}")]
    EmptyRun { task: Task },

    #[error("backend startup failed: {0}")]
    Startup(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("report error: {0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Which engine serves generation requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    Subprocess,
    Network,
}

/// Backend selection plus transport limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    /// Command template for subprocess backends, URL for network backends.
    pub endpoint: String,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
}

impl Default for BackendDescriptor {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: String::new(),
            timeout_secs: 60.0,
            max_in_flight: 4,
        }
    }
}

impl BackendDescriptor {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_in_flight == 0 {
            return Err(HarnessError::InvalidManifest(
                "max_in_flight must be at least 1".to_string(),
            ));
        }
        if !self.timeout_secs.is_finite() || self.timeout_secs <= 0.0 {
            return Err(HarnessError::InvalidManifest(
                "timeout_secs must be positive".to_string(),
            ));
        }
        match self.kind {
            BackendKind::Mock => Ok(()),
            BackendKind::Subprocess if self.endpoint.trim().is_empty() => Err(
                HarnessError::InvalidManifest("subprocess backend needs a command".to_string()),
            ),
            BackendKind::Network
                if !(self.endpoint.starts_with("http://")
                    || self.endpoint.starts_with("https://")) =>
            {
                Err(HarnessError::InvalidManifest(format!(
                    "network backend endpoint {} is not an http(s) URL",
                    self.endpoint
                )))
            }
            _ => Ok(()),
        }
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

/// Frame-sampling settings for a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingSpec {
    pub method: SamplingMethod,
    pub n_frames: usize,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            method: SamplingMethod::Uniform,
            n_frames: 120,
            seed: 0,
        }
    }
}

/// Everything one run needs: dataset, task, sampling, generation, backend,
/// and output location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub task: Task,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub backend: BackendDescriptor,
    pub dataset_path: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_max_prompt_tokens")]
    pub max_prompt_tokens: usize,
    /// Optional decoder template with `{video}`, `{frame_index}`, `{out}`;
    /// when present, frames are materialized for videos with a source path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoder_command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames_dir: Option<PathBuf>,
}

fn default_max_prompt_tokens() -> usize {
    DEFAULT_MAX_PROMPT_TOKENS
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::InvalidManifest(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(self).expect("manifest always serializes");
        fs::write(path, text).map_err(io_err(path))
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionLine {
    pub entry_id: String,
    pub prediction: String,
}

/// Where a run wrote its outputs.
#[derive(Debug, Clone)]
pub struct GenerationOutcome {
    pub predictions_path: PathBuf,
    pub references_path: PathBuf,
    pub failures_path: Option<PathBuf>,
    pub written: usize,
    pub failures: Vec<EntryFailure>,
}

fn build_backend(descriptor: &BackendDescriptor) -> Result<Box<dyn Backend>, HarnessError> {
    match descriptor.kind {
        BackendKind::Mock => Ok(Box::new(MockBackend)),
        BackendKind::Subprocess => {
            SubprocessBackend::spawn(&descriptor.endpoint, descriptor.timeout())
                .map(|b| Box::new(b) as Box<dyn Backend>)
                .map_err(|e| HarnessError::Startup(e.to_string()))
        }
        BackendKind::Network => {
            probe_endpoint(&descriptor.endpoint, descriptor.timeout())
                .map_err(|e| HarnessError::Startup(e.to_string()))?;
            NetworkBackend::new(&descriptor.endpoint, descriptor.timeout())
                .map(|b| Box::new(b) as Box<dyn Backend>)
                .map_err(|e| HarnessError::Startup(e.to_string()))
        }
    }
}

fn entry_failure_reason(error: &BackendError) -> &'static str {
    match error {
        BackendError::Timeout(_) => "timeout",
        _ => "backend_error",
    }
}

fn run_entry(
    entry: &ShotEntry,
    manifest: &RunManifest,
    source_paths: &HashMap<&str, &str>,
    backend: &dyn Backend,
) -> Result<String, String> {
    let instance = prompting::render_prompt(entry, PromptMode::Eval);
    let instance = prompting::enforce_budget(instance, manifest.max_prompt_tokens)
        .map_err(|_| "budget_exceeded".to_string())?;
    let plan = sampling::plan_for_entry(
        entry,
        manifest.sampling.method,
        manifest.sampling.n_frames,
        manifest.sampling.seed,
    )
    .map_err(|e| format!("plan_error: {e}"))?;

    let frames = match &manifest.decoder_command {
        None => None,
        Some(command) => {
            let video_path = source_paths
                .get(entry.video_id.as_str())
                .ok_or_else(|| "decode_failure".to_string())?;
            let frames_dir = manifest
                .frames_dir
                .clone()
                .unwrap_or_else(|| manifest.output_dir.join("frames"));
            let paths =
                sampling::extract_frames(&plan, command, Path::new(video_path), &frames_dir)
                    .map_err(|_| "decode_failure".to_string())?;
            Some(
                paths
                    .iter()
                    .map(|p| p.to_string_lossy().into_owned())
                    .collect(),
            )
        }
    };

    let request = BackendRequest {
        entry_id: entry.entry_id.clone(),
        prompt: instance.text,
        plan,
        frames,
        config: manifest.generation.clone(),
    };
    backend
        .generate(&request)
        .map_err(|e| entry_failure_reason(&e).to_string())
}

/// Runs generation over every entry matching the manifest's task and writes
/// `predictions.jsonl`, `references.jsonl`, and (when anything failed)
/// `failures.jsonl` under the output directory.
///
/// A failing entry is recorded with its reason and an empty prediction so
/// id alignment survives; it never disturbs other entries.
pub fn generate_predictions(manifest: &RunManifest) -> Result<GenerationOutcome, HarnessError> {
    manifest.backend.validate()?;
    manifest.generation.validate()?;
    if manifest.sampling.n_frames == 0 {
        return Err(HarnessError::InvalidManifest(
            "sampling.n_frames must be at least 1".to_string(),
        ));
    }

    let load = dataset::load_manifest(&manifest.dataset_path)?;
    let (kept, _) = dataset::filter_corrupted(&load.videos, &FilterOptions::default());
    let wanted_scope = match manifest.task {
        Task::Captioning => Scope::Shot,
        Task::Summarization => Scope::FullVideo,
    };
    let mut entries: Vec<ShotEntry> = dataset::segment_shots(&kept)
        .into_iter()
        .filter(|entry| entry.scope == wanted_scope)
        .collect();
    entries.sort_by(|a, b| a.entry_id.cmp(&b.entry_id));
    if entries.is_empty() {
        return Err(HarnessError::EmptyRun {
            task: manifest.task,
        });
    }

    let source_paths: HashMap<&str, &str> = kept
        .iter()
        .filter_map(|video| {
            video
                .source_path
                .as_deref()
                .map(|path| (video.video_id.as_str(), path))
        })
        .collect();

    fs::create_dir_all(&manifest.output_dir).map_err(io_err(&manifest.output_dir))?;
    let backend = build_backend(&manifest.backend)?;
    let workers = match manifest.backend.kind {
        BackendKind::Subprocess => 1, // lockstep line protocol
        _ => manifest.backend.max_in_flight.max(1),
    };

    let cursor = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<String, String>>>> =
        entries.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(entries.len()) {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::SeqCst);
                if index >= entries.len() {
                    break;
                }
                let outcome = run_entry(&entries[index], manifest, &source_paths, backend.as_ref());
                *results[index].lock().expect("result slot") = Some(outcome);
            });
        }
    });

    let mut failures = Vec::new();
    let predictions_path = manifest.output_dir.join("predictions.jsonl");
    let references_path = manifest.output_dir.join("references.jsonl");
    let mut predictions_file = std::io::BufWriter::new(
        fs::File::create(&predictions_path).map_err(io_err(&predictions_path))?,
    );
    let mut references = Vec::with_capacity(entries.len());
    for (entry, slot) in entries.iter().zip(&results) {
        let outcome = slot
            .lock()
            .expect("result slot")
            .take()
            .expect("every entry was dispatched");
        let prediction = match outcome {
            Ok(text) => text,
            Err(reason) => {
                failures.push(EntryFailure {
                    entry_id: entry.entry_id.clone(),
                    reason,
                });
                String::new()
            }
        };
        let line = PredictionLine {
            entry_id: entry.entry_id.clone(),
            prediction,
        };
        serde_json::to_writer(&mut predictions_file, &line).map_err(|e| HarnessError::Io {
            path: predictions_path.clone(),
            source: e.into(),
        })?;
        predictions_file
            .write_all(b"\n")
            .map_err(io_err(&predictions_path))?;
        references.push(dataset::ReferenceLine {
            entry_id: entry.entry_id.clone(),
            reference: entry.target_text.clone(),
        });
    }
    predictions_file
        .flush()
        .map_err(io_err(&predictions_path))?;
    dataset::write_references(&references, &references_path)?;

    let failures_path = if failures.is_empty() {
        // a stale file from a previous run in this directory would leak
        // into the next report
        let _ = fs::remove_file(manifest.output_dir.join("failures.jsonl"));
        None
    } else {
        let path = manifest.output_dir.join("failures.jsonl");
        let mut file = std::io::BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
        for failure in &failures {
            serde_json::to_writer(&mut file, failure).map_err(|e| HarnessError::Io {
                path: path.clone(),
                source: e.into(),
            })?;
            file.write_all(b"\n").map_err(io_err(&path))?;
        }
        file.flush().map_err(io_err(&path))?;
        Some(path)
    };

    Ok(GenerationOutcome {
        predictions_path,
        references_path,
        failures_path,
        written: entries.len(),
        failures,
    })
}

/// Reads a predictions file.
pub fn load_predictions(path: &Path) -> Result<Vec<PredictionLine>, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (number, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: PredictionLine = serde_json::from_str(line).map_err(|e| {
            HarnessError::Report(format!("{} line {}: {e}", path.display(), number + 1))
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Scores a predictions file against a references file. A `failures.jsonl`
/// next to the predictions file, when present, is folded into the report
/// for the table footer.
pub fn evaluate_run(
    predictions_path: &Path,
    references_path: &Path,
    task: Task,
) -> Result<MetricReport, HarnessError> {
    let predictions: Vec<(String, String)> = load_predictions(predictions_path)?
        .into_iter()
        .map(|line| (line.entry_id, line.prediction))
        .collect();
    let references = dataset::load_references(references_path)?;
    let mut report = metrics::compute_report(&predictions, &references, task)?;

    let failures_path = predictions_path.with_file_name("failures.jsonl");
    if failures_path.exists() {
        let text = fs::read_to_string(&failures_path).map_err(io_err(&failures_path))?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let failure: EntryFailure = serde_json::from_str(line)
                .map_err(|e| HarnessError::Report(format!("failures file: {e}")))?;
            report.failures.push(failure);
        }
    }
    Ok(report)
}

/// Output shape for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Machine-readable JSON; round-trips through [`parse_report`].
    Structured,
    /// Fixed-width table with Model/BLEU/METEOR/ROUGE/CIDER columns.
    Table,
}

/// Renders a report. Table values print with two decimals; a footer counts
/// failed entries when there are any.
pub fn emit_report(report: &MetricReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            serde_json::to_string_pretty(report).expect("reports always serialize")
        }
        ReportFormat::Table => {
            let width = report.model.len().max("Model".len());
            let mut out = format!(
                "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}\n",
                "Model", "BLEU", "METEOR", "ROUGE", "CIDER"
            );
            out.push_str(&format!(
                "{:<width$}  {:>8.2}  {:>8.2}  {:>8.2}  {:>8.2}\n",
                report.model, report.bleu4, report.meteor, report.rouge_l, report.cider_d
            ));
            if !report.failures.is_empty() {
                out.push_str(&format!("\nfailed entries: {}\n", report.failures.len()));
            }
            out
        }
    }
}

/// Parses a structured report back.
pub fn parse_report(text: &str) -> Result<MetricReport, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Report(e.to_string()))
}
