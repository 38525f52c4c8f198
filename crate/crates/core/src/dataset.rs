//! Annotation manifests, shot segmentation, corruption filtering, and
//! supervised-dialogue dataset files.
//!
//! A manifest is one JSON document (`schema_version` 1) listing videos with
//! ordered shot spans, per-shot captions and ASR, and an optional whole-video
//! summary. Loading validates structural invariants and diverts violating
//! videos into a diagnostics list instead of dropping them silently;
//! corruption filtering is a separate, content-level pass.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::{self, PromptMode};

/// Current manifest schema version.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Tag used in entry ids for whole-video summarization entries.
pub const FULL_VIDEO_TAG: &str = "FULL";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported schema version {found} in {path} (expected {MANIFEST_SCHEMA_VERSION})")]
    SchemaVersion { path: PathBuf, found: u32 },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One annotated shot inside a video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot_id: String,
    /// Inclusive start frame.
    pub start_frame: u64,
    /// Exclusive end frame.
    pub end_frame: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asr: Option<String>,
}

/// An annotated video with ordered shots and an optional summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub frame_count: u64,
    pub shots: Vec<ShotRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asr_full: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<String>,
}

/// Scope of a dataset entry or frame plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Shot,
    FullVideo,
}

/// One preprocessed training or evaluation unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotEntry {
    /// `{video_id}_{shot_id}`, or `{video_id}_FULL` for summarization.
    pub entry_id: String,
    pub scope: Scope,
    pub span: (u64, u64),
    /// Caption for shot scope, summary for full-video scope; never empty.
    pub target_text: String,
    pub asr_text: Option<String>,
    pub video_id: String,
}

impl ShotEntry {
    pub fn entry_id_for(video_id: &str, shot_id: &str) -> String {
        format!("{video_id}_{shot_id}")
    }

    pub fn full_video_entry_id(video_id: &str) -> String {
        format!("{video_id}_{FULL_VIDEO_TAG}")
    }
}

/// Structural invariant violated by a manifest record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadViolation {
    NegativeFrameIndex,
    NegativeFrameCount,
    ShotOutOfBounds,
    ShotsUnsorted,
    ShotsOverlap,
    DuplicateShotId,
    DuplicateVideoId,
}

impl std::fmt::Display for LoadViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            LoadViolation::NegativeFrameIndex => "negative_frame_index",
            LoadViolation::NegativeFrameCount => "negative_frame_count",
            LoadViolation::ShotOutOfBounds => "shot_out_of_bounds",
            LoadViolation::ShotsUnsorted => "shots_unsorted",
            LoadViolation::ShotsOverlap => "shots_overlap",
            LoadViolation::DuplicateShotId => "duplicate_shot_id",
            LoadViolation::DuplicateVideoId => "duplicate_video_id",
        };
        write!(f, "{name}")
    }
}

/// A record diverted out of the loaded list, with the reasons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadDiagnostic {
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_id: Option<String>,
    pub reason: LoadViolation,
}

/// Result of loading a manifest: valid records plus diagnostics for the
/// records that parsed but violated invariants.
#[derive(Debug, Clone, Default)]
pub struct ManifestLoad {
    pub videos: Vec<VideoRecord>,
    pub diagnostics: Vec<LoadDiagnostic>,
}

// raw mirror types: frames deserialize as i64 so negative values surface as
// diagnostics rather than opaque parse failures
#[derive(Deserialize)]
struct RawManifest {
    schema_version: u32,
    #[serde(default)]
    videos: Vec<RawVideo>,
}

#[derive(Deserialize)]
struct RawVideo {
    video_id: String,
    frame_count: i64,
    #[serde(default)]
    shots: Vec<RawShot>,
    #[serde(default)]
    summary: Option<String>,
    #[serde(default)]
    asr_full: Option<String>,
    #[serde(default)]
    source_path: Option<String>,
}

#[derive(Deserialize)]
struct RawShot {
    shot_id: String,
    start_frame: i64,
    end_frame: i64,
    #[serde(default)]
    caption: Option<String>,
    #[serde(default)]
    asr: Option<String>,
}

fn validate_video(raw: &RawVideo, diagnostics: &mut Vec<LoadDiagnostic>) -> Option<VideoRecord> {
    let before = diagnostics.len();
    let mut push = |shot_id: Option<&str>, reason: LoadViolation| {
        diagnostics.push(LoadDiagnostic {
            video_id: raw.video_id.clone(),
            shot_id: shot_id.map(str::to_string),
            reason,
        });
    };

    if raw.frame_count < 0 {
        push(None, LoadViolation::NegativeFrameCount);
    }
    let mut shot_ids = HashSet::new();
    for shot in &raw.shots {
        if shot.start_frame < 0 || shot.end_frame < 0 {
            push(Some(&shot.shot_id), LoadViolation::NegativeFrameIndex);
        } else if shot.end_frame > raw.frame_count {
            push(Some(&shot.shot_id), LoadViolation::ShotOutOfBounds);
        }
        if !shot_ids.insert(shot.shot_id.as_str()) {
            push(Some(&shot.shot_id), LoadViolation::DuplicateShotId);
        }
    }
    let sorted = raw
        .shots
        .windows(2)
        .all(|pair| pair[0].start_frame <= pair[1].start_frame);
    if !sorted {
        push(None, LoadViolation::ShotsUnsorted);
    } else {
        for pair in raw.shots.windows(2) {
            let occupied_end = pair[0].end_frame.max(pair[0].start_frame);
            if occupied_end > pair[1].start_frame {
                push(Some(&pair[1].shot_id), LoadViolation::ShotsOverlap);
            }
        }
    }

    if diagnostics.len() > before {
        return None;
    }
    Some(VideoRecord {
        video_id: raw.video_id.clone(),
        frame_count: raw.frame_count as u64,
        shots: raw
            .shots
            .iter()
            .map(|s| ShotRecord {
                shot_id: s.shot_id.clone(),
                start_frame: s.start_frame as u64,
                end_frame: s.end_frame as u64,
                caption: s.caption.clone(),
                asr: s.asr.clone(),
            })
            .collect(),
        summary: raw.summary.clone(),
        asr_full: raw.asr_full.clone(),
        source_path: raw.source_path.clone(),
    })
}

/// Loads a manifest document. Videos that parse but violate record
/// invariants land in [`ManifestLoad::diagnostics`] instead of the video
/// list; an unreadable file or malformed document is an error.
pub fn load_manifest(path: &Path) -> Result<ManifestLoad, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let raw: RawManifest = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(DatasetError::SchemaVersion {
            path: path.to_path_buf(),
            found: raw.schema_version,
        });
    }

    let mut load = ManifestLoad::default();
    let mut seen_ids = HashSet::new();
    for raw_video in &raw.videos {
        if !seen_ids.insert(raw_video.video_id.clone()) {
            load.diagnostics.push(LoadDiagnostic {
                video_id: raw_video.video_id.clone(),
                shot_id: None,
                reason: LoadViolation::DuplicateVideoId,
            });
            continue;
        }
        if let Some(video) = validate_video(raw_video, &mut load.diagnostics) {
            load.videos.push(video);
        }
    }
    Ok(load)
}

/// Serializes records back into a manifest document.
pub fn write_manifest(videos: &[VideoRecord], path: &Path) -> Result<(), DatasetError> {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        videos: &'a [VideoRecord],
    }
    let doc = Doc {
        schema_version: MANIFEST_SCHEMA_VERSION,
        videos,
    };
    let text = serde_json::to_string_pretty(&doc).expect("manifest records always serialize");
    fs::write(path, text).map_err(io_err(path))
}

fn present(text: &Option<String>) -> Option<&str> {
    text.as_deref().filter(|t| !t.trim().is_empty())
}

/// Segments videos into per-shot caption entries plus one full-video
/// summary entry per video. Shots without captions are skipped here (the
/// corruption filter reports them). Entries stay grouped by video in input
/// order: shots by start frame, the full-video entry last.
pub fn segment_shots(records: &[VideoRecord]) -> Vec<ShotEntry> {
    let mut entries = Vec::new();
    for video in records {
        let mut shots: Vec<&ShotRecord> = video.shots.iter().collect();
        shots.sort_by_key(|shot| shot.start_frame);
        for shot in shots {
            if let Some(caption) = present(&shot.caption) {
                entries.push(ShotEntry {
                    entry_id: ShotEntry::entry_id_for(&video.video_id, &shot.shot_id),
                    scope: Scope::Shot,
                    span: (shot.start_frame, shot.end_frame),
                    target_text: caption.to_string(),
                    asr_text: shot.asr.clone(),
                    video_id: video.video_id.clone(),
                });
            }
        }
        if let Some(summary) = present(&video.summary) {
            entries.push(ShotEntry {
                entry_id: ShotEntry::full_video_entry_id(&video.video_id),
                scope: Scope::FullVideo,
                span: (0, video.frame_count),
                target_text: summary.to_string(),
                asr_text: video.asr_full.clone(),
                video_id: video.video_id.clone(),
            });
        }
    }
    entries
}

/// Why a shot or video was rejected by the corruption filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionReason {
    EmptySpan,
    OutOfBounds,
    MissingCaption,
    CaptionTooShort,
    NoFrames,
    NoValidShots,
    DecodeFailure,
}

impl std::fmt::Display for CorruptionReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            CorruptionReason::EmptySpan => "empty_span",
            CorruptionReason::OutOfBounds => "out_of_bounds",
            CorruptionReason::MissingCaption => "missing_caption",
            CorruptionReason::CaptionTooShort => "caption_too_short",
            CorruptionReason::NoFrames => "no_frames",
            CorruptionReason::NoValidShots => "no_valid_shots",
            CorruptionReason::DecodeFailure => "decode_failure",
        };
        write!(f, "{name}")
    }
}

/// A rejected shot (`{video_id}_{shot_id}`) or video (`{video_id}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: CorruptionReason,
}

/// Corruption-filter settings.
#[derive(Debug, Clone)]
pub struct FilterOptions {
    /// Captions with fewer whitespace tokens than this are rejected.
    pub min_caption_tokens: usize,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            min_caption_tokens: 1,
        }
    }
}

fn shot_rejection(
    video: &VideoRecord,
    shot: &ShotRecord,
    options: &FilterOptions,
) -> Option<CorruptionReason> {
    if shot.end_frame <= shot.start_frame {
        return Some(CorruptionReason::EmptySpan);
    }
    if shot.end_frame > video.frame_count {
        return Some(CorruptionReason::OutOfBounds);
    }
    let caption = match present(&shot.caption) {
        None => return Some(CorruptionReason::MissingCaption),
        Some(caption) => caption,
    };
    if prompting::token_count(caption) < options.min_caption_tokens {
        return Some(CorruptionReason::CaptionTooShort);
    }
    None
}

/// Splits records into kept videos (carrying only their surviving shots)
/// and rejections. Every input shot lands on exactly one side; filtering
/// the kept side again rejects nothing.
pub fn filter_corrupted(
    records: &[VideoRecord],
    options: &FilterOptions,
) -> (Vec<VideoRecord>, Vec<Rejection>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for video in records {
        let mut surviving = Vec::new();
        for shot in &video.shots {
            match shot_rejection(video, shot, options) {
                Some(reason) => rejected.push(Rejection {
                    id: ShotEntry::entry_id_for(&video.video_id, &shot.shot_id),
                    reason,
                }),
                None => surviving.push(shot.clone()),
            }
        }
        if video.frame_count == 0 {
            // a zero-frame video cannot have surviving shots
            rejected.push(Rejection {
                id: video.video_id.clone(),
                reason: CorruptionReason::NoFrames,
            });
            continue;
        }
        if surviving.is_empty() {
            rejected.push(Rejection {
                id: video.video_id.clone(),
                reason: CorruptionReason::NoValidShots,
            });
            continue;
        }
        kept.push(VideoRecord {
            shots: surviving,
            ..video.clone()
        });
    }
    (kept, rejected)
}

/// Whether a dataset file embeds the ground truth or holds it out.
pub type DatasetMode = PromptMode;

/// One line of a supervised-dialogue dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftLine {
    pub entry_id: String,
    pub scope: Scope,
    pub span: (u64, u64),
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asr: Option<String>,
    /// Eval-mode prompt rendering (ends with the assistant cue).
    pub prompt: String,
    /// Ground truth; present in train mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

/// One line of a references file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub entry_id: String,
    pub reference: String,
}

/// Path of the references file written next to an eval-mode dataset:
/// `name.ext` becomes `name.refs.ext`.
pub fn references_path(dataset_path: &Path) -> PathBuf {
    let stem = dataset_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = dataset_path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    dataset_path.with_file_name(format!("{stem}.refs{ext}"))
}

/// Writes one dialogue object per entry. Train mode embeds the ground truth
/// in each line; eval mode omits it and writes a references file next to
/// the dataset instead. Prompts are budget-enforced when `max_prompt_tokens`
/// is given. Output is byte-deterministic for identical input.
pub fn write_sft_dataset(
    entries: &[ShotEntry],
    mode: DatasetMode,
    path: &Path,
    max_prompt_tokens: Option<usize>,
) -> Result<usize, DatasetError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    let mut references = Vec::new();

    for entry in entries {
        let mut instance = prompting::render_prompt(entry, mode);
        if let Some(budget) = max_prompt_tokens {
            instance =
                prompting::enforce_budget(instance, budget).map_err(|e| DatasetError::Io {
                    path: path.to_path_buf(),
                    source: std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()),
                })?;
        }
        let line = SftLine {
            entry_id: entry.entry_id.clone(),
            scope: entry.scope,
            span: entry.span,
            video_id: entry.video_id.clone(),
            asr: entry.asr_text.clone(),
            prompt: instance.eval_text(),
            // a budget-truncated target may be empty; never resurrect it
            target: match mode {
                PromptMode::Train => Some(instance.target_text().unwrap_or("").to_string()),
                PromptMode::Eval => None,
            },
        };
        serde_json::to_writer(&mut writer, &line).map_err(|e| DatasetError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        writer.write_all(b"\n").map_err(io_err(path))?;
        if mode == PromptMode::Eval {
            references.push(ReferenceLine {
                entry_id: entry.entry_id.clone(),
                reference: entry.target_text.clone(),
            });
        }
    }
    writer.flush().map_err(io_err(path))?;

    if mode == PromptMode::Eval {
        write_references(&references, &references_path(path))?;
    }
    Ok(entries.len())
}

/// Writes a line-delimited references file.
pub fn write_references(references: &[ReferenceLine], path: &Path) -> Result<(), DatasetError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    for line in references {
        serde_json::to_writer(&mut writer, line).map_err(|e| DatasetError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        writer.write_all(b"\n").map_err(io_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

fn parse_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (number, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| DatasetError::Parse {
            path: path.to_path_buf(),
            line: number + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Reads a dataset file back into its lines.
pub fn load_sft_dataset(path: &Path) -> Result<Vec<SftLine>, DatasetError> {
    parse_lines(path)
}

/// Reads a references file, grouping repeated ids into multi-reference
/// entries in first-appearance order.
pub fn load_references(path: &Path) -> Result<Vec<(String, Vec<String>)>, DatasetError> {
    let lines: Vec<ReferenceLine> = parse_lines(path)?;
    let mut order: Vec<String> = Vec::new();
    let mut grouped: std::collections::HashMap<String, Vec<String>> =
        std::collections::HashMap::new();
    for line in lines {
        if !grouped.contains_key(&line.entry_id) {
            order.push(line.entry_id.clone());
        }
        grouped
            .entry(line.entry_id)
            .or_default()
            .push(line.reference);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let refs = grouped.remove(&id).expect("id collected above");
            (id, refs)
        })
        .collect())
}

/// Writes the rejection log: one `{id, reason}` object per line.
pub fn write_rejection_log(
    diagnostics: &[LoadDiagnostic],
    rejections: &[Rejection],
    path: &Path,
) -> Result<(), DatasetError> {
    #[derive(Serialize)]
    struct LogLine {
        id: String,
        reason: String,
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    let mut lines: Vec<LogLine> = Vec::new();
    for diagnostic in diagnostics {
        let id = match &diagnostic.shot_id {
            Some(shot_id) => ShotEntry::entry_id_for(&diagnostic.video_id, shot_id),
            None => diagnostic.video_id.clone(),
        };
        lines.push(LogLine {
            id,
            reason: diagnostic.reason.to_string(),
        });
    }
    for rejection in rejections {
        lines.push(LogLine {
            id: rejection.id.clone(),
            reason: rejection.reason.to_string(),
        });
    }
    for line in &lines {
        serde_json::to_writer(&mut writer, line).map_err(|e| DatasetError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        writer.write_all(b"\n").map_err(io_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shot(id: &str, start: u64, end: u64, caption: Option<&str>) -> ShotRecord {
        ShotRecord {
            shot_id: id.to_string(),
            start_frame: start,
            end_frame: end,
            caption: caption.map(str::to_string),
            asr: None,
        }
    }

    fn video(
        id: &str,
        frame_count: u64,
        shots: Vec<ShotRecord>,
        summary: Option<&str>,
    ) -> VideoRecord {
        VideoRecord {
            video_id: id.to_string(),
            frame_count,
            shots,
            summary: summary.map(str::to_string),
            asr_full: None,
            source_path: None,
        }
    }

    #[test]
    fn manifest_round_trips_through_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let videos = vec![
            video(
                "v1",
                100,
                vec![
                    shot("s1", 0, 40, Some("a dog barks")),
                    shot("s2", 40, 80, Some("the dog rests")),
                    shot("s3", 80, 100, Some("a door closes")),
                ],
                Some("a dog barks then rests"),
            ),
            video(
                "v2",
                60,
                vec![
                    shot("s1", 0, 30, Some("rain falls")),
                    shot("s2", 30, 60, Some("clouds clear")),
                ],
                None,
            ),
        ];
        write_manifest(&videos, &path).unwrap();
        let load = load_manifest(&path).unwrap();
        assert_eq!(load.videos, videos);
        assert!(load.diagnostics.is_empty());
        assert_eq!(load.videos.iter().map(|v| v.shots.len()).sum::<usize>(), 5);
    }

    #[test]
    fn out_of_bounds_shot_diverts_the_video_to_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let videos = vec![video(
            "v1",
            50,
            vec![shot("s1", 0, 80, Some("goes past the end"))],
            None,
        )];
        write_manifest(&videos, &path).unwrap();
        let load = load_manifest(&path).unwrap();
        assert!(load.videos.is_empty());
        assert_eq!(load.diagnostics.len(), 1);
        assert_eq!(load.diagnostics[0].reason, LoadViolation::ShotOutOfBounds);
        assert_eq!(load.diagnostics[0].reason.to_string(), "shot_out_of_bounds");
    }

    #[test]
    fn empty_manifest_loads_to_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, r#"{"schema_version": 1, "videos": []}"#).unwrap();
        let load = load_manifest(&path).unwrap();
        assert!(load.videos.is_empty());
        assert!(load.diagnostics.is_empty());
    }

    #[test]
    fn malformed_document_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, "{\n  \"schema_version\": 1,\n  oops\n}").unwrap();
        match load_manifest(&path) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let missing = Path::new("/nonexistent/manifest.json");
        assert!(matches!(
            load_manifest(missing),
            Err(DatasetError::Io { .. })
        ));
    }

    #[test]
    fn negative_frames_become_diagnostics_not_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        std::fs::write(
            &path,
            r#"{"schema_version": 1, "videos": [
                {"video_id": "v1", "frame_count": 50,
                 "shots": [{"shot_id": "s1", "start_frame": -5, "end_frame": 10, "caption": "x"}]}
            ]}"#,
        )
        .unwrap();
        let load = load_manifest(&path).unwrap();
        assert!(load.videos.is_empty());
        assert_eq!(
            load.diagnostics[0].reason,
            LoadViolation::NegativeFrameIndex
        );
        assert_eq!(load.diagnostics[0].shot_id.as_deref(), Some("s1"));
    }

    #[test]
    fn duplicate_video_ids_keep_the_first_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let videos = vec![
            video("v1", 20, vec![shot("s1", 0, 20, Some("first copy"))], None),
            video("v1", 30, vec![shot("s1", 0, 30, Some("second copy"))], None),
        ];
        write_manifest(&videos, &path).unwrap();
        let load = load_manifest(&path).unwrap();
        assert_eq!(load.videos.len(), 1);
        assert_eq!(load.videos[0].frame_count, 20);
        assert_eq!(load.diagnostics[0].reason, LoadViolation::DuplicateVideoId);
    }

    #[test]
    fn unsupported_schema_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, r#"{"schema_version": 2, "videos": []}"#).unwrap();
        assert!(matches!(
            load_manifest(&path),
            Err(DatasetError::SchemaVersion { found: 2, .. })
        ));
    }

    #[test]
    fn overlapping_shots_are_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let videos = vec![video(
            "v1",
            100,
            vec![
                shot("s1", 0, 50, Some("first")),
                shot("s2", 40, 90, Some("second")),
            ],
            None,
        )];
        write_manifest(&videos, &path).unwrap();
        let load = load_manifest(&path).unwrap();
        assert!(load.videos.is_empty());
        assert_eq!(load.diagnostics[0].reason, LoadViolation::ShotsOverlap);
    }

    #[test]
    fn segmenting_counts_shot_and_summary_entries() {
        let records = vec![video(
            "v1",
            90,
            vec![
                shot("s1", 0, 30, Some("one")),
                shot("s2", 30, 60, Some("two")),
                shot("s3", 60, 90, Some("three")),
            ],
            Some("all three"),
        )];
        let entries = segment_shots(&records);
        assert_eq!(entries.len(), 4);
        assert_eq!(entries[3].entry_id, "v1_FULL");
        assert_eq!(entries[3].scope, Scope::FullVideo);
        assert_eq!(entries[3].span, (0, 90));
    }

    #[test]
    fn segmenting_without_summary_yields_shot_entries_only() {
        let records = vec![video(
            "v1",
            60,
            vec![
                shot("s1", 0, 30, Some("one")),
                shot("s2", 30, 60, Some("two")),
            ],
            None,
        )];
        assert_eq!(segment_shots(&records).len(), 2);
    }

    #[test]
    fn entries_stay_grouped_by_video_in_input_order() {
        let records = vec![
            video(
                "vb",
                20,
                vec![shot("s1", 0, 20, Some("b one"))],
                Some("b sum"),
            ),
            video(
                "va",
                20,
                vec![shot("s1", 0, 20, Some("a one"))],
                Some("a sum"),
            ),
        ];
        let ids: Vec<String> = segment_shots(&records)
            .into_iter()
            .map(|e| e.entry_id)
            .collect();
        assert_eq!(ids, vec!["vb_s1", "vb_FULL", "va_s1", "va_FULL"]);
    }

    #[test]
    fn filter_rejects_empty_spans() {
        let records = vec![video(
            "v1",
            20,
            vec![
                shot("s1", 10, 10, Some("caption")),
                shot("s2", 0, 10, Some("ok")),
            ],
            None,
        )];
        let (kept, rejected) = filter_corrupted(&records, &FilterOptions::default());
        assert_eq!(kept[0].shots.len(), 1);
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].id, "v1_s1");
        assert_eq!(rejected[0].reason, CorruptionReason::EmptySpan);
    }

    #[test]
    fn filter_rejects_missing_captions() {
        let records = vec![video(
            "v1",
            20,
            vec![
                shot("s1", 0, 10, Some("")),
                shot("s2", 10, 20, Some("fine")),
            ],
            None,
        )];
        let (_, rejected) = filter_corrupted(&records, &FilterOptions::default());
        assert_eq!(rejected[0].reason, CorruptionReason::MissingCaption);
    }

    #[test]
    fn filter_rejects_video_without_valid_shots() {
        let records = vec![video(
            "v1",
            20,
            vec![shot("s1", 0, 10, None), shot("s2", 10, 20, None)],
            None,
        )];
        let (kept, rejected) = filter_corrupted(&records, &FilterOptions::default());
        assert!(kept.is_empty());
        assert_eq!(rejected.len(), 3);
        assert_eq!(rejected[2].id, "v1");
        assert_eq!(rejected[2].reason, CorruptionReason::NoValidShots);
    }

    #[test]
    fn filter_rejects_zero_frame_videos() {
        let records = vec![video("v1", 0, vec![shot("s1", 0, 5, Some("x"))], None)];
        let (kept, rejected) = filter_corrupted(&records, &FilterOptions::default());
        assert!(kept.is_empty());
        assert!(rejected
            .iter()
            .any(|r| r.id == "v1" && r.reason == CorruptionReason::NoFrames));
    }

    #[test]
    fn filter_partitions_and_is_idempotent() {
        let records = vec![
            video(
                "v1",
                40,
                vec![
                    shot("s1", 0, 10, Some("good caption")),
                    shot("s2", 10, 10, Some("empty span")),
                    shot("s3", 10, 50, Some("out of bounds")),
                    shot("s4", 20, 30, None),
                ],
                Some("summary"),
            ),
            video("v2", 30, vec![shot("s1", 0, 30, Some("fine"))], None),
        ];
        let total_shots: usize = records.iter().map(|v| v.shots.len()).sum();
        let (kept, rejected) = filter_corrupted(&records, &FilterOptions::default());
        let kept_shots: usize = kept.iter().map(|v| v.shots.len()).sum();
        let rejected_shots = rejected.iter().filter(|r| r.id.contains("_s")).count();
        assert_eq!(kept_shots + rejected_shots, total_shots);

        let (again, rejected_again) = filter_corrupted(&kept, &FilterOptions::default());
        assert_eq!(again, kept);
        assert!(rejected_again.is_empty());
    }

    #[test]
    fn min_caption_tokens_is_configurable() {
        let records = vec![video(
            "v1",
            20,
            vec![
                shot("s1", 0, 10, Some("short")),
                shot("s2", 10, 20, Some("two words")),
            ],
            None,
        )];
        let options = FilterOptions {
            min_caption_tokens: 2,
        };
        let (kept, rejected) = filter_corrupted(&records, &options);
        assert_eq!(kept[0].shots.len(), 1);
        assert_eq!(rejected[0].reason, CorruptionReason::CaptionTooShort);
    }

    fn sample_entries() -> Vec<ShotEntry> {
        let records = vec![video(
            "v1",
            60,
            vec![
                shot("s1", 0, 20, Some("a cat sits")),
                shot("s2", 20, 40, Some("the cat jumps")),
                shot("s3", 40, 60, Some("the cat lands")),
            ],
            Some("a cat sits jumps and lands"),
        )];
        segment_shots(&records)
    }

    #[test]
    fn train_mode_embeds_targets() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sft_train.jsonl");
        let entries = sample_entries();
        let count = write_sft_dataset(&entries, DatasetMode::Train, &path, None).unwrap();
        assert_eq!(count, 4);
        let lines = load_sft_dataset(&path).unwrap();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.target.is_some()));
        assert!(!references_path(&path).exists());
    }

    #[test]
    fn eval_mode_holds_targets_out_into_references() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sft_eval.jsonl");
        let entries = sample_entries();
        write_sft_dataset(&entries, DatasetMode::Eval, &path, None).unwrap();
        let lines = load_sft_dataset(&path).unwrap();
        assert!(lines.iter().all(|l| l.target.is_none()));
        let refs = load_references(&references_path(&path)).unwrap();
        assert_eq!(refs.len(), 4);
        assert_eq!(refs[0].1, vec!["a cat sits".to_string()]);
    }

    #[test]
    fn tight_budget_truncates_embedded_targets() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tight.jsonl");
        let entries = sample_entries();
        // scaffold is 40 tokens; allow two tokens of ground truth
        write_sft_dataset(&entries[..1], DatasetMode::Train, &path, Some(42)).unwrap();
        let lines = load_sft_dataset(&path).unwrap();
        assert_eq!(lines[0].target.as_deref(), Some("a cat"));
        write_sft_dataset(&entries[..1], DatasetMode::Train, &path, Some(40)).unwrap();
        let lines = load_sft_dataset(&path).unwrap();
        assert_eq!(lines[0].target.as_deref(), Some(""));
    }

    #[test]
    fn zero_entries_write_an_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        let count = write_sft_dataset(&[], DatasetMode::Train, &path, None).unwrap();
        assert_eq!(count, 0);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn dataset_write_is_byte_deterministic_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let entries = sample_entries();
        write_sft_dataset(&entries, DatasetMode::Train, &a, Some(3072)).unwrap();
        write_sft_dataset(&entries, DatasetMode::Train, &b, Some(3072)).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

        let lines = load_sft_dataset(&a).unwrap();
        for (line, entry) in lines.iter().zip(&entries) {
            assert_eq!(line.entry_id, entry.entry_id);
            assert_eq!(line.span, entry.span);
            assert_eq!(line.target.as_deref(), Some(entry.target_text.as_str()));
            assert_eq!(line.asr, entry.asr_text);
        }
    }
}
