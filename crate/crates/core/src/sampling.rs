//! Deterministic frame-index plans and external frame extraction.
//!
//! Two sampling methods cover a span `[start, end)`: centered uniform
//! spacing and head-tail sampling, which draws half of the budget from each
//! half of the span with a seeded PRNG. Plans always contain exactly
//! `n_frames` indices, repeating frames when the span is shorter than the
//! budget.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Scope, ShotEntry};

/// Spans longer than this are sampled by rejection instead of materializing
/// the index pool.
const MATERIALIZE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("invalid span: start {start} must be below end {end}")]
    InvalidSpan { start: u64, end: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decoder configuration error: {0}")]
    Configuration(String),

    #[error("frame {frame_index} failed to decode: {detail}")]
    DecodeFailure { frame_index: u64, detail: String },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// How frame indices are drawn from a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    Uniform,
    HeadTail,
}

impl std::fmt::Display for SamplingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplingMethod::Uniform => write!(f, "uniform"),
            SamplingMethod::HeadTail => write!(f, "head_tail"),
        }
    }
}

/// A deterministic list of frame indices for one entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePlan {
    /// Entry the plan belongs to; empty for plans built from a bare span.
    pub entry_id: String,
    pub scope: Scope,
    pub method: SamplingMethod,
    pub n_frames: usize,
    /// Sorted, always exactly `n_frames` long, every index in `[start, end)`.
    pub indices: Vec<u64>,
    /// Only head-tail sampling consumes the seed.
    pub seed: u64,
}

fn check_span(start: u64, end: u64, n: usize) -> Result<(), SamplingError> {
    if start >= end {
        return Err(SamplingError::InvalidSpan { start, end });
    }
    if n == 0 {
        return Err(SamplingError::InvalidArgument(
            "frame count must be at least 1".to_string(),
        ));
    }
    Ok(())
}

/// Centered uniform sampling: `index_k = start + floor((k + 0.5)·len/n)`.
/// Seed-independent; injective whenever `n ≤ end − start`.
pub fn uniform_plan(start: u64, end: u64, n: usize) -> Result<FramePlan, SamplingError> {
    check_span(start, end, n)?;
    let len = (end - start) as u128;
    let indices = (0..n as u128)
        .map(|k| start + ((2 * k + 1) * len / (2 * n as u128)) as u64)
        .collect();
    Ok(FramePlan {
        entry_id: String::new(),
        scope: Scope::Shot,
        method: SamplingMethod::Uniform,
        n_frames: n,
        indices,
        seed: 0,
    })
}

/// Draws `count` indices from `[lo, hi)`: without replacement while the
/// range has enough frames, with replacement otherwise.
fn draw(rng: &mut ChaCha8Rng, lo: u64, hi: u64, count: usize, out: &mut Vec<u64>) {
    let size = hi - lo;
    if count == 0 {
        return;
    }
    if (count as u64) > size {
        for _ in 0..count {
            out.push(lo + rng.random_range(0..size));
        }
    } else if size <= MATERIALIZE_LIMIT {
        let mut pool: Vec<u64> = (lo..hi).collect();
        for i in 0..count {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
            out.push(pool[i]);
        }
    } else {
        let mut seen = HashSet::with_capacity(count);
        while seen.len() < count {
            let candidate = lo + rng.random_range(0..size);
            if seen.insert(candidate) {
                out.push(candidate);
            }
        }
    }
}

/// Head-tail sampling: `ceil(n/2)` indices from `[start, mid)` and
/// `floor(n/2)` from `[mid, end)`, seeded and sorted. A span of length one
/// has an empty head, in which case everything comes from the tail.
pub fn head_tail_plan(
    start: u64,
    end: u64,
    n: usize,
    seed: u64,
) -> Result<FramePlan, SamplingError> {
    check_span(start, end, n)?;
    let mid = start + (end - start) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Vec::with_capacity(n);
    if mid == start {
        draw(&mut rng, mid, end, n, &mut indices);
    } else {
        let head_count = n.div_ceil(2);
        draw(&mut rng, start, mid, head_count, &mut indices);
        draw(&mut rng, mid, end, n - head_count, &mut indices);
    }
    indices.sort_unstable();
    Ok(FramePlan {
        entry_id: String::new(),
        scope: Scope::Shot,
        method: SamplingMethod::HeadTail,
        n_frames: n,
        indices,
        seed,
    })
}

/// Plans frames for an entry: shot entries use the shot span, full-video
/// entries the whole video.
pub fn plan_for_entry(
    entry: &ShotEntry,
    method: SamplingMethod,
    n: usize,
    seed: u64,
) -> Result<FramePlan, SamplingError> {
    let (start, end) = entry.span;
    let mut plan = match method {
        SamplingMethod::Uniform => uniform_plan(start, end, n)?,
        SamplingMethod::HeadTail => head_tail_plan(start, end, n, seed)?,
    };
    plan.entry_id = entry.entry_id.clone();
    plan.scope = entry.scope;
    plan.seed = seed;
    Ok(plan)
}

/// Name of the frame file an extraction produces for one index.
pub fn frame_file_name(entry_id: &str, index: u64) -> String {
    format!("{entry_id}_{index:06}.img")
}

/// Runs the external decoder once per distinct index and returns the frame
/// paths in plan order (duplicate indices map to the same file).
///
/// The command template must contain `{video}`, `{frame_index}`, and `{out}`
/// placeholders; it is split on whitespace, so template arguments cannot
/// contain spaces. A missing decoder binary is a configuration error, a
/// nonzero exit is a per-frame decode failure.
pub fn extract_frames(
    plan: &FramePlan,
    decoder_command_template: &str,
    video_path: &Path,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, SamplingError> {
    for placeholder in ["{video}", "{frame_index}", "{out}"] {
        if !decoder_command_template.contains(placeholder) {
            return Err(SamplingError::Configuration(format!(
                "decoder command template is missing the {placeholder} placeholder"
            )));
        }
    }
    let argv: Vec<&str> = decoder_command_template.split_whitespace().collect();
    if argv.is_empty() {
        return Err(SamplingError::Configuration(
            "decoder command template is empty".to_string(),
        ));
    }

    std::fs::create_dir_all(out_dir).map_err(|source| SamplingError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut distinct: Vec<u64> = plan.indices.clone();
    distinct.sort_unstable();
    distinct.dedup();

    for &index in &distinct {
        let out_path = out_dir.join(frame_file_name(&plan.entry_id, index));
        let substituted: Vec<String> = argv
            .iter()
            .map(|arg| {
                arg.replace("{video}", &video_path.to_string_lossy())
                    .replace("{frame_index}", &index.to_string())
                    .replace("{out}", &out_path.to_string_lossy())
            })
            .collect();
        let status = Command::new(&substituted[0])
            .args(&substituted[1..])
            .status()
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::NotFound {
                    SamplingError::Configuration(format!(
                        "decoder binary {} not found",
                        substituted[0]
                    ))
                } else {
                    SamplingError::Io {
                        path: PathBuf::from(&substituted[0]),
                        source: e,
                    }
                }
            })?;
        if !status.success() {
            return Err(SamplingError::DecodeFailure {
                frame_index: index,
                detail: format!("decoder exited with {status}"),
            });
        }
    }

    Ok(plan
        .indices
        .iter()
        .map(|&index| out_dir.join(frame_file_name(&plan.entry_id, index)))
        .collect())
}
