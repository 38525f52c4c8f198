//! Shot-level video captioning toolkit.
//!
//! The crate covers the non-model surface of a shot-level captioning and
//! summarization pipeline:
//!
//! - [`dataset`] — manifest loading, shot segmentation, corruption filtering,
//!   and supervised-dialogue dataset files,
//! - [`sampling`] — deterministic frame-index plans (uniform and head-tail)
//!   and frame materialization through an external decoder,
//! - [`prompting`] — the fixed instruction template with train/eval modes and
//!   a token budget,
//! - [`decoding`] — temperature scaling, nucleus filtering, no-repeat-ngram
//!   masking, and a deterministic mock generator,
//! - [`metrics`] — corpus-level BLEU@4, ROUGE-L, METEOR, and CIDEr-D,
//! - [`harness`] — end-to-end orchestration over pluggable generation
//!   backends with report emission.

pub mod dataset;
pub mod decoding;
pub mod harness;
pub mod metrics;
pub mod prompting;
pub mod sampling;

pub use dataset::{Scope, ShotEntry, ShotRecord, VideoRecord};
pub use decoding::GenerationConfig;
pub use harness::{BackendDescriptor, BackendKind, RunManifest};
pub use metrics::{MetricReport, Task};
pub use prompting::PromptMode;
pub use sampling::{FramePlan, SamplingMethod};
