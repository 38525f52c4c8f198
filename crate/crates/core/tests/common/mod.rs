//! Shared fixtures and oracles for the integration suites.
//!
//! Each test binary compiles this module independently, so items unused by
//! one binary are still needed by another.
#![allow(dead_code)]

pub mod oracles;

use std::path::{Path, PathBuf};

use shotcap::dataset::{self, FilterOptions, Scope, ShotEntry};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_manifest() -> PathBuf {
    fixtures_dir().join("manifest.json")
}

/// The entry whose renderings are pinned by the golden prompt files.
pub fn golden_entry() -> ShotEntry {
    ShotEntry {
        entry_id: "golden_s1".to_string(),
        scope: Scope::Shot,
        span: (0, 10),
        target_text: "a cat runs".to_string(),
        asr_text: Some("hello".to_string()),
        video_id: "golden".to_string(),
    }
}

/// All entries of the checked-in fixture dataset, post-filter.
pub fn fixture_entries() -> Vec<ShotEntry> {
    let load = dataset::load_manifest(&fixture_manifest()).expect("fixture manifest loads");
    assert!(
        load.diagnostics.is_empty(),
        "fixture manifest must be clean: {:?}",
        load.diagnostics
    );
    let (kept, rejected) = dataset::filter_corrupted(&load.videos, &FilterOptions::default());
    assert!(rejected.is_empty(), "fixture manifest must filter cleanly");
    dataset::segment_shots(&kept)
}
