//! Corpus-level caption metrics: BLEU@4, ROUGE-L, METEOR, and CIDEr-D.
//!
//! All four metrics share one tokenizer ([`normalize_tokenize`]) and operate
//! on a [`CorpusPair`] of candidates and references. Raw scores live in
//! `[0, 1]`; [`compute_report`] reports them on a `×100` scale (a perfect
//! match scores close to 100 on every metric) and records that convention in
//! the report's `config_digest`.

mod bleu;
mod cider;
mod meteor;
mod report;
mod rouge;
mod stem;
mod tokenize;

pub use bleu::bleu4_corpus;
pub use cider::{cider_d_corpus, cider_d_items, CIDER_SIGMA};
pub use meteor::{meteor_corpus, meteor_item, meteor_items};
pub use report::{compute_report, EntryFailure, MetricReport, PerItemScores, Task};
pub use rouge::{rouge_l_corpus, rouge_l_item, rouge_l_items, ROUGE_L_BETA};
pub use stem::porter_stem;
pub use tokenize::{normalize_tokenize, TokenizedCaption, STRIP_CHARS};

use thiserror::Error;

/// Errors raised by metric computation and report assembly.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("corpus has {got} item(s), at least {needed} required")]
    TooFewItems { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("id alignment failed: missing {missing:?}, duplicated {duplicates:?}")]
    Alignment {
        missing: Vec<String>,
        duplicates: Vec<String>,
    },
}

/// One scored unit: a candidate caption with at least one reference.
#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub entry_id: String,
    pub candidate: TokenizedCaption,
    pub references: Vec<TokenizedCaption>,
}

/// A corpus of candidate/reference pairs with unique entry ids.
#[derive(Debug, Clone)]
pub struct CorpusPair {
    pub items: Vec<CorpusItem>,
}

impl CorpusPair {
    /// Builds a corpus, rejecting duplicate entry ids and items without
    /// references.
    pub fn new(items: Vec<CorpusItem>) -> Result<Self, MetricsError> {
        let mut seen = std::collections::HashSet::new();
        let mut duplicates = Vec::new();
        for item in &items {
            if item.references.is_empty() {
                return Err(MetricsError::InvalidArgument(format!(
                    "item {} has no references",
                    item.entry_id
                )));
            }
            if !seen.insert(item.entry_id.clone()) {
                duplicates.push(item.entry_id.clone());
            }
        }
        if !duplicates.is_empty() {
            return Err(MetricsError::Alignment {
                missing: Vec::new(),
                duplicates,
            });
        }
        Ok(Self { items })
    }
}
