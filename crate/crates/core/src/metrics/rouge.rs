//! ROUGE-L: longest-common-subsequence F-measure.

use super::{CorpusPair, MetricsError, TokenizedCaption};

/// Recall weight in the ROUGE-L F-measure (captioning-toolkit convention).
pub const ROUGE_L_BETA: f64 = 1.2;

pub(crate) fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Raw ROUGE-L for one candidate/reference pair.
pub fn rouge_l_item(candidate: &TokenizedCaption, reference: &TokenizedCaption) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&candidate.tokens, &reference.tokens) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let recall = lcs / reference.len() as f64;
    let precision = lcs / candidate.len() as f64;
    let beta_sq = ROUGE_L_BETA * ROUGE_L_BETA;
    ((1.0 + beta_sq) * recall * precision) / (recall + beta_sq * precision)
}

/// Per-item raw scores, taking the best reference for each item.
pub fn rouge_l_items(corpus: &CorpusPair) -> Vec<f64> {
    corpus
        .items
        .iter()
        .map(|item| {
            item.references
                .iter()
                .map(|r| rouge_l_item(&item.candidate, r))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Corpus raw score: arithmetic mean of the per-item values.
pub fn rouge_l_corpus(corpus: &CorpusPair) -> Result<f64, MetricsError> {
    if corpus.items.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let items = rouge_l_items(corpus);
    Ok(items.iter().sum::<f64>() / items.len() as f64)
}
