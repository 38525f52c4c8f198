//! CIDEr-D: TF-IDF n-gram cosine consensus with count clipping and a
//! gaussian length penalty.
//!
//! Ordered maps keep float summation order fixed, so repeated runs produce
//! bit-identical scores.

use std::collections::{BTreeMap, BTreeSet};

use super::{CorpusPair, MetricsError};

/// Width of the gaussian length penalty, in tokens.
pub const CIDER_SIGMA: f64 = 6.0;

const MAX_ORDER: usize = 4;

/// Joined-token key for an n-gram window. Tokens never contain whitespace,
/// so a space separator is unambiguous.
fn gram_key(window: &[String]) -> String {
    window.join(" ")
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(gram_key(window)).or_insert(0.0) += 1.0;
        }
    }
    counts
}

/// Per-item raw CIDEr-D scores. Document frequencies count the items whose
/// reference set contains each n-gram, so the corpus needs at least two
/// items for the statistic to be meaningful.
pub fn cider_d_items(corpus: &CorpusPair) -> Result<Vec<f64>, MetricsError> {
    let num_items = corpus.items.len();
    if num_items < 2 {
        return Err(MetricsError::TooFewItems {
            needed: 2,
            got: num_items,
        });
    }

    // document frequency over reference sets, one table per order
    let mut df: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); MAX_ORDER];
    for item in &corpus.items {
        for n in 1..=MAX_ORDER {
            let mut seen = BTreeSet::new();
            for reference in &item.references {
                if reference.len() >= n {
                    for window in reference.tokens.windows(n) {
                        seen.insert(gram_key(window));
                    }
                }
            }
            for gram in seen {
                *df[n - 1].entry(gram).or_insert(0.0) += 1.0;
            }
        }
    }
    let idf = |n: usize, gram: &str| -> f64 {
        let freq = df[n - 1].get(gram).copied().unwrap_or(0.0).max(1.0);
        (num_items as f64 / freq).ln()
    };

    let mut scores = Vec::with_capacity(num_items);
    for item in &corpus.items {
        let cand_len = item.candidate.len() as f64;
        let mut sim_total = 0.0;
        for n in 1..=MAX_ORDER {
            let cand_counts = ngram_counts(&item.candidate.tokens, n);
            let cand_norm = cand_counts
                .iter()
                .map(|(g, c)| (c * idf(n, g)).powi(2))
                .sum::<f64>()
                .sqrt();
            for reference in &item.references {
                let ref_counts = ngram_counts(&reference.tokens, n);
                let ref_norm = ref_counts
                    .iter()
                    .map(|(g, c)| (c * idf(n, g)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if cand_norm == 0.0 || ref_norm == 0.0 {
                    continue;
                }
                let mut dot = 0.0;
                for (gram, cand_count) in &cand_counts {
                    if let Some(ref_count) = ref_counts.get(gram) {
                        let weight = idf(n, gram);
                        dot += cand_count.min(*ref_count) * ref_count * weight * weight;
                    }
                }
                let delta = cand_len - reference.len() as f64;
                let length_penalty = (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
                sim_total += dot / (cand_norm * ref_norm) * length_penalty;
            }
        }
        scores.push(sim_total / (MAX_ORDER as f64 * item.references.len() as f64));
    }
    Ok(scores)
}

/// Corpus raw score: arithmetic mean of the per-item values.
pub fn cider_d_corpus(corpus: &CorpusPair) -> Result<f64, MetricsError> {
    let items = cider_d_items(corpus)?;
    Ok(items.iter().sum::<f64>() / items.len() as f64)
}
