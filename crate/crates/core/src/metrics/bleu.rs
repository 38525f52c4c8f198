//! Corpus-level BLEU@4 with per-item clipping and no smoothing.

use std::collections::HashMap;

use super::{CorpusPair, MetricsError};

const MAX_ORDER: usize = 4;

/// Counts of n-grams of a fixed order, keyed by the token window.
fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Reference length closest to the candidate length, ties to the shorter.
fn closest_reference_len(candidate_len: usize, reference_lens: &[usize]) -> usize {
    reference_lens
        .iter()
        .copied()
        .min_by_key(|&len| (len.abs_diff(candidate_len), len))
        .expect("corpus items always carry at least one reference")
}

/// Corpus BLEU@4: clipped modified precisions, geometric mean, brevity
/// penalty from total candidate length vs. total closest-reference length.
/// Any vanishing precision sends the whole score to zero.
pub fn bleu4_corpus(corpus: &CorpusPair) -> Result<f64, MetricsError> {
    if corpus.items.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }

    let mut matched = [0u64; MAX_ORDER];
    let mut total = [0u64; MAX_ORDER];
    let mut candidate_len_sum = 0u64;
    let mut reference_len_sum = 0u64;

    for item in &corpus.items {
        let cand = &item.candidate.tokens;
        let ref_lens: Vec<usize> = item.references.iter().map(|r| r.len()).collect();
        candidate_len_sum += cand.len() as u64;
        reference_len_sum += closest_reference_len(cand.len(), &ref_lens) as u64;

        for n in 1..=MAX_ORDER {
            let cand_counts = ngram_counts(cand, n);
            let mut max_ref_counts: HashMap<&[String], u64> = HashMap::new();
            for reference in &item.references {
                for (gram, count) in ngram_counts(&reference.tokens, n) {
                    let slot = max_ref_counts.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            for (gram, count) in &cand_counts {
                let clip = max_ref_counts.get(gram).copied().unwrap_or(0);
                matched[n - 1] += (*count).min(clip);
            }
            total[n - 1] += cand_counts.values().sum::<u64>();
        }
    }

    if candidate_len_sum == 0 {
        return Ok(0.0);
    }
    let mut log_precision_sum = 0.0;
    for n in 0..MAX_ORDER {
        if matched[n] == 0 || total[n] == 0 {
            return Ok(0.0);
        }
        log_precision_sum += (matched[n] as f64 / total[n] as f64).ln() / MAX_ORDER as f64;
    }
    let brevity_penalty = if candidate_len_sum > reference_len_sum {
        1.0
    } else {
        (1.0 - reference_len_sum as f64 / candidate_len_sum as f64).exp()
    };
    Ok(brevity_penalty * log_precision_sum.exp())
}

#[cfg(test)]
mod tests {
    use super::super::{normalize_tokenize, CorpusItem, CorpusPair};
    use super::*;

    fn corpus(pairs: &[(&str, &[&str])]) -> CorpusPair {
        let items = pairs
            .iter()
            .enumerate()
            .map(|(i, (cand, refs))| CorpusItem {
                entry_id: format!("e{i}"),
                candidate: normalize_tokenize(cand),
                references: refs.iter().map(|r| normalize_tokenize(r)).collect(),
            })
            .collect();
        CorpusPair::new(items).unwrap()
    }

    #[test]
    fn identical_sentences_score_one() {
        let c = corpus(&[("a b c d e", &["a b c d e"])]);
        assert_eq!(bleu4_corpus(&c).unwrap(), 1.0);
    }

    #[test]
    fn no_common_fourgram_scores_zero() {
        let c = corpus(&[("the the the the", &["the cat"])]);
        assert_eq!(bleu4_corpus(&c).unwrap(), 0.0);
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        let c = corpus(&[("a b c d", &["a b c d e"])]);
        let score = bleu4_corpus(&c).unwrap();
        assert!((score - (-0.25f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let c = CorpusPair::new(Vec::new()).unwrap();
        assert!(matches!(bleu4_corpus(&c), Err(MetricsError::EmptyCorpus)));
    }

    #[test]
    fn empty_candidate_scores_zero() {
        let c = corpus(&[("", &["a b c d e"])]);
        assert_eq!(bleu4_corpus(&c).unwrap(), 0.0);
    }

    #[test]
    fn clipping_caps_repeated_unigrams() {
        // Candidate repeats "the"; reference has it at most twice.
        let c = corpus(&[("the the the the the the the", &["the cat the mat"])]);
        assert_eq!(bleu4_corpus(&c).unwrap(), 0.0); // no matching bigram
    }
}
