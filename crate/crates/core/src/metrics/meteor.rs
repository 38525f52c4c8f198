//! METEOR with exact and stem matching stages (no synonym dictionary).

use super::stem::porter_stem;
use super::{CorpusPair, MetricsError, TokenizedCaption};

pub(crate) const METEOR_ALPHA: f64 = 0.9;
pub(crate) const METEOR_BETA: f64 = 3.0;
pub(crate) const METEOR_GAMMA: f64 = 0.5;

/// Greedy two-stage alignment: exact token matches first, stem matches among
/// the leftovers. Each candidate token pairs with at most one reference
/// token, taking the leftmost unmatched partner. Pairs come back sorted by
/// candidate position.
fn align(candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut ref_used = vec![false; reference.len()];
    let mut cand_used = vec![false; candidate.len()];
    let mut pairs = Vec::new();

    for (i, token) in candidate.iter().enumerate() {
        let hit = reference
            .iter()
            .enumerate()
            .find(|(j, r)| !ref_used[*j] && *r == token)
            .map(|(j, _)| j);
        if let Some(j) = hit {
            ref_used[j] = true;
            cand_used[i] = true;
            pairs.push((i, j));
        }
    }

    let ref_stems: Vec<String> = reference.iter().map(|t| porter_stem(t)).collect();
    for (i, token) in candidate.iter().enumerate() {
        if cand_used[i] {
            continue;
        }
        let stem = porter_stem(token);
        let hit = ref_stems
            .iter()
            .enumerate()
            .find(|(j, s)| !ref_used[*j] && **s == stem)
            .map(|(j, _)| j);
        if let Some(j) = hit {
            ref_used[j] = true;
            pairs.push((i, j));
        }
    }

    pairs.sort_unstable();
    pairs
}

/// Minimal grouping of the alignment into contiguous in-order runs: a new
/// chunk starts whenever the next pair does not advance both positions by
/// exactly one.
fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    for (k, pair) in pairs.iter().enumerate() {
        if k == 0 || !(pair.0 == pairs[k - 1].0 + 1 && pair.1 == pairs[k - 1].1 + 1) {
            chunks += 1;
        }
    }
    chunks
}

/// Raw METEOR for one candidate/reference pair.
pub fn meteor_item(candidate: &TokenizedCaption, reference: &TokenizedCaption) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let pairs = align(&candidate.tokens, &reference.tokens);
    let matches = pairs.len() as f64;
    if matches == 0.0 {
        return 0.0;
    }
    let precision = matches / candidate.len() as f64;
    let recall = matches / reference.len() as f64;
    let f_mean = (precision * recall) / (METEOR_ALPHA * precision + (1.0 - METEOR_ALPHA) * recall);
    let chunks = count_chunks(&pairs) as f64;
    let penalty = METEOR_GAMMA * (chunks / matches).powf(METEOR_BETA);
    f_mean * (1.0 - penalty)
}

/// Per-item raw scores, taking the best reference for each item.
pub fn meteor_items(corpus: &CorpusPair) -> Vec<f64> {
    corpus
        .items
        .iter()
        .map(|item| {
            item.references
                .iter()
                .map(|r| meteor_item(&item.candidate, r))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Corpus raw score: arithmetic mean of the per-item values.
pub fn meteor_corpus(corpus: &CorpusPair) -> Result<f64, MetricsError> {
    if corpus.items.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let items = meteor_items(corpus);
    Ok(items.iter().sum::<f64>() / items.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::super::normalize_tokenize;
    use super::*;

    #[test]
    fn identical_four_token_captions() {
        let cap = normalize_tokenize("a dog chases birds");
        // m = 4, chunks = 1, penalty = 0.5 / 64
        assert!((meteor_item(&cap, &cap) - 0.9921875).abs() < 1e-12);
    }

    #[test]
    fn half_match_single_chunk() {
        let cand = normalize_tokenize("the cat");
        let reference = normalize_tokenize("the dog");
        assert_eq!(meteor_item(&cand, &reference), 0.25);
    }

    #[test]
    fn disjoint_without_stem_matches_scores_zero() {
        let cand = normalize_tokenize("alpha beta");
        let reference = normalize_tokenize("gamma delta");
        assert_eq!(meteor_item(&cand, &reference), 0.0);
    }

    #[test]
    fn stem_stage_matches_inflected_forms() {
        let cand = normalize_tokenize("running");
        let reference = normalize_tokenize("runs");
        // one stem match out of one token each
        assert!(meteor_item(&cand, &reference) > 0.0);
    }

    #[test]
    fn crossed_matches_split_chunks() {
        let pairs = vec![(0, 1), (1, 0)];
        assert_eq!(count_chunks(&pairs), 2);
        let pairs = vec![(0, 0), (1, 1), (2, 2)];
        assert_eq!(count_chunks(&pairs), 1);
        let pairs = vec![(0, 0), (2, 1)];
        assert_eq!(count_chunks(&pairs), 2);
    }
}
