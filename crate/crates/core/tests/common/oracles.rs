//! Independent brute-force oracles for the metric and decoding checks.
//!
//! These deliberately avoid the library's data structures and algorithms:
//! n-gram statistics use naive window scans over `Vec<String>` keys, LCS
//! uses a full table, METEOR chunks come from an exhaustive grouping
//! search, and CIDEr-D builds its TF-IDF dictionaries directly.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use shotcap::metrics::porter_stem;

/// One corpus item in oracle form.
#[derive(Debug, Clone)]
pub struct OracleItem {
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

fn windows(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n)
        .map(|i| tokens[i..i + n].to_vec())
        .collect()
}

fn count_of(haystack: &[Vec<String>], needle: &[String]) -> u64 {
    haystack
        .iter()
        .filter(|gram| gram.as_slice() == needle)
        .count() as u64
}

pub fn bleu4(items: &[OracleItem]) -> f64 {
    let mut numerator = [0u64; 4];
    let mut denominator = [0u64; 4];
    let mut candidate_total = 0usize;
    let mut reference_total = 0usize;

    for item in items {
        candidate_total += item.candidate.len();
        let mut best_len = usize::MAX;
        let mut best_diff = usize::MAX;
        for reference in &item.references {
            let diff = reference.len().abs_diff(item.candidate.len());
            if diff < best_diff || (diff == best_diff && reference.len() < best_len) {
                best_diff = diff;
                best_len = reference.len();
            }
        }
        reference_total += best_len;

        for n in 1..=4usize {
            let cand_grams = windows(&item.candidate, n);
            denominator[n - 1] += cand_grams.len() as u64;
            let mut distinct: Vec<&Vec<String>> = Vec::new();
            for gram in &cand_grams {
                if !distinct.contains(&gram) {
                    distinct.push(gram);
                }
            }
            for gram in distinct {
                let cand_count = count_of(&cand_grams, gram);
                let ref_max = item
                    .references
                    .iter()
                    .map(|r| count_of(&windows(r, n), gram))
                    .max()
                    .unwrap_or(0);
                numerator[n - 1] += cand_count.min(ref_max);
            }
        }
    }

    if candidate_total == 0 {
        return 0.0;
    }
    let mut product = 1.0;
    for n in 0..4 {
        if numerator[n] == 0 || denominator[n] == 0 {
            return 0.0;
        }
        product *= numerator[n] as f64 / denominator[n] as f64;
    }
    let brevity = if candidate_total > reference_total {
        1.0
    } else {
        (1.0 - reference_total as f64 / candidate_total as f64).exp()
    };
    brevity * product.powf(0.25)
}

pub fn rouge_l(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut table = vec![vec![0usize; reference.len() + 1]; candidate.len() + 1];
    for i in 1..=candidate.len() {
        for j in 1..=reference.len() {
            table[i][j] = if candidate[i - 1] == reference[j - 1] {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    let lcs = table[candidate.len()][reference.len()] as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let recall = lcs / reference.len() as f64;
    let precision = lcs / candidate.len() as f64;
    let beta_sq = 1.2 * 1.2;
    ((1.0 + beta_sq) * recall * precision) / (recall + beta_sq * precision)
}

/// Exhaustive grouping search: the fewest contiguous in-order runs the
/// aligned pairs can be partitioned into.
fn minimal_runs(pairs: &[(usize, usize)]) -> usize {
    fn is_run(pairs: &[(usize, usize)]) -> bool {
        pairs
            .windows(2)
            .all(|w| w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1)
    }
    fn search(pairs: &[(usize, usize)]) -> usize {
        if pairs.is_empty() {
            return 0;
        }
        let mut best = usize::MAX;
        for take in 1..=pairs.len() {
            if !is_run(&pairs[..take]) {
                break;
            }
            best = best.min(1 + search(&pairs[take..]));
        }
        best
    }
    search(pairs)
}

pub fn meteor(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut ref_taken = vec![false; reference.len()];
    let mut cand_taken = vec![false; candidate.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    // stage 1: exact, leftmost-first
    for i in 0..candidate.len() {
        for j in 0..reference.len() {
            if !ref_taken[j] && reference[j] == candidate[i] {
                ref_taken[j] = true;
                cand_taken[i] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    // stage 2: stems among leftovers
    for i in 0..candidate.len() {
        if cand_taken[i] {
            continue;
        }
        for j in 0..reference.len() {
            if !ref_taken[j] && porter_stem(&reference[j]) == porter_stem(&candidate[i]) {
                ref_taken[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    let matches = pairs.len() as f64;
    if matches == 0.0 {
        return 0.0;
    }
    pairs.sort();
    let precision = matches / candidate.len() as f64;
    let recall = matches / reference.len() as f64;
    let f_mean = (precision * recall) / (0.9 * precision + 0.1 * recall);
    let chunks = minimal_runs(&pairs) as f64;
    f_mean * (1.0 - 0.5 * (chunks / matches) * (chunks / matches) * (chunks / matches))
}

pub fn cider_d(items: &[OracleItem]) -> Vec<f64> {
    let total_items = items.len() as f64;
    let mut df: Vec<BTreeMap<Vec<String>, f64>> = vec![BTreeMap::new(); 4];
    for item in items {
        for n in 1..=4usize {
            let mut grams: BTreeSet<Vec<String>> = BTreeSet::new();
            for reference in &item.references {
                for gram in windows(reference, n) {
                    grams.insert(gram);
                }
            }
            for gram in grams {
                *df[n - 1].entry(gram).or_insert(0.0) += 1.0;
            }
        }
    }

    let mut scores = Vec::new();
    for item in items {
        let mut total = 0.0;
        for n in 1..=4usize {
            let idf = |gram: &[String]| -> f64 {
                let freq = df[n - 1].get(gram).copied().unwrap_or(0.0).max(1.0);
                (total_items / freq).ln()
            };
            let cand_grams = windows(&item.candidate, n);
            let mut cand_counts: BTreeMap<Vec<String>, f64> = BTreeMap::new();
            for gram in &cand_grams {
                *cand_counts.entry(gram.clone()).or_insert(0.0) += 1.0;
            }
            let cand_norm = cand_counts
                .iter()
                .map(|(g, c)| (c * idf(g)) * (c * idf(g)))
                .sum::<f64>()
                .sqrt();
            for reference in &item.references {
                let mut ref_counts: BTreeMap<Vec<String>, f64> = BTreeMap::new();
                for gram in windows(reference, n) {
                    *ref_counts.entry(gram).or_insert(0.0) += 1.0;
                }
                let ref_norm = ref_counts
                    .iter()
                    .map(|(g, c)| (c * idf(g)) * (c * idf(g)))
                    .sum::<f64>()
                    .sqrt();
                if cand_norm == 0.0 || ref_norm == 0.0 {
                    continue;
                }
                let mut dot = 0.0;
                for (gram, cand_count) in &cand_counts {
                    if let Some(ref_count) = ref_counts.get(gram) {
                        dot += cand_count.min(*ref_count) * ref_count * idf(gram) * idf(gram);
                    }
                }
                let delta = item.candidate.len() as f64 - reference.len() as f64;
                let penalty = (-(delta * delta) / 72.0).exp();
                total += dot / (cand_norm * ref_norm) * penalty;
            }
        }
        scores.push(total / (4.0 * item.references.len() as f64));
    }
    scores
}

/// Reference nucleus filter: enumerate prefixes of the sorted order and
/// keep the shortest one reaching `p`.
pub fn top_p_reference(probs: &[f64], p: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));

    let mut cutoff = order.len();
    for k in 1..=order.len() {
        let mass: f64 = order[..k].iter().map(|&i| probs[i]).sum();
        if mass >= p {
            cutoff = k;
            break;
        }
    }
    let kept = &order[..cutoff.max(1)];
    let mass: f64 = kept.iter().map(|&i| probs[i]).sum();
    let mut out = vec![0.0; probs.len()];
    for &i in kept {
        out[i] = probs[i] / mass;
    }
    out
}

/// Reference no-repeat-ngram rule: a token is banned when appending it
/// creates an n-gram equal to any window of the existing history.
pub fn banned_reference(history: &[u32], n: usize, vocab: u32) -> HashSet<u32> {
    let mut banned = HashSet::new();
    if n < 1 || history.len() + 1 < n {
        return banned;
    }
    for token in 0..vocab {
        let mut extended = history.to_vec();
        extended.push(token);
        let new_gram = &extended[extended.len() - n..];
        if history.windows(n).any(|window| window == new_gram) {
            banned.insert(token);
        }
    }
    banned
}
