//! Report assembly: id alignment, the four corpus scores, and per-item
//! diagnostics on the reported (×100) scale.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{
    bleu4_corpus, cider_d_items, meteor_items, normalize_tokenize, rouge_l_items, CorpusItem,
    CorpusPair, MetricsError,
};

/// Evaluation task; selects which entries a run touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Captioning,
    Summarization,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Captioning => write!(f, "captioning"),
            Task::Summarization => write!(f, "summarization"),
        }
    }
}

/// Per-entry diagnostics, on the same ×100 scale as the corpus scores.
/// BLEU is corpus-only and has no per-item value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerItemScores {
    pub entry_id: String,
    pub rouge_l: f64,
    pub meteor: f64,
    pub cider_d: f64,
}

/// A generation failure attached to a report for the table footer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub entry_id: String,
    pub reason: String,
}

/// Corpus scores for one task, with provenance metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: Task,
    /// Row label for the rendered table.
    pub model: String,
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider_d: f64,
    #[serde(default)]
    pub per_item: Vec<PerItemScores>,
    #[serde(default)]
    pub failures: Vec<EntryFailure>,
    pub config_digest: String,
}

fn duplicate_ids<'a, I: Iterator<Item = &'a str>>(ids: I) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for id in ids {
        if !seen.insert(id) {
            dups.push(id.to_string());
        }
    }
    dups.sort();
    dups.dedup();
    dups
}

/// Frozen description of the metric variants and the reporting scale.
fn config_digest(items: usize) -> String {
    format!(
        "tokenize=lower+strip+collapse;bleu=corpus4,unsmoothed;rougeL=beta1.2;\
         meteor=exact+porter,alpha0.9,beta3,gamma0.5;ciderD=n1-4,sigma6;scale=x100;items={items}"
    )
}

/// Aligns predictions with references, tokenizes both sides, and computes
/// the four corpus metrics on the ×100 scale.
///
/// Ids must match one-to-one in both directions; offenders are listed in the
/// error. The corpus needs at least two items (CIDEr-D document frequencies
/// are degenerate below that).
pub fn compute_report(
    predictions: &[(String, String)],
    references: &[(String, Vec<String>)],
    task: Task,
) -> Result<MetricReport, MetricsError> {
    let mut duplicates = duplicate_ids(predictions.iter().map(|(id, _)| id.as_str()));
    duplicates.extend(duplicate_ids(references.iter().map(|(id, _)| id.as_str())));
    duplicates.sort();
    duplicates.dedup();

    let pred_ids: HashSet<&str> = predictions.iter().map(|(id, _)| id.as_str()).collect();
    let ref_ids: HashSet<&str> = references.iter().map(|(id, _)| id.as_str()).collect();
    let mut missing: Vec<String> = pred_ids
        .symmetric_difference(&ref_ids)
        .map(|id| id.to_string())
        .collect();
    missing.sort();

    if !missing.is_empty() || !duplicates.is_empty() {
        return Err(MetricsError::Alignment {
            missing,
            duplicates,
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }

    let reference_map: HashMap<&str, &Vec<String>> = references
        .iter()
        .map(|(id, texts)| (id.as_str(), texts))
        .collect();
    let mut ordered: Vec<&(String, String)> = predictions.iter().collect();
    ordered.sort_by(|a, b| a.0.cmp(&b.0));

    let mut items = Vec::with_capacity(ordered.len());
    for (id, text) in ordered {
        let refs = reference_map[id.as_str()];
        if refs.is_empty() {
            return Err(MetricsError::InvalidArgument(format!(
                "entry {id} has an empty reference list"
            )));
        }
        items.push(CorpusItem {
            entry_id: id.clone(),
            candidate: normalize_tokenize(text),
            references: refs.iter().map(|r| normalize_tokenize(r)).collect(),
        });
    }
    let corpus = CorpusPair::new(items)?;

    let bleu = bleu4_corpus(&corpus)?;
    let rouge = rouge_l_items(&corpus);
    let meteor = meteor_items(&corpus);
    let cider = cider_d_items(&corpus)?;
    let count = corpus.items.len() as f64;

    let per_item = corpus
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| PerItemScores {
            entry_id: item.entry_id.clone(),
            rouge_l: rouge[i] * 100.0,
            meteor: meteor[i] * 100.0,
            cider_d: cider[i] * 100.0,
        })
        .collect();

    Ok(MetricReport {
        task,
        model: "model".to_string(),
        bleu4: bleu * 100.0,
        meteor: meteor.iter().sum::<f64>() / count * 100.0,
        rouge_l: rouge.iter().sum::<f64>() / count * 100.0,
        cider_d: cider.iter().sum::<f64>() / count * 100.0,
        per_item,
        failures: Vec::new(),
        config_digest: config_digest(corpus.items.len()),
    })
}
