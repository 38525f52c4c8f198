//! Evaluation-time decoding constraints and a deterministic mock generator.
//!
//! The three constraints — temperature scaling, nucleus (top-p) filtering,
//! and no-repeat-ngram masking — are pure functions over token
//! distributions. [`generate_mock`] wires them together over a synthetic
//! vocabulary so the whole pipeline can run without a model: banned tokens
//! are masked first, then the nucleus filter applies, then a seeded PRNG
//! samples.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodingError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Decoding parameters. Defaults mirror the evaluation settings:
/// temperature 0.2, top-p 0.9, no-repeat-ngram size 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub top_p: f64,
    /// 0 disables the constraint.
    pub no_repeat_ngram_size: usize,
    pub max_new_tokens: usize,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            temperature: 0.2,
            top_p: 0.9,
            no_repeat_ngram_size: 3,
            max_new_tokens: 128,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), DecodingError> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(DecodingError::InvalidArgument(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(DecodingError::InvalidArgument(format!(
                "top_p must lie in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_new_tokens == 0 {
            return Err(DecodingError::InvalidArgument(
                "max_new_tokens must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// A probability distribution over a finite vocabulary; sums to one within
/// 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    probs: Vec<f64>,
}

impl TokenDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, DecodingError> {
        if probs.is_empty() {
            return Err(DecodingError::InvalidArgument(
                "distribution must not be empty".to_string(),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(DecodingError::InvalidArgument(
                "probabilities must be finite and non-negative".to_string(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DecodingError::InvalidArgument(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Softmax of `logits / temperature`, computed with max-subtraction.
pub fn temperature_scale(
    logits: &[f64],
    temperature: f64,
) -> Result<TokenDistribution, DecodingError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(DecodingError::InvalidArgument(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if logits.is_empty() {
        return Err(DecodingError::InvalidArgument(
            "logits must not be empty".to_string(),
        ));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(DecodingError::InvalidArgument(
            "logits must all be finite".to_string(),
        ));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .map(|l| ((l - max) / temperature).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    TokenDistribution::new(exps.iter().map(|e| e / sum).collect())
}

/// Nucleus filter: keeps the shortest probability-descending prefix (ties
/// broken by ascending token index) whose cumulative mass reaches `p`,
/// always at least one token, and renormalizes the kept mass.
pub fn top_p_filter(
    dist: &TokenDistribution,
    top_p: f64,
) -> Result<TokenDistribution, DecodingError> {
    if !(top_p > 0.0 && top_p <= 1.0) {
        return Err(DecodingError::InvalidArgument(format!(
            "top_p must lie in (0, 1], got {top_p}"
        )));
    }
    let probs = dist.probs();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .expect("validated probabilities are never NaN")
            .then(a.cmp(&b))
    });

    let mut cumulative = 0.0;
    let mut cutoff = order.len();
    for (rank, &index) in order.iter().enumerate() {
        cumulative += probs[index];
        if cumulative >= top_p {
            cutoff = rank + 1;
            break;
        }
    }

    let kept = &order[..cutoff];
    let mass: f64 = kept.iter().map(|&i| probs[i]).sum();
    let mut filtered = vec![0.0; probs.len()];
    for &i in kept {
        filtered[i] = probs[i] / mass;
    }
    TokenDistribution::new(filtered)
}

/// Tokens that would recreate an n-gram already present in `history` if
/// appended. Histories shorter than `n - 1` ban nothing; `n == 0` means the
/// constraint is disabled.
pub fn no_repeat_ngram_banned(history: &[u32], n: usize) -> HashSet<u32> {
    let mut banned = HashSet::new();
    if n == 0 || n > history.len() {
        return banned;
    }
    let query = &history[history.len() + 1 - n..];
    for window in history.windows(n) {
        if &window[..n - 1] == query {
            banned.insert(window[n - 1]);
        }
    }
    banned
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Maps a u64 to a float in `[0, 1)`.
fn unit_float(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn sample_index(probs: &[f64], draw: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_nonzero = i;
            if draw < cumulative {
                return i;
            }
        }
    }
    last_nonzero
}

/// Deterministic stand-in for a fine-tuned model.
///
/// The vocabulary is the prompt's distinct tokens plus a stop token. Step
/// logits come from a hash of `(prompt digest, step, seed)`; the pipeline is
/// temperature → ngram mask → top-p → seeded sampling, so identical
/// `(prompt, config)` inputs always generate identical text.
pub fn generate_mock(prompt: &str, config: &GenerationConfig) -> Result<String, DecodingError> {
    config.validate()?;
    let mut vocab: Vec<&str> = Vec::new();
    for token in prompt.split_whitespace() {
        if !vocab.contains(&token) {
            vocab.push(token);
        }
    }
    if vocab.is_empty() {
        return Err(DecodingError::InvalidArgument(
            "prompt must contain at least one token".to_string(),
        ));
    }
    let stop_id = vocab.len() as u32;
    let digest = fnv1a(prompt.as_bytes());
    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, digest));
    let mut history: Vec<u32> = Vec::new();

    for step in 0..config.max_new_tokens {
        let state = mix(mix(digest, step as u64), config.seed);
        let logits: Vec<f64> = (0..=vocab.len())
            .map(|i| unit_float(mix(state, i as u64)) * 4.0)
            .collect();
        let dist = temperature_scale(&logits, config.temperature)?;

        let mut probs = dist.probs().to_vec();
        if config.no_repeat_ngram_size >= 2 {
            let banned = no_repeat_ngram_banned(&history, config.no_repeat_ngram_size);
            for &token in &banned {
                probs[token as usize] = 0.0;
            }
            let mass: f64 = probs.iter().sum();
            if mass <= 0.0 {
                break; // every continuation is banned
            }
            for p in probs.iter_mut() {
                *p /= mass;
            }
        }

        let dist = TokenDistribution::new(probs)?;
        let dist = top_p_filter(&dist, config.top_p)?;
        let token = sample_index(dist.probs(), rng.random::<f64>()) as u32;
        if token == stop_id {
            break;
        }
        history.push(token);
    }

    Ok(history
        .iter()
        .map(|&t| vocab[t as usize])
        .collect::<Vec<_>>()
        .join(" "))
}
