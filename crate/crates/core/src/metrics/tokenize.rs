//! Shared caption normalization and tokenization.

use serde::{Deserialize, Serialize};

/// Punctuation removed from captions before splitting.
pub const STRIP_CHARS: &[char] = &[
    '.', ',', '!', '?', ';', ':', '"', '\'', '(', ')', '[', ']', '-',
];

/// A normalized caption: lowercase tokens with the strip set removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedCaption {
    pub tokens: Vec<String>,
}

impl TokenizedCaption {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases, removes the strip set, collapses whitespace, and splits.
///
/// Applying the tokenizer to its own joined output is a fixed point.
pub fn normalize_tokenize(text: &str) -> TokenizedCaption {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|c| !STRIP_CHARS.contains(c))
        .collect();
    TokenizedCaption {
        tokens: cleaned.split_whitespace().map(str::to_string).collect(),
    }
}
