//! Instruction-prompt rendering and token-budget enforcement.
//!
//! The template is fixed and byte-exact; tests pin it against golden files.
//! Token counting uses a whitespace-split proxy so the budget is
//! deterministic without shipping a model vocabulary — callers map the
//! budget to their backend's real tokenizer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ShotEntry;

/// Everything up to and including the user instruction. The `<Video>` token
/// is a placeholder the backend replaces with visual context.
pub const TEMPLATE_HEAD: &str = "A chat between a curious user and an artificial intelligence \
assistant. The assistant gives helpful, detailed, and polite answers to the user's questions. \
USER: <Video>\nPlease describe this video. Do not include details that you are not sure of.";

/// Lead-in for the optional speech sentence.
pub const SPEECH_LEAD_IN: &str = "This is what the speech in the video is saying:";

/// Cue that ends every eval-mode prompt.
pub const ASSISTANT_CUE: &str = "ASSISTANT:";

/// Default prompt token budget.
pub const DEFAULT_MAX_PROMPT_TOKENS: usize = 3072;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("prompt budget unattainable: scaffold needs {required} tokens, budget is {budget}")]
    BudgetUnattainable { required: usize, budget: usize },
}

/// Whether the rendering embeds the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    Train,
    Eval,
}

/// A rendered prompt. The eval rendering is always a strict prefix of the
/// train rendering for the same entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptInstance {
    pub entry_id: String,
    pub mode: PromptMode,
    pub text: String,
    pub token_count: usize,
    #[serde(skip)]
    asr: Option<String>,
    #[serde(skip)]
    target: Option<String>,
}

/// Whitespace-split proxy token count.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn compose(asr: Option<&str>, target: Option<&str>) -> String {
    let mut text = String::from(TEMPLATE_HEAD);
    if let Some(asr) = asr {
        text.push(' ');
        text.push_str(SPEECH_LEAD_IN);
        text.push(' ');
        text.push_str(asr);
    }
    text.push(' ');
    text.push_str(ASSISTANT_CUE);
    if let Some(target) = target {
        text.push(' ');
        text.push_str(target);
    }
    text
}

impl PromptInstance {
    fn build(
        entry_id: String,
        mode: PromptMode,
        asr: Option<String>,
        target: Option<String>,
    ) -> Self {
        let text = compose(asr.as_deref(), target.as_deref());
        let token_count = token_count(&text);
        Self {
            entry_id,
            mode,
            text,
            token_count,
            asr,
            target,
        }
    }

    /// ASR segment currently embedded in the prompt, if any.
    pub fn asr_text(&self) -> Option<&str> {
        self.asr.as_deref()
    }

    /// Ground-truth segment currently embedded (train mode only).
    pub fn target_text(&self) -> Option<&str> {
        self.target.as_deref()
    }

    /// The eval-mode rendering of this instance (drops the ground truth).
    pub fn eval_text(&self) -> String {
        compose(self.asr.as_deref(), None)
    }
}

/// Renders the instruction template for an entry. The speech sentence is
/// omitted entirely when the entry has no (or an empty) ASR transcript.
pub fn render_prompt(entry: &ShotEntry, mode: PromptMode) -> PromptInstance {
    let asr = entry
        .asr_text
        .as_deref()
        .filter(|text| !text.trim().is_empty())
        .map(str::to_string);
    let target = match mode {
        PromptMode::Train => Some(entry.target_text.clone()),
        PromptMode::Eval => None,
    };
    PromptInstance::build(entry.entry_id.clone(), mode, asr, target)
}

/// Fits an instance into `max_tokens` by shortening the ASR segment from
/// its end, then dropping it, then (train mode) shortening the target. The
/// template scaffolding is never touched; when even the scaffold overflows
/// the budget, this is an error.
pub fn enforce_budget(
    instance: PromptInstance,
    max_tokens: usize,
) -> Result<PromptInstance, PromptError> {
    if instance.token_count <= max_tokens {
        return Ok(instance);
    }
    let PromptInstance {
        entry_id,
        mode,
        asr,
        target,
        token_count: count,
        ..
    } = instance;

    // 1. shorten the ASR transcript by whole tokens from the end
    let mut asr = asr;
    if let Some(text) = asr.as_deref() {
        let overflow = count - max_tokens;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() > overflow {
            asr = Some(tokens[..tokens.len() - overflow].join(" "));
            return Ok(PromptInstance::build(entry_id, mode, asr, target));
        }
        asr = None;
    }
    let rebuilt = PromptInstance::build(entry_id, mode, asr, target);
    if rebuilt.token_count <= max_tokens {
        return Ok(rebuilt);
    }

    // 2. shorten the ground truth (train mode only); it may vanish entirely
    let PromptInstance {
        entry_id,
        mode,
        asr,
        target,
        token_count: count,
        ..
    } = rebuilt;
    if let Some(text) = target.as_deref() {
        let overflow = count - max_tokens;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() >= overflow {
            let kept = &tokens[..tokens.len() - overflow];
            let target = if kept.is_empty() {
                None
            } else {
                Some(kept.join(" "))
            };
            let rebuilt = PromptInstance::build(entry_id, mode, asr, target);
            if rebuilt.token_count <= max_tokens {
                return Ok(rebuilt);
            }
            return Err(PromptError::BudgetUnattainable {
                required: rebuilt.token_count,
                budget: max_tokens,
            });
        }
        let rebuilt = PromptInstance::build(entry_id, mode, asr, None);
        if rebuilt.token_count <= max_tokens {
            return Ok(rebuilt);
        }
        return Err(PromptError::BudgetUnattainable {
            required: rebuilt.token_count,
            budget: max_tokens,
        });
    }
    Err(PromptError::BudgetUnattainable {
        required: count,
        budget: max_tokens,
    })
}
