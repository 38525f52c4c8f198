//! Property tests for the spec invariants.

mod common;

use proptest::prelude::*;

use shotcap::dataset::{
    filter_corrupted, segment_shots, FilterOptions, Scope, ShotEntry, ShotRecord, VideoRecord,
};
use shotcap::metrics::{
    bleu4_corpus, cider_d_corpus, meteor_corpus, normalize_tokenize, rouge_l_corpus, CorpusItem,
    CorpusPair, TokenizedCaption, STRIP_CHARS,
};
use shotcap::prompting::{enforce_budget, render_prompt, PromptMode, ASSISTANT_CUE, TEMPLATE_HEAD};
use shotcap::sampling::{head_tail_plan, uniform_plan};

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

fn caption(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 0..=max_len)
}

fn corpus() -> impl Strategy<Value = CorpusPair> {
    prop::collection::vec(
        (caption(10), prop::collection::vec(caption(10), 1..=3)),
        2..=6,
    )
    .prop_map(|raw| {
        let items = raw
            .into_iter()
            .enumerate()
            .map(|(index, (candidate, references))| CorpusItem {
                entry_id: format!("item{index:02}"),
                candidate: TokenizedCaption { tokens: candidate },
                references: references
                    .into_iter()
                    .map(|tokens| TokenizedCaption { tokens })
                    .collect(),
            })
            .collect();
        CorpusPair::new(items).unwrap()
    })
}

proptest! {
    #[test]
    fn tokenizer_output_is_clean_and_idempotent(text in ".{0,80}") {
        let first = normalize_tokenize(&text);
        for token in &first.tokens {
            prop_assert!(!token.chars().any(|c| c.is_whitespace()));
            prop_assert!(!token.chars().any(|c| STRIP_CHARS.contains(&c)));
            prop_assert!(!token.is_empty());
        }
        let second = normalize_tokenize(&first.tokens.join(" "));
        prop_assert_eq!(first, second);
    }

    #[test]
    fn raw_metrics_stay_in_unit_range(corpus in corpus()) {
        let bleu = bleu4_corpus(&corpus).unwrap();
        let rouge = rouge_l_corpus(&corpus).unwrap();
        let meteor = meteor_corpus(&corpus).unwrap();
        let cider = cider_d_corpus(&corpus).unwrap();
        for value in [bleu, rouge, meteor, cider] {
            prop_assert!((0.0..=1.0).contains(&value), "out of range: {value}");
        }
    }

    #[test]
    fn corpus_scores_ignore_item_order(corpus in corpus()) {
        let mut reversed_items = corpus.items.clone();
        reversed_items.reverse();
        let reversed = CorpusPair::new(reversed_items).unwrap();
        prop_assert_eq!(bleu4_corpus(&corpus).unwrap(), bleu4_corpus(&reversed).unwrap());
        prop_assert_eq!(rouge_l_corpus(&corpus).unwrap(), rouge_l_corpus(&reversed).unwrap());
        prop_assert_eq!(meteor_corpus(&corpus).unwrap(), meteor_corpus(&reversed).unwrap());
        let cider_diff =
            (cider_d_corpus(&corpus).unwrap() - cider_d_corpus(&reversed).unwrap()).abs();
        prop_assert!(cider_diff < 1e-12);
    }

    #[test]
    fn uniform_plans_are_injective_when_the_span_allows(
        start in 0u64..1000,
        extra in 0u64..500,
        n in 1usize..200,
    ) {
        let end = start + n as u64 + extra;
        let plan = uniform_plan(start, end, n).unwrap();
        prop_assert_eq!(plan.indices.len(), n);
        prop_assert!(plan.indices.iter().all(|&i| i >= start && i < end));
        let mut dedup = plan.indices.clone();
        dedup.dedup();
        prop_assert_eq!(dedup.len(), n, "indices must not repeat when n <= span");
    }

    #[test]
    fn head_tail_is_a_pure_function_of_its_arguments(
        start in 0u64..1000,
        len in 1u64..500,
        n in 1usize..100,
        seed in any::<u64>(),
    ) {
        let a = head_tail_plan(start, start + len, n, seed).unwrap();
        let b = head_tail_plan(start, start + len, n, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.indices.len(), n);
        prop_assert!(a.indices.iter().all(|&i| i >= start && i < start + len));
    }

    #[test]
    fn eval_prompt_is_a_strict_prefix_of_train(
        target in "[a-z]{1,8}( [a-z]{1,8}){0,4}",
        asr in prop::option::of("[a-z]{1,8}( [a-z]{1,8}){0,6}"),
    ) {
        let entry = ShotEntry {
            entry_id: "p_s1".to_string(),
            scope: Scope::Shot,
            span: (0, 10),
            target_text: target,
            asr_text: asr,
            video_id: "p".to_string(),
        };
        let eval = render_prompt(&entry, PromptMode::Eval);
        let train = render_prompt(&entry, PromptMode::Train);
        prop_assert!(train.text.starts_with(&eval.text));
        prop_assert!(train.text.len() > eval.text.len());
        prop_assert!(eval.text.ends_with(ASSISTANT_CUE));
    }

    #[test]
    fn budget_enforcement_is_bounded_and_keeps_the_scaffold(
        target in "[a-z]{1,8}( [a-z]{1,8}){0,10}",
        asr in prop::option::of("[a-z]{1,8}( [a-z]{1,8}){0,40}"),
        budget in 41usize..160,
    ) {
        let entry = ShotEntry {
            entry_id: "p_s1".to_string(),
            scope: Scope::Shot,
            span: (0, 10),
            target_text: target,
            asr_text: asr,
            video_id: "p".to_string(),
        };
        for mode in [PromptMode::Eval, PromptMode::Train] {
            let instance = render_prompt(&entry, mode);
            match enforce_budget(instance, budget) {
                Ok(bounded) => {
                    prop_assert!(bounded.token_count <= budget);
                    prop_assert!(bounded.text.starts_with(TEMPLATE_HEAD));
                    prop_assert!(bounded.text.contains(ASSISTANT_CUE));
                }
                Err(_) => {
                    // only reachable when even the bare scaffold overflows
                    let scaffold = render_prompt(
                        &ShotEntry { asr_text: None, ..entry.clone() },
                        PromptMode::Eval,
                    );
                    prop_assert!(scaffold.token_count > budget);
                }
            }
        }
    }
}

fn arbitrary_shot() -> impl Strategy<Value = ShotRecord> {
    (
        0u64..60,
        0u64..40,
        prop::option::of("[a-z]{1,6}( [a-z]{1,6}){0,4}"),
    )
        .prop_map(|(start, len, caption)| ShotRecord {
            shot_id: String::new(),
            start_frame: start,
            end_frame: start + len, // len 0 gives an empty span
            caption,
            asr: None,
        })
}

fn arbitrary_video() -> impl Strategy<Value = VideoRecord> {
    (
        0u64..80,
        prop::collection::vec(arbitrary_shot(), 0..5),
        prop::option::of("[a-z]{1,6}( [a-z]{1,6}){0,4}"),
    )
        .prop_map(|(frame_count, mut shots, summary)| {
            for (index, shot) in shots.iter_mut().enumerate() {
                shot.shot_id = format!("s{index}");
            }
            VideoRecord {
                video_id: String::new(),
                frame_count,
                shots,
                summary,
                asr_full: None,
                source_path: None,
            }
        })
}

proptest! {
    #[test]
    fn filtering_partitions_shots_and_is_idempotent(
        mut videos in prop::collection::vec(arbitrary_video(), 0..6),
    ) {
        for (index, video) in videos.iter_mut().enumerate() {
            video.video_id = format!("v{index:02}");
        }
        let total: usize = videos.iter().map(|v| v.shots.len()).sum();
        let options = FilterOptions::default();
        let (kept, rejected) = filter_corrupted(&videos, &options);

        let kept_shots: usize = kept.iter().map(|v| v.shots.len()).sum();
        let rejected_shots = rejected.iter().filter(|r| r.id.contains("_s")).count();
        prop_assert_eq!(kept_shots + rejected_shots, total);

        let (kept_again, rejected_again) = filter_corrupted(&kept, &options);
        prop_assert_eq!(kept_again, kept);
        prop_assert!(rejected_again.is_empty());
    }

    #[test]
    fn segmentation_only_emits_valid_targets(
        mut videos in prop::collection::vec(arbitrary_video(), 0..6),
    ) {
        for (index, video) in videos.iter_mut().enumerate() {
            video.video_id = format!("v{index:02}");
        }
        let (kept, _) = filter_corrupted(&videos, &FilterOptions::default());
        for entry in segment_shots(&kept) {
            prop_assert!(!entry.target_text.trim().is_empty());
            let video = kept.iter().find(|v| v.video_id == entry.video_id).unwrap();
            prop_assert!(entry.span.1 <= video.frame_count);
            if entry.scope == Scope::FullVideo {
                prop_assert_eq!(entry.span, (0, video.frame_count));
            }
        }
    }
}
