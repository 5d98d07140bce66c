mod common;

use laysumm::des::{normalize_pool, select, MetricVector, SelectionConfig};
use laysumm::fewshot::{rank_metric_vectors, top_k, FewShotConfig, RankMode};
use laysumm::prompt::{ChatTurnFormat, FewShotBundle, PromptTemplate, Role, TemplateName};
use laysumm::relevance::{rouge_l, rouge_n};
use laysumm::{readability_all, tokenize, Dataset, Document, FamiliarWordList};
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "cells",
    "divide",
    "when",
    "nutrients",
    "are",
    "plentiful",
    "the",
    "team",
    "observed",
    "unexpected",
    "behaviour",
    "in",
    "zebrafish",
    "larvae",
    "this",
    "suggests",
    "a",
    "new",
    "mechanism",
    "for",
    "repair",
];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(0..WORDS.len(), 1..10).prop_map(|ix| {
        let mut s = ix.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" ");
        s[..1].make_ascii_uppercase();
        s.push('.');
        s
    })
}

fn prose() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(sentence(), 1..6)
}

fn metric_value() -> impl Strategy<Value = f64> {
    (0u32..10_000).prop_map(|v| v as f64 / 100.0)
}

/// Pools of 3 to 8 candidates with 3 readability and 2 factuality metrics.
fn pool() -> impl Strategy<Value = Vec<MetricVector>> {
    prop::collection::vec(prop::collection::vec(metric_value(), 5), 3..=8).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, v)| {
                MetricVector::new(format!("c{i}"))
                    .with_readability("fkgl", v[0])
                    .with_readability("dcrs", v[1] / 5.0)
                    .with_readability("cli", v[2])
                    .with_factuality("alignscore", v[3] / 100.0)
                    .with_factuality("summac", v[4] / 100.0)
            })
            .collect()
    })
}

fn distinct_columns(pool: &[MetricVector]) -> bool {
    let first = &pool[0];
    first.readability.keys().all(|k| {
        pool.iter()
            .any(|v| v.readability[k] != first.readability[k])
    }) && first
        .factuality
        .keys()
        .all(|k| pool.iter().any(|v| v.factuality[k] != first.factuality[k]))
}

fn affine(pool: &[MetricVector], coeffs: &[(f64, f64)]) -> Vec<MetricVector> {
    pool.iter()
        .map(|v| {
            let mut out = v.clone();
            for ((_, x), (a, b)) in out
                .readability
                .iter_mut()
                .chain(out.factuality.iter_mut())
                .zip(coeffs)
            {
                *x = a * *x + b;
            }
            out
        })
        .collect()
}

fn with_abstract(text: &str) -> Document {
    let mut d = Document::new("q", text, Dataset::Elife);
    d.introduction = Some("An introduction.".into());
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sentences_partition_tokens(text in prose()) {
        let t = tokenize(&text.join(" ")).unwrap();
        prop_assert_eq!(t.sentence_count(), text.len());
        let mut next = 0;
        for s in t.sentences() {
            prop_assert_eq!(s.start, next);
            prop_assert!(s.end > s.start);
            next = s.end;
        }
        prop_assert_eq!(next, t.word_count());
    }

    #[test]
    fn concatenation_adds_counts(a in prose(), b in prose()) {
        let (a, b) = (a.join(" "), b.join(" "));
        let ta = tokenize(&a).unwrap();
        let tb = tokenize(&b).unwrap();
        let tab = tokenize(&format!("{a} {b}")).unwrap();
        prop_assert_eq!(tab.word_count(), ta.word_count() + tb.word_count());
        prop_assert_eq!(tab.sentence_count(), ta.sentence_count() + tb.sentence_count());
        prop_assert_eq!(tab.syllable_count(), ta.syllable_count() + tb.syllable_count());
        prop_assert_eq!(tab.letter_count(), ta.letter_count() + tb.letter_count());
    }

    #[test]
    fn duplicated_text_keeps_readability(text in prose()) {
        let list = FamiliarWordList::dale_chall();
        let once = text.join(" ");
        let a = readability_all(&once, list).unwrap();
        let b = readability_all(&format!("{once} {once}"), list).unwrap();
        prop_assert!((a.fkgl - b.fkgl).abs() < 1e-9);
        prop_assert!((a.dcrs - b.dcrs).abs() < 1e-9);
        prop_assert!((a.cli - b.cli).abs() < 1e-9);
    }

    #[test]
    fn rouge_swaps_precision_and_recall(
        a in prop::collection::vec(0u8..4, 0..10),
        b in prop::collection::vec(0u8..4, 0..10),
    ) {
        for n in [1, 2] {
            let ab = rouge_n(&a, &b, n).unwrap();
            let ba = rouge_n(&b, &a, n).unwrap();
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.f1, ba.f1);
            prop_assert!((0.0..=1.0).contains(&ab.f1));
        }
        let ab = rouge_l(&a, &b);
        let ba = rouge_l(&b, &a);
        prop_assert_eq!(ab.recall, ba.precision);
        prop_assert_eq!(ab.f1, ba.f1);
    }

    #[test]
    fn rouge_of_identical_sequences_is_one(a in prop::collection::vec(0u8..4, 2..10)) {
        prop_assert_eq!(rouge_n(&a, &a, 1).unwrap().f1, 1.0);
        prop_assert_eq!(rouge_n(&a, &a, 2).unwrap().f1, 1.0);
        prop_assert_eq!(rouge_l(&a, &a).f1, 1.0);
    }

    #[test]
    fn selection_is_affine_invariant(
        pool in pool(),
        coeffs in prop::collection::vec((0.01f64..100.0, -50.0f64..50.0), 5),
    ) {
        prop_assume!(distinct_columns(&pool));
        let moved = affine(&pool, &coeffs);
        let before = normalize_pool(&pool, true, 0.5).unwrap();
        let after = normalize_pool(&moved, true, 0.5).unwrap();
        for ((r0, f0), (r1, f1)) in before.iter().zip(&after) {
            for (x, y) in r0.values().zip(r1.values()).chain(f0.values().zip(f1.values())) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
        for config in [SelectionConfig::elife(), SelectionConfig::plos()] {
            let a = select(&pool, &config).unwrap();
            let b = select(&moved, &config).unwrap();
            let gap = {
                let mut s: Vec<f64> = a.per_candidate.iter().map(|c| c.overall_score).collect();
                s.sort_by(|x, y| y.total_cmp(x));
                s[0] - s[1]
            };
            if gap > 1e-9 {
                prop_assert_eq!(a.chosen_candidate_id, b.chosen_candidate_id);
            }
        }
    }

    #[test]
    fn boundary_weights_pick_group_argmax(pool in pool()) {
        let r_only = select(&pool, &SelectionConfig::with_weights(1.0, 0.0).unwrap()).unwrap();
        let best_r = r_only.per_candidate.iter().map(|c| c.readability_mean).fold(f64::MIN, f64::max);
        prop_assert_eq!(r_only.chosen().readability_mean, best_r);
        let f_only = select(&pool, &SelectionConfig::with_weights(0.0, 1.0).unwrap()).unwrap();
        let best_f = f_only.per_candidate.iter().map(|c| c.factuality_mean).fold(f64::MIN, f64::max);
        prop_assert_eq!(f_only.chosen().factuality_mean, best_f);
    }

    #[test]
    fn scores_stay_in_unit_interval(pool in pool(), w in 0u32..=100) {
        let w = w as f64 / 100.0;
        let result = select(&pool, &SelectionConfig::with_weights(w, 1.0 - w).unwrap()).unwrap();
        for c in &result.per_candidate {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c.overall_score));
            prop_assert!((0.0..=1.0).contains(&c.readability_mean));
            prop_assert!((0.0..=1.0).contains(&c.factuality_mean));
        }
    }

    #[test]
    fn permuting_the_pool_keeps_scores(pool in pool(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = pool.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let config = SelectionConfig::elife();
        let a = select(&pool, &config).unwrap();
        let b = select(&shuffled, &config).unwrap();
        for c in &a.per_candidate {
            let d = b.per_candidate.iter().find(|d| d.candidate_id == c.candidate_id).unwrap();
            prop_assert!((c.overall_score - d.overall_score).abs() < 1e-12);
        }
        prop_assert_eq!(a.chosen().overall_score, b.chosen().overall_score);
    }

    #[test]
    fn dominated_candidate_is_never_chosen(pool in pool(), w in 0u32..=100, margin in 0.01f64..5.0) {
        let w = w as f64 / 100.0;
        let mut pool = pool;
        let mut worse = pool[0].clone();
        worse.candidate_id = "dominated".into();
        for x in worse.readability.values_mut() {
            *x += margin;
        }
        for x in worse.factuality.values_mut() {
            *x -= margin / 10.0;
        }
        pool.push(worse);
        let result = select(&pool, &SelectionConfig::with_weights(w, 1.0 - w).unwrap()).unwrap();
        prop_assert_ne!(result.chosen_candidate_id, "dominated");
    }

    #[test]
    fn top_k_is_a_prefix_of_top_k_plus_one(pool in pool(), k in 1usize..3) {
        let ranked = rank_metric_vectors(&pool, RankMode::Flat).unwrap();
        let small = top_k(&ranked, &FewShotConfig::new(k, Dataset::Plos).unwrap()).unwrap();
        let large = top_k(&ranked, &FewShotConfig::new(k + 1, Dataset::Plos).unwrap()).unwrap();
        prop_assert_eq!(&large[..k], &small[..]);
        for pair in ranked.windows(2) {
            prop_assert!(pair[0].rank_score >= pair[1].rank_score);
        }
    }

    #[test]
    fn abstract_appears_verbatim(text in "[^{}]{1,80}") {
        for name in [TemplateName::Initial, TemplateName::Persona, TemplateName::Intro, TemplateName::Guide] {
            let template = PromptTemplate::builtin(name);
            let sentinel = template.render(&with_abstract("\u{1}")).unwrap();
            let (head, tail) = sentinel.split_once('\u{1}').unwrap();
            let rendered = template.render(&with_abstract(&text)).unwrap();
            prop_assert_eq!(rendered, format!("{head}{text}{tail}"));
        }
    }

    #[test]
    fn different_abstracts_give_different_prompts(a in "[a-z ]{1,40}", b in "[a-z ]{1,40}") {
        prop_assume!(a != b);
        for name in TemplateName::ALL {
            let template = PromptTemplate::builtin(name);
            let mut da = with_abstract(&a);
            let mut db = with_abstract(&b);
            da.article = Some(a.clone());
            db.article = Some(b.clone());
            prop_assert_ne!(template.render(&da).unwrap(), template.render(&db).unwrap());
        }
    }

    #[test]
    fn few_shot_has_k_plus_one_user_turns(
        targets in prop::collection::vec("[a-z][a-z .]{0,30}", 1..5),
        format in prop::sample::select(vec!["mistral-instruct", "llama3-instruct"]),
    ) {
        let template = PromptTemplate::builtin(TemplateName::Initial);
        let docs: Vec<Document> = (0..targets.len()).map(|i| with_abstract(&format!("abstract {i}"))).collect();
        let exemplars: Vec<(&Document, &str)> = docs.iter().zip(&targets).map(|(d, t)| (d, t.as_str())).collect();
        let bundle = FewShotBundle::build(&template, &exemplars, &with_abstract("query")).unwrap();
        let format = ChatTurnFormat::builtin(format).unwrap();
        let turns = format.parse(&bundle.render(&format)).unwrap();
        let users = turns.iter().filter(|t| t.role == Role::User).count();
        prop_assert_eq!(users, targets.len() + 1);
        prop_assert_eq!(turns, bundle.turns());
    }
}
