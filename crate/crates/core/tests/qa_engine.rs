mod common;

use std::sync::Arc;

use common::*;
use kwame::corpus::{ingest_lesson, AnswerBank};
use kwame::qa_engine::{
    AskRequest, Engine, EngineError, EngineHandle, PrecomputedProvider, NO_CONFIDENT_ANSWER,
};
use kwame::retrieval::{Backend, BuildOptions};
use kwame::Lang;
use proptest::prelude::*;

fn tfidf_engine(bank: AnswerBank) -> Engine {
    Engine::builder(bank)
        .build_all(Backend::Tfidf, &BuildOptions::default())
        .unwrap()
        .build()
}

fn two_lessons() -> AnswerBank {
    let lesson2 = "Loops repeat a block of code. A for loop draws many circles in a row across the screen.\n\n\
                   The while loop keeps running while its condition is true.\n";
    let mut p = ingest_lesson(LESSON_EN.as_bytes(), Lang::En, 1).unwrap();
    p.extend(ingest_lesson(lesson2.as_bytes(), Lang::En, 2).unwrap());
    AnswerBank::new(p).unwrap()
}

#[test]
fn self_retrieval_scores_one() {
    let bank = fixture_bank();
    let engine = tfidf_engine(bank.clone());
    let p = bank.get("en-L1-P03").unwrap();
    let resp = engine.ask(&AskRequest::new(&p.text).top_k(1)).unwrap();
    assert!(resp.answered);
    assert_eq!(resp.ids(), ["en-L1-P03"]);
    assert_eq!(resp.answers[0].rank, 1);
    assert!((resp.answers[0].score - 1.0).abs() < 1e-6);
}

#[test]
fn threshold_above_one_always_declines() {
    let bank = fixture_bank();
    let engine = tfidf_engine(bank.clone());
    let text = &bank.get("en-L1-P03").unwrap().text;
    let resp = engine.ask(&AskRequest::new(text).threshold(1.1)).unwrap();
    assert!(!resp.answered);
    assert!(resp.answers.is_empty());
    assert_eq!(resp.message.as_deref(), Some(NO_CONFIDENT_ANSWER));
}

#[test]
fn default_threshold_applies_unless_overridden() {
    let engine = Engine::builder(fixture_bank())
        .build_all(Backend::Tfidf, &BuildOptions::default())
        .unwrap()
        .default_threshold(Some(0.35))
        .build();
    let q = "Is the weather nice today?";
    assert!(!engine.ask(&AskRequest::new(q)).unwrap().answered);
    assert!(engine.ask(&AskRequest::new(q).threshold(f64::NEG_INFINITY)).unwrap().answered);
}

#[test]
fn lesson_tag_restricts_candidates() {
    let engine = tfidf_engine(two_lessons());
    let q = "how do I draw circles in a row";
    let open = engine.ask(&AskRequest::new(q).top_k(5)).unwrap();
    assert!(open.ids().iter().any(|id| id.starts_with("en-L2")));
    assert!(open.ids().iter().any(|id| id.starts_with("en-L1")));

    let tagged = engine.ask(&AskRequest::new(format!("#lesson1 {q}")).top_k(5)).unwrap();
    assert_eq!(tagged.answers.len(), 5);
    assert!(tagged.ids().iter().all(|id| id.starts_with("en-L1-")));

    let l2 = engine.ask(&AskRequest::new(format!("{q} #Lesson2")).top_k(5)).unwrap();
    assert_eq!(l2.answers.len(), 2);
    assert!(l2.ids().iter().all(|id| id.starts_with("en-L2-")));
}

#[test]
fn explicit_lesson_beats_tag_and_missing_lesson_declines() {
    let engine = tfidf_engine(two_lessons());
    let resp = engine.ask(&AskRequest::new("#lesson1 while loop").lesson(2)).unwrap();
    assert!(resp.ids().iter().all(|id| id.starts_with("en-L2-")));
    let none = engine.ask(&AskRequest::new("circle #lesson9")).unwrap();
    assert!(!none.answered);
}

#[test]
fn routes_by_detected_language() {
    let bank = fixture_bank();
    let engine = tfidf_engine(bank.clone());
    let fr = engine.ask(&AskRequest::new("Comment dessiner un cercle au centre de l'écran ?").top_k(3)).unwrap();
    assert_eq!(fr.lang_detected, Lang::Fr);
    assert!(fr.ids().iter().all(|id| id.starts_with("fr-")));
    let en = engine.ask(&AskRequest::new("How do I draw a circle at the center of the screen?").top_k(3)).unwrap();
    assert_eq!(en.lang_detected, Lang::En);
    assert_eq!(en.ids()[0], "en-L1-P10");
}

#[test]
fn override_wins_over_detection() {
    let engine = tfidf_engine(fixture_bank());
    let resp = engine.ask(&AskRequest::new("What is a variable?").lang(Lang::Fr).top_k(3)).unwrap();
    assert_eq!(resp.lang_detected, Lang::Fr);
    assert!(resp.ids().iter().all(|id| id.starts_with("fr-")));
}

#[test]
fn missing_index_and_provider_errors() {
    let bank = fixture_bank();
    let only_en = Engine::builder(bank.clone())
        .index(kwame::retrieval::build_index(&bank, Lang::En, Backend::Tfidf, &BuildOptions::default()).unwrap())
        .unwrap()
        .build();
    let err = only_en.ask(&AskRequest::new("bonjour").lang(Lang::Fr)).unwrap_err();
    assert!(matches!(err, EngineError::NoIndex { lang: Lang::Fr, backend: Backend::Tfidf }));
    let err = only_en.ask(&AskRequest::new("hello").backend(Backend::Hash)).unwrap_err();
    assert!(matches!(err, EngineError::NoIndex { backend: Backend::Hash, .. }));
    assert!(matches!(
        only_en.ask(&AskRequest::new("hello").top_k(0)),
        Err(EngineError::InvalidRequest(_))
    ));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("en.jsonl");
    let rows: String = bank
        .in_lang(Lang::En)
        .map(|p| format!("{}\n", serde_json::json!({"id": p.id, "vector": [1.0, p.ordinal as f64]})))
        .collect();
    std::fs::write(&path, rows).unwrap();
    let opts = BuildOptions { vectors: Some(&path), ..BuildOptions::default() };
    let dense = Engine::builder(bank.clone())
        .index(kwame::retrieval::build_index(&bank, Lang::En, Backend::Dense, &opts).unwrap())
        .unwrap()
        .default_backend(Backend::Dense);
    let no_provider = dense.build();
    assert!(matches!(no_provider.ask(&AskRequest::new("hello").lang(Lang::En)), Err(EngineError::NoProvider)));

    let mut p = PrecomputedProvider::default();
    p.insert("hello", vec![0.0, 1.0]);
    let with_provider = Engine::builder(bank.clone())
        .index(kwame::retrieval::build_index(&bank, Lang::En, Backend::Dense, &opts).unwrap())
        .unwrap()
        .default_backend(Backend::Dense)
        .provider(Arc::new(p))
        .build();
    let resp = with_provider.ask(&AskRequest::new("hello").lang(Lang::En).top_k(1)).unwrap();
    assert_eq!(resp.ids(), ["en-L1-P38"]);
    let err = with_provider.ask(&AskRequest::new("unknown").lang(Lang::En)).unwrap_err();
    assert!(matches!(err, EngineError::Provider(_)));
    let mut bad = PrecomputedProvider::default();
    bad.insert("hello", vec![1.0, 2.0, 3.0]);
    let mismatched = Engine::builder(bank.clone())
        .index(kwame::retrieval::build_index(&bank, Lang::En, Backend::Dense, &opts).unwrap())
        .unwrap()
        .default_backend(Backend::Dense)
        .provider(Arc::new(bad))
        .build();
    assert!(matches!(mismatched.ask(&AskRequest::new("hello").lang(Lang::En)), Err(EngineError::Retrieval(_))));
}

#[test]
fn index_must_match_bank() {
    let bank = fixture_bank();
    let other = synthetic_bank(3, 10);
    let foreign = kwame::retrieval::build_index(&other, Lang::En, Backend::Tfidf, &BuildOptions::default()).unwrap();
    assert!(matches!(Engine::builder(bank).index(foreign), Err(EngineError::Config(_))));
}

#[test]
fn handle_publishes_new_engine() {
    let handle = EngineHandle::new(tfidf_engine(fixture_bank()));
    let before = handle.current();
    handle.publish(tfidf_engine(two_lessons()));
    assert_eq!(before.languages(), [Lang::En, Lang::Fr]);
    assert_eq!(handle.current().languages(), [Lang::En]);
}

#[test]
fn concurrent_asks_agree() {
    let bank = fixture_bank();
    let engine = Arc::new(tfidf_engine(bank.clone()));
    let texts: Vec<(String, String)> = bank.paragraphs().iter().map(|p| (p.id.clone(), p.text.clone())).collect();
    std::thread::scope(|s| {
        for chunk in texts.chunks(10) {
            let engine = Arc::clone(&engine);
            s.spawn(move || {
                for (id, text) in chunk {
                    let resp = engine.ask(&AskRequest::new(text).top_k(1).ignore_tags()).unwrap();
                    assert_eq!(&resp.answers[0].id, id);
                }
            });
        }
    });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deterministic_answers(seed in any::<u64>(), q in "[a-z ]{0,40}") {
        let bank = synthetic_bank(seed, 20);
        let engine = Engine::builder(bank.clone())
            .build_all(Backend::Hash, &BuildOptions { dim: 128, ..BuildOptions::default() })
            .unwrap()
            .default_backend(Backend::Hash)
            .build();
        let req = AskRequest::new(q).top_k(4);
        prop_assert_eq!(engine.ask(&req).unwrap(), engine.ask(&req).unwrap());
    }

    #[test]
    fn raising_threshold_never_answers_more(seed in any::<u64>(), t1 in -1.0f64..1.2, t2 in -1.0f64..1.2) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let bank = synthetic_bank(seed, 15);
        let engine = tfidf_engine(bank.clone());
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        for lang in Lang::ALL {
            let q = random_text(&mut rng, lang, 6);
            let low = engine.ask(&AskRequest::new(&q).lang(lang).threshold(lo)).unwrap();
            let high = engine.ask(&AskRequest::new(&q).lang(lang).threshold(hi)).unwrap();
            prop_assert!(!high.answered || low.answered);
            if high.answered {
                prop_assert_eq!(low.answers, high.answers);
            }
        }
    }

    #[test]
    fn answers_ranked_and_sized(seed in any::<u64>(), k in 1usize..30) {
        let bank = synthetic_bank(seed, 12);
        let engine = tfidf_engine(bank.clone());
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let resp = engine.ask(&AskRequest::new(random_text(&mut rng, Lang::En, 5)).lang(Lang::En).top_k(k)).unwrap();
        if resp.answered {
            prop_assert_eq!(resp.answers.len(), k.min(12));
            for (i, a) in resp.answers.iter().enumerate() {
                prop_assert_eq!(a.rank, i + 1);
                prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&a.score));
                prop_assert_eq!(bank.get(&a.id).unwrap().lang, Lang::En);
            }
            prop_assert!(resp.answers.windows(2).all(|w| w[0].score >= w[1].score));
        }
    }
}
