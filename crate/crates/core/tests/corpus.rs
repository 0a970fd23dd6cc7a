mod common;

use std::collections::HashSet;

use common::*;
use kwame::corpus::{
    generate_triplets, ingest_lesson, load_qa_pairs, split_sentences, split_triplets, AnswerBank,
    AnswerParagraph, CorpusError, QaType,
};
use kwame::Lang;
use proptest::prelude::*;

#[test]
fn lesson_fixtures_give_39_paragraphs() {
    for (doc, lang) in [(LESSON_EN, Lang::En), (LESSON_FR, Lang::Fr)] {
        let paragraphs = ingest_lesson(doc.as_bytes(), lang, 1).unwrap();
        assert_eq!(paragraphs.len(), 39, "{lang}");
        for p in &paragraphs {
            assert!(!p.text.contains("```"), "{}", p.id);
            assert!(p.text.matches('|').count() < 2, "{}", p.id);
            assert!(!p.text.to_lowercase().starts_with("fig"), "{}", p.id);
            assert!(!p.text.contains("ellipse(width/2, height/2, 300"), "{}", p.id);
        }
        let refs: Vec<(&str, &[String])> = paragraphs
            .iter()
            .filter(|p| !p.figure_refs.is_empty())
            .map(|p| (p.id.as_str(), p.figure_refs.as_slice()))
            .collect();
        let prefix = lang.code();
        assert_eq!(
            refs,
            [
                (format!("{prefix}-L1-P06").as_str(), &["Figure 1".to_string()][..]),
                (format!("{prefix}-L1-P10").as_str(), &["Figure 2".to_string()][..]),
            ]
        );
    }
}

#[test]
fn qa_fixtures_load_with_expected_cells() {
    let bank = fixture_bank();
    let en = load_qa_pairs(data_dir().join("qa_en.jsonl"), &bank).unwrap();
    let fr = load_qa_pairs(data_dir().join("qa_fr.jsonl"), &bank).unwrap();
    let qa = en.merge(fr).unwrap();
    for lang in Lang::ALL {
        assert_eq!(qa.count(lang, QaType::Quiz), 20);
        assert_eq!(qa.count(lang, QaType::Student), 12);
    }
    assert!(qa.pairs.iter().any(|p| p.gold_ids.len() > 1));
}

#[test]
fn qa_errors_name_the_problem() {
    let bank = fixture_bank();
    let dangling = r#"{"qid":"x1","lang":"en","qtype":"quiz","question":"q?","gold_ids":["en-L1-P99"]}"#;
    match kwame::corpus::parse_qa_pairs(dangling.as_bytes(), &bank) {
        Err(CorpusError::DanglingGold { qid, id }) => assert_eq!((qid.as_str(), id.as_str()), ("x1", "en-L1-P99")),
        other => panic!("{other:?}"),
    }
    let malformed = "{\"qid\":\"ok\",\"lang\":\"en\",\"qtype\":\"quiz\",\"question\":\"q\",\"gold_ids\":[\"en-L1-P01\"]}\n{oops";
    match kwame::corpus::parse_qa_pairs(malformed.as_bytes(), &bank) {
        Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    assert!(load_qa_pairs("/nonexistent/qa.jsonl", &bank).is_err());
}

#[test]
fn bank_jsonl_round_trip() {
    let bank = fixture_bank();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bank.jsonl");
    bank.save(&path).unwrap();
    let back = AnswerBank::load(&path).unwrap();
    assert_eq!(back, bank);
    assert_eq!(back.digest(), bank.digest());
}

#[test]
fn triplets_need_two_paragraphs() {
    let one = AnswerBank::new(ingest_lesson(b"One sentence here. Another one there.", Lang::En, 1).unwrap()).unwrap();
    let err = generate_triplets(&one, Lang::En, 0).unwrap_err();
    assert!(err.to_string().contains("insufficient negatives"));
}

fn prose() -> impl Strategy<Value = String> {
    prop::collection::vec("[A-Za-z]{2,8}", 3..12).prop_map(|w| format!("Text {}.", w.join(" ")))
}

#[derive(Debug, Clone)]
enum Block {
    Prose(String),
    Fence(String),
    Table(usize),
    Caption(usize),
    Indented,
}

fn block() -> impl Strategy<Value = Block> {
    prop_oneof![
        4 => prose().prop_map(Block::Prose),
        1 => "[a-z(); =0-9]{1,20}".prop_map(Block::Fence),
        1 => (2usize..5).prop_map(Block::Table),
        1 => (1usize..9).prop_map(Block::Caption),
        1 => Just(Block::Indented),
    ]
}

fn render(blocks: &[Block]) -> String {
    let parts: Vec<String> = blocks
        .iter()
        .map(|b| match b {
            Block::Prose(s) => s.clone(),
            Block::Fence(code) => format!("```\n{code}\n```"),
            Block::Table(n) => (0..*n).map(|i| format!("| a{i} | b{i} |")).collect::<Vec<_>>().join("\n"),
            Block::Caption(n) => format!("Figure {n}: a caption."),
            Block::Indented => "    size(100, 100);\n    fill(0);".to_string(),
        })
        .collect();
    parts.join("\n\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ingestion_keeps_prose_and_is_idempotent(blocks in prop::collection::vec(block(), 1..15)) {
        let doc = render(&blocks);
        let expected: Vec<&String> = blocks.iter().filter_map(|b| match b { Block::Prose(s) => Some(s), _ => None }).collect();
        let first = ingest_lesson(doc.as_bytes(), Lang::En, 1).unwrap();
        let texts: Vec<&String> = first.iter().map(|p| &p.text).collect();
        prop_assert_eq!(texts, expected);

        let again_doc: Vec<&str> = first.iter().map(|p| p.text.as_str()).collect();
        let second = ingest_lesson(again_doc.join("\n\n").as_bytes(), Lang::En, 1).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn triplet_structure(seed in any::<u64>(), counts in prop::collection::vec(1usize..6, 2..12)) {
        let mut sentences = Vec::new();
        let paragraphs: Vec<AnswerParagraph> = counts.iter().enumerate().map(|(i, &c)| {
            let s: Vec<String> = (0..c).map(|j| format!("Paragraph {i} has sentence {j}.")).collect();
            let text = s.join(" ");
            sentences.push(s);
            AnswerParagraph { id: AnswerParagraph::make_id(Lang::Fr, 1, i), lang: Lang::Fr, lesson: 1, ordinal: i, text, figure_refs: vec![] }
        }).collect();
        let bank = AnswerBank::new(paragraphs).unwrap();
        for (p, s) in bank.paragraphs().iter().zip(&sentences) {
            prop_assert_eq!(&split_sentences(&p.text), s);
        }
        let set = generate_triplets(&bank, Lang::Fr, seed).unwrap();
        let expected: usize = counts.iter().map(|c| c - 1).sum();
        prop_assert_eq!(set.len(), expected);
        for t in &set.triplets {
            prop_assert_ne!(&t.anchor_paragraph, &t.negative_paragraph);
            let i = bank.paragraphs().iter().position(|p| p.id == t.anchor_paragraph).unwrap();
            let j = bank.paragraphs().iter().position(|p| p.id == t.negative_paragraph).unwrap();
            let pos = sentences[i].iter().position(|s| *s == t.anchor).unwrap();
            prop_assert_eq!(&sentences[i][pos + 1], &t.positive);
            prop_assert!(sentences[j].contains(&t.negative));
        }
        prop_assert_eq!(set.to_jsonl(), generate_triplets(&bank, Lang::Fr, seed).unwrap().to_jsonl());
    }

    #[test]
    fn split_is_a_partition(seed in any::<u64>(), n in 2usize..40, frac in 0.05f64..0.95) {
        let bank = synthetic_bank(seed, n);
        let set = generate_triplets(&bank, Lang::En, seed).unwrap();
        let (train, test) = split_triplets(&set, frac, seed).unwrap();
        prop_assert_eq!(train.len(), (set.len() as f64 * frac).round() as usize);
        prop_assert_eq!(train.len() + test.len(), set.len());
        let key = |t: &kwame::corpus::Triplet| (t.anchor.clone(), t.positive.clone(), t.negative.clone());
        let mut all: Vec<_> = train.triplets.iter().chain(&test.triplets).map(key).collect();
        let mut orig: Vec<_> = set.triplets.iter().map(key).collect();
        all.sort();
        orig.sort();
        prop_assert_eq!(all, orig);
        let ids: HashSet<_> = bank.paragraphs().iter().map(|p| p.id.clone()).collect();
        prop_assert!(set.triplets.iter().all(|t| ids.contains(&t.anchor_paragraph)));
    }
}
