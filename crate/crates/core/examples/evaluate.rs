//! Top-1/3/5 accuracy and time per question on the bilingual fixture
//! questions, for four systems: TF-IDF, two hashing encoders, and a dense
//! index whose vectors come from a file. Prints both report tables.
//!
//! ```bash
//! cargo run --release -p kwame --example evaluate -- json
//! ```

use std::io::Write;
use std::sync::Arc;

use kwame::corpus::{ingest_lesson, parse_qa_pairs, AnswerBank, QaSet};
use kwame::eval_harness::{evaluate, parse_report, render_report, EvalConfig, ReportFormat};
use kwame::qa_engine::{Engine, PrecomputedProvider};
use kwame::retrieval::{build_index, hash_embed, Backend, BuildOptions};
use kwame::Lang;

const EN: &str = include_str!("../data/lesson1_en.md");
const FR: &str = include_str!("../data/lesson1_fr.md");
const QA_EN: &str = include_str!("../data/qa_en.jsonl");
const QA_FR: &str = include_str!("../data/qa_fr.jsonl");

fn main() -> anyhow::Result<()> {
    let format: ReportFormat = std::env::args().nth(1).as_deref().unwrap_or("text").parse()?;

    let mut paragraphs = ingest_lesson(EN.as_bytes(), Lang::En, 1)?;
    paragraphs.extend(ingest_lesson(FR.as_bytes(), Lang::Fr, 1)?);
    let bank = AnswerBank::new(paragraphs)?;
    let qa: QaSet = parse_qa_pairs(QA_EN.as_bytes(), &bank)?.merge(parse_qa_pairs(QA_FR.as_bytes(), &bank)?)?;

    // Stand-in for an offline embedding model: bank vectors go through the
    // same file format a real model export would use.
    let model = |t: &str| hash_embed(&t.to_lowercase(), 384, 99).expect("valid dim");
    let dir = std::env::temp_dir().join(format!("kwame-eval-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let mut provider = PrecomputedProvider::default();
    for p in &qa.pairs {
        provider.insert(p.question.clone(), model(&p.question));
    }

    let config = EvalConfig::default().with_backends([Backend::Tfidf, Backend::Hash, Backend::Dense]);
    let mut builder = Engine::builder(bank.clone()).provider(Arc::new(provider));
    for lang in Lang::ALL {
        let path = dir.join(format!("{lang}.jsonl"));
        let mut f = std::fs::File::create(&path)?;
        for p in bank.in_lang(lang) {
            writeln!(f, "{}", serde_json::json!({"id": p.id, "vector": model(&p.text)}))?;
        }
        let opts = BuildOptions { vectors: Some(&path), ..BuildOptions::default() };
        for backend in config.backends.iter().copied() {
            builder = builder.index(build_index(&bank, lang, backend, &opts)?)?;
        }
    }
    let engine = builder.build();
    let mut report = evaluate(&qa, &engine, &config)?;
    report.relabel("hash", "hash-1024");
    report.relabel("dense", "dense (file)");

    let small_hash = Engine::builder(bank.clone())
        .build_all(Backend::Hash, &BuildOptions { dim: 64, ..BuildOptions::default() })?
        .build();
    let mut small = evaluate(&qa, &small_hash, &config.clone().with_backends([Backend::Hash]))?;
    small.relabel("hash", "hash-64");
    let report = report.merge(small)?;
    std::fs::remove_dir_all(&dir)?;

    let doc = render_report(&report, format);
    if format != ReportFormat::Text {
        assert_eq!(parse_report(&doc, format)?, report);
    }
    print!("{doc}");
    Ok(())
}
