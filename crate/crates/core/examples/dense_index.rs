//! Dense retrieval from precomputed vectors. Paragraph vectors are read from
//! a JSON-lines file of `{"id", "vector"}` records; question vectors come
//! from an embedding provider.
//!
//! A real deployment gets both from a sentence-embedding model. Here a
//! hashing encoder stands in so the example runs offline. Pass the URL of a
//! running embedding service to embed questions over HTTP instead (its
//! paragraph vectors must then come from the same model).
//!
//! ```bash
//! cargo run -p kwame --example dense_index
//! cargo run -p kwame --example dense_index -- http://127.0.0.1:8001/embed
//! ```

use std::io::Write;
use std::sync::Arc;
use std::time::Duration;

use kwame::corpus::{ingest_lesson, AnswerBank};
use kwame::qa_engine::{AskRequest, EmbeddingProvider, Engine, HttpProvider, PrecomputedProvider};
use kwame::retrieval::{hash_embed, load_dense_index, Backend, Encoder, IndexArtifact};
use kwame::Lang;

const LESSON: &str = include_str!("../data/lesson1_en.md");
const DIM: usize = 256;

fn toy_model(text: &str) -> Vec<f64> {
    hash_embed(text, DIM, 1).expect("dim is valid")
}

fn main() -> anyhow::Result<()> {
    let bank = AnswerBank::new(ingest_lesson(LESSON.as_bytes(), Lang::En, 1)?)?;

    let path = std::env::temp_dir().join(format!("kwame-dense-{}.jsonl", std::process::id()));
    let mut file = std::fs::File::create(&path)?;
    for p in bank.paragraphs() {
        let rec = serde_json::json!({"id": p.id, "vector": toy_model(&p.text)});
        writeln!(file, "{rec}")?;
    }
    drop(file);
    let index = load_dense_index(&path, &bank, Lang::En)?;
    std::fs::remove_file(&path)?;
    println!("loaded {} vectors of dim {}", index.len(), index.dim());

    let questions = [
        "What does the stroke function do?",
        "How many times per second does draw run?",
    ];
    let provider: Arc<dyn EmbeddingProvider> = match std::env::args().nth(1) {
        Some(url) => Arc::new(HttpProvider::new(url, Duration::from_secs(10))),
        None => {
            let mut p = PrecomputedProvider::default();
            for q in questions {
                p.insert(q, toy_model(q));
            }
            Arc::new(p)
        }
    };

    let engine = Engine::builder(bank)
        .index(IndexArtifact::new(index, Encoder::Dense))?
        .provider(provider)
        .default_backend(Backend::Dense)
        .build();
    for q in questions {
        let resp = engine.ask(&AskRequest::new(q).top_k(2))?;
        println!("\n{q}");
        for a in &resp.answers {
            println!("  {} {} {:.3}", a.rank, a.id, a.score);
        }
    }
    Ok(())
}
