//! TF-IDF (unigrams and bigrams) search over the English lesson, calling the
//! retrieval layer directly without the engine.
//!
//! ```bash
//! cargo run -p kwame --example tfidf_search -- "how do I change the outline color"
//! ```

use kwame::corpus::{ingest_lesson, AnswerBank};
use kwame::retrieval::{build_tfidf_index, cosine_top_k, QueryVector};
use kwame::Lang;

const LESSON: &str = include_str!("../data/lesson1_en.md");

fn main() -> anyhow::Result<()> {
    let bank = AnswerBank::new(ingest_lesson(LESSON.as_bytes(), Lang::En, 1)?)?;
    let (model, index) = build_tfidf_index(&bank, Lang::En)?;
    println!("{} paragraphs, vocabulary of {} terms", index.len(), model.dim());

    let questions: Vec<String> = match std::env::args().nth(1) {
        Some(q) => vec![q],
        None => [
            "how do I change the outline color",
            "where is the origin of the screen",
            "what happens when I divide two integers",
        ]
        .map(String::from)
        .to_vec(),
    };
    for q in &questions {
        let top = cosine_top_k(&QueryVector::Sparse(model.vectorize(q)), &index, 3, None)?;
        println!("\n{q}");
        for a in &top.answers {
            let text = &bank.get(&a.id).expect("indexed ids are in the bank").text;
            let preview: String = text.chars().take(60).collect();
            println!("  {} {} {:.3}  {preview}...", a.rank, a.id, a.score);
        }
    }
    Ok(())
}
