//! Mines weak-label training triplets from the English lesson and splits
//! them 75/25 for an external fine-tuning job.
//!
//! ```bash
//! cargo run -p kwame --example triplets -- 42
//! ```

use kwame::corpus::{
    generate_triplets, ingest_lesson, split_triplets, AnswerBank, DEFAULT_TRAIN_FRACTION,
};
use kwame::Lang;

const LESSON: &str = include_str!("../data/lesson1_en.md");

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let bank = AnswerBank::new(ingest_lesson(LESSON.as_bytes(), Lang::En, 1)?)?;

    let all = generate_triplets(&bank, Lang::En, seed)?;
    let (train, test) = split_triplets(&all, DEFAULT_TRAIN_FRACTION, seed)?;
    println!("seed {seed}: {} triplets, {} train / {} test", all.len(), train.len(), test.len());

    for t in all.triplets.iter().take(3) {
        println!("\nanchor   ({}) {}", t.anchor_paragraph, t.anchor);
        println!("positive          {}", t.positive);
        println!("negative ({}) {}", t.negative_paragraph, t.negative);
    }

    println!("\nfirst lines of the train export:");
    for line in train.to_jsonl().lines().take(2) {
        println!("{line}");
    }
    Ok(())
}
