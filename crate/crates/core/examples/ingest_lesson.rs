//! Cleans the English lesson fixture and shows what survives: the prose
//! paragraphs with their ids and any figure references they mention.
//!
//! ```bash
//! cargo run -p kwame --example ingest_lesson
//! ```

use kwame::corpus::{ingest_lesson, strip_noncontent, AnswerBank};
use kwame::Lang;

const LESSON: &str = include_str!("../data/lesson1_en.md");

fn main() -> anyhow::Result<()> {
    let stripped = strip_noncontent(LESSON.as_bytes())?;
    let nonblank = |s: &str| s.lines().filter(|l| !l.trim().is_empty()).count();
    let removed = nonblank(LESSON) - nonblank(&stripped.clean);
    println!("{removed} code, table and caption lines dropped");

    let bank = AnswerBank::new(ingest_lesson(LESSON.as_bytes(), Lang::En, 1)?)?;
    println!("{} answer paragraphs\n", bank.len());
    for p in bank.paragraphs().iter().take(8) {
        let preview: String = p.text.chars().take(70).collect();
        println!("{}  {preview}...", p.id);
        if !p.figure_refs.is_empty() {
            println!("{:>10}  refers to {}", "", p.figure_refs.join(", "));
        }
    }
    println!("\nbank digest {}", bank.digest());
    Ok(())
}
