//! One engine serving both languages: questions are routed to the bank of
//! their detected language, `#lessonN` tags narrow the search, and a
//! threshold turns weak matches into "no confident answer".
//!
//! ```bash
//! cargo run -p kwame --example ask_bilingual
//! ```

use kwame::corpus::{ingest_lesson, AnswerBank};
use kwame::qa_engine::{AskRequest, Engine};
use kwame::retrieval::{Backend, BuildOptions};
use kwame::Lang;

const EN: &str = include_str!("../data/lesson1_en.md");
const FR: &str = include_str!("../data/lesson1_fr.md");

fn show(engine: &Engine, req: AskRequest) -> anyhow::Result<()> {
    let resp = engine.ask(&req)?;
    println!("\n> {}", req.question);
    println!("  routed to {}", resp.lang_detected.display_name());
    match resp.answers.first() {
        Some(a) if resp.answered => {
            let preview: String = a.text.chars().take(80).collect();
            println!("  {} ({:.2}) {preview}...", a.id, a.score);
        }
        _ => println!("  {}", resp.message.as_deref().unwrap_or("no answer")),
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let mut paragraphs = ingest_lesson(EN.as_bytes(), Lang::En, 1)?;
    paragraphs.extend(ingest_lesson(FR.as_bytes(), Lang::Fr, 1)?);
    let bank = AnswerBank::new(paragraphs)?;
    let engine = Engine::builder(bank)
        .build_all(Backend::Tfidf, &BuildOptions::default())?
        .build();
    let langs: Vec<&str> = engine.languages().iter().map(|l| l.display_name()).collect();
    println!("serving {}", langs.join(" and "));

    show(&engine, AskRequest::new("How do I draw a circle in the middle of the screen?"))?;
    show(&engine, AskRequest::new("Comment dessiner un cercle au milieu de l'écran ?"))?;
    show(&engine, AskRequest::new("#lesson1 pourquoi mon programme affiche une erreur ?"))?;
    show(&engine, AskRequest::new("What is a variable?").lang(Lang::Fr))?;
    show(&engine, AskRequest::new("Is the weather nice today?").threshold(0.35))?;
    Ok(())
}
