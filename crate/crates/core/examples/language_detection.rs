//! Runs the bundled English/French detector over the fixture questions and
//! prints one line per question plus the overall accuracy.
//!
//! ```bash
//! cargo run -p kwame --example language_detection
//! ```

use kwame::qa_engine::{bundled_detector, detect_language};
use kwame::Lang;

const QA_EN: &str = include_str!("../data/qa_en.jsonl");
const QA_FR: &str = include_str!("../data/qa_fr.jsonl");

#[derive(serde::Deserialize)]
struct Row {
    qid: String,
    lang: Lang,
    question: String,
}

fn main() -> anyhow::Result<()> {
    let mut total = 0;
    let mut correct = 0;
    let mut min_conf = f64::INFINITY;
    for line in QA_EN.lines().chain(QA_FR.lines()) {
        let row: Row = serde_json::from_str(line)?;
        let d = detect_language(&row.question);
        let scores = bundled_detector().scores(&row.question);
        total += 1;
        if d.lang == row.lang {
            correct += 1;
            min_conf = min_conf.min(d.confidence);
        }
        println!(
            "{:<14} expected={} got={} confidence={:.4} en={:.2} fr={:.2}",
            row.qid, row.lang, d.lang, d.confidence, scores[0].1, scores[1].1
        );
    }
    println!(
        "accuracy {}/{} = {:.1}%  (lowest confidence among correct: {:.4})",
        correct,
        total,
        100.0 * correct as f64 / total as f64,
        min_conf
    );
    Ok(())
}
