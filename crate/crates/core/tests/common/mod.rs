#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use kwame::corpus::{ingest_lesson, parse_qa_pairs, AnswerBank, AnswerParagraph, QaSet};
use kwame::Lang;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LESSON_EN: &str = include_str!("../../data/lesson1_en.md");
pub const LESSON_FR: &str = include_str!("../../data/lesson1_fr.md");
pub const QA_EN: &str = include_str!("../../data/qa_en.jsonl");
pub const QA_FR: &str = include_str!("../../data/qa_fr.jsonl");

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn fixture_bank() -> AnswerBank {
    let mut p = ingest_lesson(LESSON_EN.as_bytes(), Lang::En, 1).unwrap();
    p.extend(ingest_lesson(LESSON_FR.as_bytes(), Lang::Fr, 1).unwrap());
    AnswerBank::new(p).unwrap()
}

pub fn fixture_qa(bank: &AnswerBank) -> QaSet {
    parse_qa_pairs(QA_EN.as_bytes(), bank)
        .unwrap()
        .merge(parse_qa_pairs(QA_FR.as_bytes(), bank).unwrap())
        .unwrap()
}

pub const EN_WORDS: &[&str] = &[
    "circle", "screen", "pixel", "color", "shape", "variable", "function", "draw", "width",
    "height", "the", "of", "and", "to", "fill", "stroke", "line", "point", "sketch", "phone",
    "number", "integer", "float", "comment", "error", "semicolon", "background", "argument",
    "rectangle", "outline", "value", "frame", "animation", "order", "program", "code",
];

pub const FR_WORDS: &[&str] = &[
    "cercle", "écran", "pixel", "couleur", "forme", "variable", "fonction", "dessiner",
    "largeur", "hauteur", "le", "de", "et", "la", "remplir", "contour", "ligne", "point",
    "croquis", "téléphone", "nombre", "entier", "virgule", "commentaire", "erreur",
    "fond", "argument", "rectangle", "valeur", "image", "animation", "ordre", "programme",
    "code", "les", "une",
];

pub fn words(lang: Lang) -> &'static [&'static str] {
    match lang {
        Lang::En => EN_WORDS,
        Lang::Fr => FR_WORDS,
    }
}

pub fn random_text(rng: &mut impl Rng, lang: Lang, len: usize) -> String {
    let w = words(lang);
    (0..len).map(|_| *w.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Bilingual bank with `n` paragraphs per language spread over up to three
/// lessons. Each paragraph carries a unique token so texts never collide.
pub fn synthetic_bank(seed: u64, n: usize) -> AnswerBank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paragraphs = Vec::new();
    for lang in Lang::ALL {
        let mut ordinals: HashMap<u32, usize> = HashMap::new();
        for i in 0..n {
            let lesson = rng.random_range(1..=3u32);
            let ordinal = ordinals.entry(lesson).or_default();
            let len = rng.random_range(5..30);
            let text = format!("{} uniq{lang}{i}", random_text(&mut rng, lang, len));
            paragraphs.push(AnswerParagraph {
                id: AnswerParagraph::make_id(lang, lesson, *ordinal),
                lang,
                lesson,
                ordinal: *ordinal,
                text,
                figure_refs: vec![],
            });
            *ordinal += 1;
        }
    }
    AnswerBank::new(paragraphs).unwrap()
}

pub fn gaussian_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

pub fn naive_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Full sort of every candidate by score descending, then id ascending.
pub fn oracle_rank(mut scored: Vec<(String, f64)>) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored
}

/// Compares a top-k list with the first k of the oracle's full ranking: same
/// ids in the same order, except that ids whose oracle scores agree to
/// within rounding may trade places.
pub fn same_ranking(got: &[(String, f64)], oracle: &[(String, f64)], k: usize, tol: f64) -> Result<(), String> {
    let want = &oracle[..k.min(oracle.len())];
    if got.len() != want.len() {
        return Err(format!("length {} vs {}", got.len(), want.len()));
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        if (g.1 - w.1).abs() > tol {
            return Err(format!("rank {}: {} scored {} vs oracle {} {}", i + 1, g.0, g.1, w.0, w.1));
        }
        if g.0 != w.0 {
            let tied = oracle.iter().any(|(id, s)| *id == g.0 && (s - w.1).abs() <= 1e-12);
            if !tied {
                return Err(format!("rank {}: id {} vs {}", i + 1, g.0, w.0));
            }
        }
    }
    Ok(())
}

pub fn line(criterion: u32, ok: bool, detail: impl std::fmt::Display) {
    println!("criterion {criterion:>2}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}
