use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{io_err, AnswerBank, CorpusError};
use crate::lang::Lang;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

/// Fragments with fewer tokens than this are glued to a neighbour, so
/// "e.g." or "Dr." never stand alone as sentences.
const MIN_SENTENCE_TOKENS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: String,
    pub positive: String,
    pub negative: String,
    pub anchor_paragraph: String,
    pub negative_paragraph: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletSet {
    pub lang: Lang,
    pub seed: u64,
    pub triplets: Vec<Triplet>,
}

#[derive(Serialize)]
struct ExportHeader {
    seed: u64,
    lang: Lang,
    count: usize,
}

#[derive(Serialize)]
struct ExportRecord<'a> {
    anchor: &'a str,
    positive: &'a str,
    negative: &'a str,
}

impl TripletSet {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Export format: a `{"seed","lang","count"}` header line followed by one
    /// `{"anchor","positive","negative"}` record per triplet.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = ExportHeader {
            seed: self.seed,
            lang: self.lang,
            count: self.triplets.len(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for t in &self.triplets {
            let rec = ExportRecord {
                anchor: &t.anchor,
                positive: &t.positive,
                negative: &t.negative,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(io_err(path))
    }
}

/// Splits a paragraph into sentences at `.`, `!` or `?` followed by
/// whitespace. Fragments shorter than two tokens are merged forward (or
/// backward, for a trailing fragment).
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut raw: Vec<&str> = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(j, next)) = chars.peek() {
                if next.is_whitespace() {
                    raw.push(&text[start..j]);
                    start = j;
                }
            }
        }
    }
    raw.push(&text[start..]);

    let mut out: Vec<String> = Vec::new();
    let mut pending = String::new();
    for frag in raw.into_iter().map(str::trim).filter(|f| !f.is_empty()) {
        if !pending.is_empty() {
            pending.push(' ');
        }
        pending.push_str(frag);
        if token_count(&pending) >= MIN_SENTENCE_TOKENS {
            out.push(std::mem::take(&mut pending));
        }
    }
    if !pending.is_empty() {
        match out.last_mut() {
            Some(last) => {
                last.push(' ');
                last.push_str(&pending);
            }
            None => out.push(pending),
        }
    }
    out
}

fn token_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Mines (anchor, next sentence, random sentence from another paragraph)
/// triplets from every paragraph of `lang` in `bank`.
pub fn generate_triplets(
    bank: &AnswerBank,
    lang: Lang,
    seed: u64,
) -> Result<TripletSet, CorpusError> {
    let paragraphs: Vec<_> = bank.in_lang(lang).collect();
    if paragraphs.len() < 2 {
        return Err(CorpusError::InsufficientNegatives {
            lang,
            paragraphs: paragraphs.len(),
        });
    }
    let sentences: Vec<Vec<String>> = paragraphs.iter().map(|p| split_sentences(&p.text)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    let n = paragraphs.len();

    for (i, para) in paragraphs.iter().enumerate() {
        for pair in sentences[i].windows(2) {
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let pool = &sentences[j];
            let negative = pool[rng.random_range(0..pool.len())].clone();
            triplets.push(Triplet {
                anchor: pair[0].clone(),
                positive: pair[1].clone(),
                negative,
                anchor_paragraph: para.id.clone(),
                negative_paragraph: paragraphs[j].id.clone(),
            });
        }
    }
    Ok(TripletSet {
        lang,
        seed,
        triplets,
    })
}

/// Seeded shuffle, then the first `round(n * train_fraction)` triplets go to
/// train and the rest to test.
pub fn split_triplets(
    set: &TripletSet,
    train_fraction: f64,
    seed: u64,
) -> Result<(TripletSet, TripletSet), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(train_fraction));
    }
    let mut order: Vec<usize> = (0..set.triplets.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (set.triplets.len() as f64 * train_fraction).round() as usize;
    let pick = |idx: &[usize]| TripletSet {
        lang: set.lang,
        seed: set.seed,
        triplets: idx.iter().map(|&i| set.triplets[i].clone()).collect(),
    };
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}
