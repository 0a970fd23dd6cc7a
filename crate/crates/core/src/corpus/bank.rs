use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::preprocess::{split_paragraphs, strip_noncontent};
use super::{io_err, CorpusError};
use crate::lang::Lang;

/// One candidate answer: a cleaned paragraph of course material.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerParagraph {
    pub id: String,
    pub lang: Lang,
    pub lesson: u32,
    pub ordinal: usize,
    pub text: String,
    #[serde(default)]
    pub figure_refs: Vec<String>,
}

impl AnswerParagraph {
    pub fn make_id(lang: Lang, lesson: u32, ordinal: usize) -> String {
        format!("{lang}-L{lesson}-P{ordinal:02}")
    }
}

/// Turns one raw lesson document into ordered answer paragraphs with ids
/// `<lang>-L<lesson>-P<ordinal>`.
pub fn ingest_lesson(
    raw: &[u8],
    lang: Lang,
    lesson: u32,
) -> Result<Vec<AnswerParagraph>, CorpusError> {
    if lesson == 0 {
        return Err(CorpusError::InvalidLesson(lesson));
    }
    let stripped = strip_noncontent(raw)?;
    let paragraphs = split_paragraphs(&stripped.clean)
        .into_iter()
        .enumerate()
        .map(|(ordinal, text)| AnswerParagraph {
            id: AnswerParagraph::make_id(lang, lesson, ordinal),
            lang,
            lesson,
            ordinal,
            figure_refs: stripped.figure_refs.get(&ordinal).cloned().unwrap_or_default(),
            text,
        })
        .collect();
    Ok(paragraphs)
}

/// Validated, ordered collection of answer paragraphs across languages.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnswerBank {
    paragraphs: Vec<AnswerParagraph>,
    by_id: HashMap<String, usize>,
}

impl AnswerBank {
    pub fn new(paragraphs: Vec<AnswerParagraph>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(paragraphs.len());
        let mut ordinals = HashSet::new();
        for (i, p) in paragraphs.iter().enumerate() {
            if p.text.trim().is_empty() {
                return Err(CorpusError::EmptyParagraph(p.id.clone()));
            }
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateParagraph(p.id.clone()));
            }
            if !ordinals.insert((p.lang, p.lesson, p.ordinal)) {
                return Err(CorpusError::DuplicateOrdinal {
                    id: p.id.clone(),
                    lang: p.lang,
                    lesson: p.lesson,
                    ordinal: p.ordinal,
                });
            }
        }
        Ok(Self { paragraphs, by_id })
    }

    pub fn paragraphs(&self) -> &[AnswerParagraph] {
        &self.paragraphs
    }

    pub fn len(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AnswerParagraph> {
        self.by_id.get(id).map(|&i| &self.paragraphs[i])
    }

    pub fn languages(&self) -> BTreeSet<Lang> {
        self.paragraphs.iter().map(|p| p.lang).collect()
    }

    /// Paragraphs of one language, in bank order.
    pub fn in_lang(&self, lang: Lang) -> impl Iterator<Item = &AnswerParagraph> {
        self.paragraphs.iter().filter(move |p| p.lang == lang)
    }

    pub fn count_lang(&self, lang: Lang) -> usize {
        self.in_lang(lang).count()
    }

    /// Appends paragraphs, re-validating the whole bank.
    pub fn extend(self, more: Vec<AnswerParagraph>) -> Result<Self, CorpusError> {
        let mut all = self.paragraphs;
        all.extend(more);
        Self::new(all)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.paragraphs {
            out.push_str(&serde_json::to_string(p).expect("paragraph serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut paragraphs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| CorpusError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let p: AnswerParagraph =
                serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            paragraphs.push(p);
        }
        Self::new(paragraphs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(io_err(path))?;
        Self::from_jsonl(BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(io_err(path))
    }

    /// Hex SHA-256 of the canonical JSON-lines rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}
