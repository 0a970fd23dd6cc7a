//! Course-material ingestion: lesson documents become a paragraph answer
//! bank, QA pairs are loaded against that bank, and weak-label triplets are
//! mined from paragraph sentences for external fine-tuning.

mod bank;
mod preprocess;
mod qa;
mod triplets;

use std::path::PathBuf;

pub use bank::{ingest_lesson, AnswerBank, AnswerParagraph};
pub use preprocess::{split_paragraphs, strip_noncontent, Stripped};
pub use qa::{load_qa_pairs, parse_qa_pairs, QaPair, QaSet, QaType};
pub use triplets::{
    generate_triplets, split_sentences, split_triplets, Triplet, TripletSet,
    DEFAULT_TRAIN_FRACTION,
};

use crate::lang::Lang;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("document is not valid UTF-8: invalid byte sequence at offset {offset}")]
    Decode { offset: usize },
    #[error("lesson number must be >= 1, got {0}")]
    InvalidLesson(u32),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate paragraph id {0:?}")]
    DuplicateParagraph(String),
    #[error("paragraph {id:?}: ordinal {ordinal} already used in {lang} lesson {lesson}")]
    DuplicateOrdinal {
        id: String,
        lang: Lang,
        lesson: u32,
        ordinal: usize,
    },
    #[error("paragraph {0:?} has empty text")]
    EmptyParagraph(String),
    #[error("duplicate question id {0:?}")]
    DuplicateQuestion(String),
    #[error("question {qid:?} has no gold answer ids")]
    NoGold { qid: String },
    #[error("question {qid:?} references unknown gold answer {id:?}")]
    DanglingGold { qid: String, id: String },
    #[error("question {qid:?} is {question_lang} but gold answer {id:?} is {answer_lang}")]
    GoldLangMismatch {
        qid: String,
        id: String,
        question_lang: Lang,
        answer_lang: Lang,
    },
    #[error("insufficient negatives: {lang} has {paragraphs} paragraph(s), at least 2 required")]
    InsufficientNegatives { lang: Lang, paragraphs: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CorpusError {
    let path = path.into();
    move |source| CorpusError::Io { path, source }
}
