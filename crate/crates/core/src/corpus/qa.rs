use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{io_err, AnswerBank, CorpusError};
use crate::lang::Lang;

/// Where a question came from: course quizzes or real student posts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QaType {
    Quiz,
    Student,
}

impl QaType {
    pub const ALL: [QaType; 2] = [QaType::Quiz, QaType::Student];

    pub fn display_name(self) -> &'static str {
        match self {
            QaType::Quiz => "Quiz",
            QaType::Student => "Student",
        }
    }
}

impl fmt::Display for QaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QaType::Quiz => "quiz",
            QaType::Student => "student",
        })
    }
}

impl FromStr for QaType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quiz" => Ok(QaType::Quiz),
            "student" => Ok(QaType::Student),
            other => Err(format!("unknown question type {other:?}")),
        }
    }
}

/// A labeled question. Any of `gold_ids` counts as a correct answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub qid: String,
    pub lang: Lang,
    pub qtype: QaType,
    pub question: String,
    pub gold_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QaSet {
    pub pairs: Vec<QaPair>,
}

impl QaSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn count(&self, lang: Lang, qtype: QaType) -> usize {
        self.cell(lang, qtype).count()
    }

    pub fn cell(&self, lang: Lang, qtype: QaType) -> impl Iterator<Item = &QaPair> {
        self.pairs
            .iter()
            .filter(move |p| p.lang == lang && p.qtype == qtype)
    }

    /// Concatenates two sets, rejecting duplicate qids.
    pub fn merge(mut self, other: QaSet) -> Result<QaSet, CorpusError> {
        let mut seen: HashSet<String> = self.pairs.iter().map(|p| p.qid.clone()).collect();
        for p in other.pairs {
            if !seen.insert(p.qid.clone()) {
                return Err(CorpusError::DuplicateQuestion(p.qid));
            }
            self.pairs.push(p);
        }
        Ok(self)
    }
}

pub fn load_qa_pairs(path: impl AsRef<Path>, bank: &AnswerBank) -> Result<QaSet, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_qa_pairs(BufReader::new(file), bank)
}

/// Parses JSON-lines QA records and checks every gold id against `bank`.
pub fn parse_qa_pairs<R: BufRead>(reader: R, bank: &AnswerBank) -> Result<QaSet, CorpusError> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let malformed = |message: String| CorpusError::Malformed {
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: QaPair = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if !seen.insert(pair.qid.clone()) {
            return Err(CorpusError::DuplicateQuestion(pair.qid));
        }
        if pair.gold_ids.is_empty() {
            return Err(CorpusError::NoGold { qid: pair.qid });
        }
        for id in &pair.gold_ids {
            let Some(p) = bank.get(id) else {
                return Err(CorpusError::DanglingGold {
                    qid: pair.qid.clone(),
                    id: id.clone(),
                });
            };
            if p.lang != pair.lang {
                return Err(CorpusError::GoldLangMismatch {
                    qid: pair.qid.clone(),
                    id: id.clone(),
                    question_lang: pair.lang,
                    answer_lang: p.lang,
                });
            }
        }
        pairs.push(pair);
    }
    Ok(QaSet { pairs })
}
