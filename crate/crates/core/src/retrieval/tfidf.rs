use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::index::{IndexEntry, IndexMeta, VectorIndex};
use super::tokenize::{ngrams, tokenize};
use super::vector::SparseVector;
use super::{Backend, RetrievalError};
use crate::corpus::AnswerBank;
use crate::lang::Lang;

/// Vocabulary and smoothed IDF weights fitted on one language's paragraphs.
///
/// Weighting: raw term count times `ln((1 + N) / (1 + df)) + 1`, rows
/// L2-normalised. No stopword removal, no sublinear tf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: BTreeMap<String, u32>,
    pub idf: Vec<f64>,
    pub ngram_range: (usize, usize),
}

impl TfidfModel {
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a str>) -> Self {
        let grams: Vec<Vec<String>> = docs.into_iter().map(|d| ngrams(&tokenize(d))).collect();
        let n_docs = grams.len() as f64;
        let terms: BTreeSet<&str> = grams.iter().flatten().map(String::as_str).collect();
        let vocabulary: BTreeMap<String, u32> = terms
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t.to_string(), i as u32))
            .collect();
        let mut df = vec![0usize; vocabulary.len()];
        for doc in &grams {
            let unique: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
            for t in unique {
                df[vocabulary[t] as usize] += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|d| ((1.0 + n_docs) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Self {
            vocabulary,
            idf,
            ngram_range: (1, 2),
        }
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&c| self.idf[c as usize])
    }

    /// Unnormalised tf-idf weights; out-of-vocabulary n-grams are dropped.
    fn weights(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for g in ngrams(&tokenize(text)) {
            if let Some(&c) = self.vocabulary.get(&g) {
                *counts.entry(c).or_default() += 1.0;
            }
        }
        let pairs = counts
            .into_iter()
            .map(|(c, tf)| (c, tf * self.idf[c as usize]))
            .collect();
        SparseVector::from_pairs(self.dim(), pairs)
    }

    /// Projects text into the model space, L2-normalised. Text with no
    /// known n-gram maps to the zero vector.
    pub fn vectorize(&self, text: &str) -> SparseVector {
        let mut v = self.weights(text);
        v.normalize();
        v
    }
}

pub fn tfidf_vectorize(model: &TfidfModel, text: &str) -> SparseVector {
    model.vectorize(text)
}

/// Fits a TF-IDF model on the `lang` paragraphs of `bank` and indexes them.
pub fn build_tfidf_index(
    bank: &AnswerBank,
    lang: Lang,
) -> Result<(TfidfModel, VectorIndex), RetrievalError> {
    let paragraphs: Vec<_> = bank.in_lang(lang).collect();
    if paragraphs.is_empty() {
        return Err(RetrievalError::EmptyLang(lang));
    }
    let model = TfidfModel::fit(paragraphs.iter().map(|p| p.text.as_str()));
    let rows = paragraphs.iter().map(|p| model.weights(&p.text)).collect();
    let entries = paragraphs
        .iter()
        .map(|p| IndexEntry {
            id: p.id.clone(),
            lesson: p.lesson,
        })
        .collect();
    let meta = IndexMeta {
        ngram_range: Some(model.ngram_range),
        bank_digest: bank.digest(),
        ..IndexMeta::default()
    };
    let index = VectorIndex::from_sparse(lang, Backend::Tfidf, entries, model.dim(), rows, meta);
    Ok((model, index))
}
