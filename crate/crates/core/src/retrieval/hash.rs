use twox_hash::XxHash64;

use super::index::{IndexEntry, IndexMeta, VectorIndex};
use super::tokenize::{ngrams, tokenize};
use super::vector::l2_normalize;
use super::{Backend, RetrievalError};
use crate::corpus::AnswerBank;
use crate::lang::Lang;

pub const MIN_HASH_DIM: usize = 8;

/// Signed feature hashing of word unigrams and bigrams into `dim` buckets,
/// L2-normalised. Empty or token-free text yields the zero vector.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> Result<Vec<f64>, RetrievalError> {
    if dim < MIN_HASH_DIM {
        return Err(RetrievalError::InvalidDim { dim });
    }
    let mut v = vec![0.0; dim];
    for gram in ngrams(&tokenize(text)) {
        let h = XxHash64::oneshot(seed, gram.as_bytes());
        let bucket = (h % dim as u64) as usize;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[bucket] += sign;
    }
    l2_normalize(&mut v);
    Ok(v)
}

pub fn build_hash_index(
    bank: &AnswerBank,
    lang: Lang,
    dim: usize,
    seed: u64,
) -> Result<VectorIndex, RetrievalError> {
    let paragraphs: Vec<_> = bank.in_lang(lang).collect();
    if paragraphs.is_empty() {
        return Err(RetrievalError::EmptyLang(lang));
    }
    let vectors = paragraphs
        .iter()
        .map(|p| hash_embed(&p.text, dim, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let entries = paragraphs
        .iter()
        .map(|p| IndexEntry {
            id: p.id.clone(),
            lesson: p.lesson,
        })
        .collect();
    let meta = IndexMeta {
        ngram_range: Some((1, 2)),
        seed: Some(seed),
        bank_digest: bank.digest(),
        ..IndexMeta::default()
    };
    VectorIndex::from_dense(lang, Backend::Hash, entries, vectors, meta)
}
