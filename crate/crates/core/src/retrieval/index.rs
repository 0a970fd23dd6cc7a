use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::vector::{l2_normalize, QueryVector, SparseVector};
use super::{io_err, Backend, RetrievalError};
use crate::corpus::AnswerBank;
use crate::lang::Lang;

/// Row metadata visible to search filters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub lesson: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub ngram_range: Option<(usize, usize)>,
    pub seed: Option<u64>,
    /// Digest of the vector file a dense index was loaded from.
    pub source_digest: Option<String>,
    pub bank_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rows {
    /// Row-major `n x dim` matrix.
    Dense { dim: usize, data: Vec<f64> },
    Sparse { dim: usize, rows: Vec<SparseVector> },
}

/// Immutable matrix of unit-norm answer vectors for one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorIndex {
    pub lang: Lang,
    pub backend: Backend,
    entries: Vec<IndexEntry>,
    rows: Rows,
    /// Rows that were all zeros; never ranked.
    zero_rows: Vec<bool>,
    pub meta: IndexMeta,
}

impl VectorIndex {
    /// Builds a dense index, normalising every row. Zero rows are kept but
    /// flagged.
    pub fn from_dense(
        lang: Lang,
        backend: Backend,
        entries: Vec<IndexEntry>,
        vectors: Vec<Vec<f64>>,
        meta: IndexMeta,
    ) -> Result<Self, RetrievalError> {
        let dim = vectors.first().map(Vec::len).ok_or(RetrievalError::NoVectors)?;
        let mut data = Vec::with_capacity(dim * vectors.len());
        let mut zero_rows = Vec::with_capacity(vectors.len());
        for (entry, mut v) in entries.iter().zip(vectors) {
            if v.len() != dim {
                return Err(RetrievalError::DimensionMismatch {
                    id: entry.id.clone(),
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(RetrievalError::NonFinite {
                    id: entry.id.clone(),
                });
            }
            zero_rows.push(!l2_normalize(&mut v));
            data.extend_from_slice(&v);
        }
        assert_eq!(zero_rows.len(), entries.len(), "one vector per entry");
        Ok(Self {
            lang,
            backend,
            entries,
            rows: Rows::Dense { dim, data },
            zero_rows,
            meta,
        })
    }

    pub fn from_sparse(
        lang: Lang,
        backend: Backend,
        entries: Vec<IndexEntry>,
        dim: usize,
        mut rows: Vec<SparseVector>,
        meta: IndexMeta,
    ) -> Self {
        assert_eq!(rows.len(), entries.len(), "one vector per entry");
        let zero_rows = rows.iter_mut().map(|r| !r.normalize()).collect();
        Self {
            lang,
            backend,
            entries,
            rows: Rows::Sparse { dim, rows },
            zero_rows,
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        match &self.rows {
            Rows::Dense { dim, .. } | Rows::Sparse { dim, .. } => *dim,
        }
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    pub fn is_zero_row(&self, row: usize) -> bool {
        self.zero_rows[row]
    }

    /// Row `i` as a dense vector (sparse rows are expanded).
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        match &self.rows {
            Rows::Dense { dim, data } => data[i * dim..(i + 1) * dim].to_vec(),
            Rows::Sparse { dim, rows } => {
                let mut out = vec![0.0; *dim];
                for (&c, &v) in rows[i].indices.iter().zip(&rows[i].values) {
                    out[c as usize] = v;
                }
                out
            }
        }
    }

    /// Cosine score of `query` against row `i`.
    pub fn score(&self, query: &QueryVector, i: usize) -> f64 {
        match (&self.rows, query) {
            (Rows::Dense { dim, data }, QueryVector::Dense(q)) => {
                data[i * dim..(i + 1) * dim].iter().zip(q).map(|(a, b)| a * b).sum()
            }
            (Rows::Sparse { rows, .. }, QueryVector::Sparse(q)) => rows[i].dot(q),
            _ => 0.0,
        }
    }

    fn check_query(&self, query: &QueryVector) -> Result<(), RetrievalError> {
        let index_kind = match self.rows {
            Rows::Dense { .. } => "dense",
            Rows::Sparse { .. } => "sparse",
        };
        if query.kind() != index_kind {
            return Err(RetrievalError::KindMismatch {
                query: query.kind(),
                index: index_kind,
            });
        }
        if query.dim() != self.dim() {
            return Err(RetrievalError::QueryDimension {
                expected: self.dim(),
                found: query.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAnswer {
    pub id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopK {
    pub answers: Vec<ScoredAnswer>,
    /// The query vector was all zeros, so nothing could be ranked.
    pub no_signal: bool,
}

/// Exact top-k by cosine similarity over a full scan. `query` must be unit
/// length or zero; [`super::Encoder`] produces such vectors.
///
/// Filtered and zero rows are excluded before ranking. Results are sorted by
/// score descending, ties by ascending id.
pub fn cosine_top_k(
    query: &QueryVector,
    index: &VectorIndex,
    k: usize,
    filter: Option<&dyn Fn(&IndexEntry) -> bool>,
) -> Result<TopK, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    index.check_query(query)?;
    if query.is_zero() {
        return Ok(TopK {
            answers: Vec::new(),
            no_signal: true,
        });
    }

    let mut scored: Vec<(f64, usize)> = (0..index.len())
        .filter(|&i| !index.zero_rows[i])
        .filter(|&i| filter.is_none_or(|f| f(&index.entries[i])))
        .map(|i| (index.score(query, i), i))
        .collect();

    let entries = &index.entries;
    let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
        b.0.total_cmp(&a.0)
            .then_with(|| entries[a.1].id.cmp(&entries[b.1].id))
    };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);

    let answers = scored
        .into_iter()
        .enumerate()
        .map(|(r, (score, i))| ScoredAnswer {
            id: entries[i].id.clone(),
            score,
            rank: r + 1,
        })
        .collect();
    Ok(TopK {
        answers,
        no_signal: false,
    })
}

/// One line of a dense embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseRecord {
    pub id: String,
    pub vector: Vec<f64>,
}

pub fn parse_dense_records<R: BufRead>(reader: R) -> Result<Vec<DenseRecord>, RetrievalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let malformed = |message: String| RetrievalError::Malformed {
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?);
    }
    Ok(out)
}

/// Loads precomputed answer vectors for `lang`, reordered to bank order and
/// validated one-to-one against the bank's paragraphs in that language.
pub fn load_dense_index(
    path: impl AsRef<Path>,
    bank: &AnswerBank,
    lang: Lang,
) -> Result<VectorIndex, RetrievalError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let records = parse_dense_records(BufReader::new(bytes.as_slice()))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    dense_index_from_records(records, bank, lang, Some(digest))
}

pub fn dense_index_from_records(
    records: Vec<DenseRecord>,
    bank: &AnswerBank,
    lang: Lang,
    source_digest: Option<String>,
) -> Result<VectorIndex, RetrievalError> {
    let dim = records.first().map(|r| r.vector.len()).ok_or(RetrievalError::NoVectors)?;
    let mut by_id: HashMap<String, Vec<f64>> = HashMap::with_capacity(records.len());
    for rec in records {
        if rec.vector.len() != dim {
            return Err(RetrievalError::DimensionMismatch {
                id: rec.id,
                expected: dim,
                found: rec.vector.len(),
            });
        }
        if rec.vector.iter().any(|x| !x.is_finite()) {
            return Err(RetrievalError::NonFinite { id: rec.id });
        }
        match bank.get(&rec.id) {
            Some(p) if p.lang == lang => {}
            _ => return Err(RetrievalError::UnknownId(rec.id)),
        }
        if by_id.contains_key(&rec.id) {
            return Err(RetrievalError::DuplicateId(rec.id));
        }
        by_id.insert(rec.id, rec.vector);
    }

    let mut entries = Vec::new();
    let mut vectors = Vec::new();
    for p in bank.in_lang(lang) {
        let v = by_id
            .remove(&p.id)
            .ok_or_else(|| RetrievalError::MissingId(p.id.clone()))?;
        entries.push(IndexEntry {
            id: p.id.clone(),
            lesson: p.lesson,
        });
        vectors.push(v);
    }
    let meta = IndexMeta {
        source_digest,
        bank_digest: bank.digest(),
        ..IndexMeta::default()
    };
    VectorIndex::from_dense(lang, Backend::Dense, entries, vectors, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_lesson, AnswerBank};

    fn entry(id: &str) -> IndexEntry {
        IndexEntry {
            id: id.to_string(),
            lesson: 1,
        }
    }

    fn three_rows() -> VectorIndex {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        VectorIndex::from_dense(
            Lang::En,
            Backend::Dense,
            vec![entry("a1"), entry("a2"), entry("a3")],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![h, h]],
            IndexMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_ranking() {
        // Dot products with (1, 0): a1 = 1, a2 = 0, a3 = 1/sqrt(2).
        let top = cosine_top_k(&QueryVector::Dense(vec![1.0, 0.0]), &three_rows(), 3, None).unwrap();
        let got: Vec<_> = top.answers.iter().map(|a| (a.id.as_str(), a.rank)).collect();
        assert_eq!(got, [("a1", 1), ("a3", 2), ("a2", 3)]);
        assert!((top.answers[0].score - 1.0).abs() < 1e-12);
        assert!((top.answers[1].score - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(top.answers[2].score.abs() < 1e-12);
    }

    #[test]
    fn identity_query_k1() {
        let top = cosine_top_k(&QueryVector::Dense(vec![0.0, 1.0]), &three_rows(), 1, None).unwrap();
        assert_eq!(top.answers.len(), 1);
        assert_eq!(top.answers[0].id, "a2");
        assert!((top.answers[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let idx = VectorIndex::from_dense(
            Lang::En,
            Backend::Dense,
            vec![entry("b"), entry("a"), entry("c")],
            vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 0.0]],
            IndexMeta::default(),
        )
        .unwrap();
        let top = cosine_top_k(&QueryVector::Dense(vec![0.5f64.sqrt(), 0.5f64.sqrt()]), &idx, 2, None).unwrap();
        assert_eq!(top.answers[0].id, "a");
        assert_eq!(top.answers[1].id, "b");
    }

    #[test]
    fn zero_query_is_no_signal() {
        let top = cosine_top_k(&QueryVector::Dense(vec![0.0, 0.0]), &three_rows(), 3, None).unwrap();
        assert!(top.no_signal);
        assert!(top.answers.is_empty());
    }

    #[test]
    fn zero_rows_are_never_ranked() {
        let idx = VectorIndex::from_dense(
            Lang::En,
            Backend::Dense,
            vec![entry("z"), entry("x")],
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            IndexMeta::default(),
        )
        .unwrap();
        assert!(idx.is_zero_row(0));
        let top = cosine_top_k(&QueryVector::Dense(vec![1.0, 0.0]), &idx, 5, None).unwrap();
        assert_eq!(top.answers.len(), 1);
        assert_eq!(top.answers[0].id, "x");
    }

    #[test]
    fn filter_excludes_before_ranking() {
        let only_a2 = |e: &IndexEntry| e.id == "a2";
        let top = cosine_top_k(&QueryVector::Dense(vec![1.0, 0.0]), &three_rows(), 3, Some(&only_a2)).unwrap();
        assert_eq!(top.answers.len(), 1);
        assert_eq!(top.answers[0].rank, 1);
    }

    #[test]
    fn dimension_and_k_errors() {
        let idx = three_rows();
        assert!(matches!(
            cosine_top_k(&QueryVector::Dense(vec![1.0]), &idx, 1, None),
            Err(RetrievalError::QueryDimension { expected: 2, found: 1 })
        ));
        assert!(matches!(
            cosine_top_k(&QueryVector::Dense(vec![1.0, 0.0]), &idx, 0, None),
            Err(RetrievalError::InvalidK)
        ));
        assert!(matches!(
            cosine_top_k(&QueryVector::Sparse(SparseVector::zero(2)), &idx, 1, None),
            Err(RetrievalError::KindMismatch { .. })
        ));
    }

    #[test]
    fn rows_are_unit_norm() {
        let idx = three_rows();
        for i in 0..idx.len() {
            let n: f64 = idx.row_dense(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    fn small_bank() -> AnswerBank {
        let mut ps = ingest_lesson(b"One.\n\nTwo.\n\nThree.", Lang::En, 1).unwrap();
        ps.extend(ingest_lesson(b"Un.", Lang::Fr, 1).unwrap());
        AnswerBank::new(ps).unwrap()
    }

    fn records(lines: &str) -> Vec<DenseRecord> {
        parse_dense_records(lines.as_bytes()).unwrap()
    }

    #[test]
    fn dense_load_reorders_to_bank_order() {
        let recs = records(
            "{\"id\":\"en-L1-P02\",\"vector\":[0,3]}\n{\"id\":\"en-L1-P00\",\"vector\":[2,0]}\n{\"id\":\"en-L1-P01\",\"vector\":[1,1]}\n",
        );
        let idx = dense_index_from_records(recs, &small_bank(), Lang::En, None).unwrap();
        assert_eq!(idx.ids().collect::<Vec<_>>(), ["en-L1-P00", "en-L1-P01", "en-L1-P02"]);
        assert_eq!(idx.row_dense(0), [1.0, 0.0]);
        assert_eq!(idx.row_dense(2), [0.0, 1.0]);
        assert_eq!(idx.dim(), 2);
    }

    #[test]
    fn dense_load_validation() {
        let bank = small_bank();
        let missing = records("{\"id\":\"en-L1-P00\",\"vector\":[1,0]}\n{\"id\":\"en-L1-P01\",\"vector\":[1,0]}\n");
        assert!(matches!(
            dense_index_from_records(missing, &bank, Lang::En, None),
            Err(RetrievalError::MissingId(id)) if id == "en-L1-P02"
        ));
        let dim = records("{\"id\":\"en-L1-P00\",\"vector\":[1,0]}\n{\"id\":\"en-L1-P01\",\"vector\":[1,0,0]}\n");
        assert!(matches!(
            dense_index_from_records(dim, &bank, Lang::En, None),
            Err(RetrievalError::DimensionMismatch { id, .. }) if id == "en-L1-P01"
        ));
        let unknown = records("{\"id\":\"fr-L1-P00\",\"vector\":[1,0]}\n");
        assert!(matches!(
            dense_index_from_records(unknown, &bank, Lang::En, None),
            Err(RetrievalError::UnknownId(_))
        ));
        let nan = vec![DenseRecord {
            id: "en-L1-P00".into(),
            vector: vec![f64::NAN, 1.0],
        }];
        assert!(matches!(
            dense_index_from_records(nan, &bank, Lang::En, None),
            Err(RetrievalError::NonFinite { .. })
        ));
        assert!(matches!(
            parse_dense_records("{\"id\":1}\n".as_bytes()),
            Err(RetrievalError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn zero_dense_record_is_flagged() {
        let recs = records(
            "{\"id\":\"en-L1-P00\",\"vector\":[0,0]}\n{\"id\":\"en-L1-P01\",\"vector\":[1,0]}\n{\"id\":\"en-L1-P02\",\"vector\":[0,1]}\n",
        );
        let idx = dense_index_from_records(recs, &small_bank(), Lang::En, None).unwrap();
        assert!(idx.is_zero_row(0));
        let top = cosine_top_k(&QueryVector::Dense(vec![1.0, 1.0]), &idx, 3, None).unwrap();
        assert!(top.answers.iter().all(|a| a.id != "en-L1-P00"));
    }
}
