//! Offline top-k accuracy and latency evaluation over labelled QA pairs.

mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{QaSet, QaType};
use crate::lang::Lang;
use crate::qa_engine::{Answerer, AskRequest, EngineError};
use crate::retrieval::Backend;

pub use render::{parse_report, render_report, ReportFormat};

pub const SCHEMA_VERSION: u32 = 1;

/// A cell's timing is flagged when its slowest repeat is more than this
/// factor slower than its fastest.
pub const TIMING_SPREAD_LIMIT: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("random baseline needs at least one answer")]
    NoAnswers,
    #[error("question {qid} with {backend}: {source}")]
    Ask {
        qid: String,
        backend: Backend,
        #[source]
        source: EngineError,
    },
    #[error("cannot merge reports: {0}")]
    Merge(String),
    #[error("cannot parse report: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub backends: Vec<Backend>,
    pub languages: Vec<Lang>,
    pub qtypes: Vec<QaType>,
    pub k_values: Vec<usize>,
    pub timing_repeats: usize,
    pub warmup_queries: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            backends: vec![Backend::Tfidf],
            languages: Lang::ALL.to_vec(),
            qtypes: QaType::ALL.to_vec(),
            k_values: vec![1, 3, 5],
            timing_repeats: 3,
            warmup_queries: 1,
        }
    }
}

impl EvalConfig {
    pub fn with_backends(mut self, backends: impl Into<Vec<Backend>>) -> Self {
        self.backends = backends.into();
        self
    }

    pub fn with_languages(mut self, langs: impl Into<Vec<Lang>>) -> Self {
        self.languages = langs.into();
        self
    }

    pub fn with_k_values(mut self, k: impl Into<Vec<usize>>) -> Self {
        self.k_values = k.into();
        self
    }

    pub fn with_timing(mut self, repeats: usize, warmup: usize) -> Self {
        self.timing_repeats = repeats;
        self.warmup_queries = warmup;
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidConfig(m.to_string()));
        if self.backends.is_empty() || self.languages.is_empty() || self.qtypes.is_empty() {
            return bad("backends, languages and qtypes must be non-empty");
        }
        if self.k_values.is_empty() || self.k_values[0] == 0 {
            return bad("k_values must be positive integers");
        }
        if self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("k_values must be sorted ascending without duplicates");
        }
        if self.timing_repeats == 0 {
            return bad("timing_repeats must be at least 1");
        }
        Ok(())
    }

    fn max_k(&self) -> usize {
        *self.k_values.last().expect("validated non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    /// Row label; the backend name unless the report was relabelled.
    pub backend: String,
    pub lang: Lang,
    pub qtype: QaType,
    pub n_questions: usize,
    pub top_k_hits: BTreeMap<usize, usize>,
    /// Percentages; `None` for an empty cell.
    pub top_k_accuracy: BTreeMap<usize, Option<f64>>,
    pub mean_seconds_per_question: Option<f64>,
    pub timing_stable: bool,
}

impl EvalCell {
    pub fn accuracy(&self, k: usize) -> Option<f64> {
        self.top_k_accuracy.get(&k).copied().flatten()
    }

    fn from_hits(
        backend: String,
        lang: Lang,
        qtype: QaType,
        n: usize,
        hits: BTreeMap<usize, usize>,
    ) -> Self {
        let top_k_accuracy = hits
            .iter()
            .map(|(&k, &h)| (k, (n > 0).then(|| 100.0 * h as f64 / n as f64)))
            .collect();
        Self {
            backend,
            lang,
            qtype,
            n_questions: n,
            top_k_hits: hits,
            top_k_accuracy,
            mean_seconds_per_question: None,
            timing_stable: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub cells: Vec<EvalCell>,
    pub environment: String,
    pub bank_digest: String,
    pub config: EvalConfig,
    /// Expected top-1 accuracy of a uniform random pick, per bank language.
    pub random_baseline: BTreeMap<Lang, f64>,
}

impl EvalReport {
    pub fn cell(&self, backend: &str, lang: Lang, qtype: QaType) -> Option<&EvalCell> {
        self.cells
            .iter()
            .find(|c| c.backend == backend && c.lang == lang && c.qtype == qtype)
    }

    /// Row labels in first-appearance order.
    pub fn backend_labels(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.backend.as_str()) {
                seen.push(c.backend.as_str());
            }
        }
        seen
    }

    pub fn relabel(&mut self, from: &str, to: &str) {
        for c in self.cells.iter_mut().filter(|c| c.backend == from) {
            c.backend = to.to_string();
        }
    }

    /// Combines runs against the same bank, e.g. several dense vector files
    /// evaluated separately and relabelled. Labels must not collide.
    pub fn merge(mut self, other: EvalReport) -> Result<EvalReport, EvalError> {
        if self.bank_digest != other.bank_digest {
            return Err(EvalError::Merge("reports were run against different banks".into()));
        }
        if self.config.k_values != other.config.k_values {
            return Err(EvalError::Merge("reports use different k values".into()));
        }
        for c in &other.cells {
            if self.cell(&c.backend, c.lang, c.qtype).is_some() {
                return Err(EvalError::Merge(format!("duplicate row label {}", c.backend)));
            }
        }
        for b in other.config.backends {
            if !self.config.backends.contains(&b) {
                self.config.backends.push(b);
            }
        }
        for l in other.config.languages {
            if !self.config.languages.contains(&l) {
                self.config.languages.push(l);
            }
        }
        self.random_baseline.extend(other.random_baseline);
        self.cells.extend(other.cells);
        Ok(self)
    }

    /// Cells whose top-1 accuracy does not beat a random pick.
    pub fn below_baseline(&self) -> Vec<&EvalCell> {
        let k = self.config.k_values[0];
        self.cells
            .iter()
            .filter(|c| {
                let base = self.random_baseline.get(&c.lang).copied();
                matches!((c.accuracy(k), base), (Some(a), Some(b)) if a <= b)
            })
            .collect()
    }
}

/// Expected top-1 accuracy, in percent, of picking one of `n_answers` uniformly.
pub fn random_baseline(n_answers: usize) -> Result<f64, EvalError> {
    if n_answers == 0 {
        return Err(EvalError::NoAnswers);
    }
    Ok(100.0 / n_answers as f64)
}

fn environment(config: &EvalConfig) -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}/{}, {cpus} logical cpus; duration is wall-clock time of each full ask call, \
         {} warmup quer{} discarded per cell, mean over {} sequential repeat{}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        config.warmup_queries,
        if config.warmup_queries == 1 { "y" } else { "ies" },
        config.timing_repeats,
        if config.timing_repeats == 1 { "" } else { "s" },
    )
}

/// Runs every question of every requested cell through `engine`.
///
/// Questions are asked in their labelled language with tags left as text and
/// no confidence threshold. Timing is sequential.
pub fn evaluate<A: Answerer + ?Sized>(
    qaset: &QaSet,
    engine: &A,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    config.validate()?;
    let max_k = config.max_k();
    let mut cells = Vec::new();

    for &backend in &config.backends {
        for &lang in &config.languages {
            for &qtype in &config.qtypes {
                let pairs: Vec<_> = qaset.cell(lang, qtype).collect();
                let ask = |question: &str| {
                    let req = AskRequest {
                        top_k: Some(max_k),
                        lang_override: Some(lang),
                        threshold: Some(f64::NEG_INFINITY),
                        backend: Some(backend),
                        ignore_tags: true,
                        ..AskRequest::new(question)
                    };
                    engine.ask(&req)
                };
                let wrap = |qid: &str, source| EvalError::Ask {
                    qid: qid.to_string(),
                    backend,
                    source,
                };

                for p in pairs.iter().cycle().take(config.warmup_queries) {
                    ask(&p.question).map_err(|e| wrap(&p.qid, e))?;
                }

                let mut hits: BTreeMap<usize, usize> = config.k_values.iter().map(|&k| (k, 0)).collect();
                let mut repeat_means = Vec::with_capacity(config.timing_repeats);
                for repeat in 0..config.timing_repeats {
                    let mut total = 0.0;
                    for p in &pairs {
                        let start = Instant::now();
                        let resp = ask(&p.question).map_err(|e| wrap(&p.qid, e))?;
                        total += start.elapsed().as_secs_f64();
                        if repeat > 0 {
                            continue;
                        }
                        let gold: BTreeSet<&str> = p.gold_ids.iter().map(String::as_str).collect();
                        let first_hit = resp.answers.iter().position(|a| gold.contains(a.id.as_str()));
                        if let Some(pos) = first_hit {
                            for (&k, h) in hits.iter_mut() {
                                if pos < k {
                                    *h += 1;
                                }
                            }
                        }
                    }
                    if !pairs.is_empty() {
                        repeat_means.push(total / pairs.len() as f64);
                    }
                }

                let mut cell = EvalCell::from_hits(backend.to_string(), lang, qtype, pairs.len(), hits);
                if !repeat_means.is_empty() {
                    let mean = repeat_means.iter().sum::<f64>() / repeat_means.len() as f64;
                    let lo = repeat_means.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = repeat_means.iter().copied().fold(0.0, f64::max);
                    cell.mean_seconds_per_question = Some(mean);
                    cell.timing_stable = lo > 0.0 && hi <= TIMING_SPREAD_LIMIT * lo;
                }
                cells.push(cell);
            }
        }
    }

    let bank = engine.bank();
    let random_baseline = config
        .languages
        .iter()
        .filter_map(|&l| random_baseline(bank.count_lang(l)).ok().map(|b| (l, b)))
        .collect();
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        cells,
        environment: environment(config),
        bank_digest: bank.digest(),
        config: config.clone(),
        random_baseline,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::corpus::{AnswerBank, AnswerParagraph, QaPair};
    use crate::qa_engine::{Answer, AskResponse};

    fn bank(n: usize) -> AnswerBank {
        let paragraphs = (0..n)
            .map(|i| AnswerParagraph {
                id: AnswerParagraph::make_id(Lang::En, 1, i),
                lang: Lang::En,
                lesson: 1,
                ordinal: i,
                text: format!("paragraph {i}"),
                figure_refs: vec![],
            })
            .collect();
        AnswerBank::new(paragraphs).unwrap()
    }

    /// Returns a fixed ranking per question.
    struct Scripted {
        bank: AnswerBank,
        rankings: HashMap<String, Vec<String>>,
    }

    impl Answerer for Scripted {
        fn ask(&self, req: &AskRequest) -> Result<AskResponse, EngineError> {
            assert!(req.ignore_tags);
            assert_eq!(req.threshold, Some(f64::NEG_INFINITY));
            let ids = &self.rankings[&req.question];
            let answers = ids
                .iter()
                .take(req.top_k.unwrap())
                .enumerate()
                .map(|(i, id)| Answer {
                    id: id.clone(),
                    text: String::new(),
                    figure_refs: vec![],
                    score: 1.0 - i as f64 * 0.1,
                    rank: i + 1,
                })
                .collect();
            Ok(AskResponse {
                lang_detected: req.lang_override.unwrap(),
                answered: true,
                answers,
                message: None,
            })
        }

        fn bank(&self) -> &AnswerBank {
            &self.bank
        }
    }

    fn id(i: usize) -> String {
        AnswerParagraph::make_id(Lang::En, 1, i)
    }

    /// `gold_rank[q]` is the 0-based position of question q's gold answer,
    /// or None to leave it out of the ranking entirely.
    fn scripted(gold_rank: &[Option<usize>]) -> (Scripted, QaSet) {
        let bank = bank(10);
        let mut rankings = HashMap::new();
        let mut pairs = Vec::new();
        for (q, rank) in gold_rank.iter().enumerate() {
            let gold = id(q % 10);
            let mut ranking: Vec<String> = (0..10).map(id).filter(|i| *i != gold).collect();
            if let Some(r) = rank {
                ranking.insert(*r, gold.clone());
            }
            let question = format!("question {q}");
            rankings.insert(question.clone(), ranking);
            pairs.push(QaPair {
                qid: format!("q{q}"),
                lang: Lang::En,
                qtype: QaType::Quiz,
                question,
                gold_ids: vec![gold],
            });
        }
        (Scripted { bank, rankings }, QaSet { pairs })
    }

    fn quiz_config() -> EvalConfig {
        EvalConfig {
            languages: vec![Lang::En],
            qtypes: vec![QaType::Quiz],
            ..EvalConfig::default()
        }
    }

    #[test]
    fn baseline_values() {
        assert!((random_baseline(39).unwrap() - 2.564).abs() < 5e-4);
        assert_eq!(random_baseline(1).unwrap(), 100.0);
        assert_eq!(random_baseline(4).unwrap(), 25.0);
        assert!(matches!(random_baseline(0), Err(EvalError::NoAnswers)));
    }

    #[test]
    fn six_of_twenty_is_thirty_percent() {
        let ranks: Vec<Option<usize>> = (0..20).map(|q| if q < 6 { Some(0) } else { Some(4) }).collect();
        let (engine, qa) = scripted(&ranks);
        let report = evaluate(&qa, &engine, &quiz_config()).unwrap();
        let cell = report.cell("tfidf", Lang::En, QaType::Quiz).unwrap();
        assert_eq!(cell.n_questions, 20);
        assert_eq!(cell.top_k_hits[&1], 6);
        assert_eq!(cell.accuracy(1), Some(30.0));
        assert_eq!(cell.accuracy(3), Some(30.0));
        assert_eq!(cell.accuracy(5), Some(100.0));
        assert!(cell.mean_seconds_per_question.unwrap() > 0.0);
    }

    #[test]
    fn any_gold_counts() {
        let (mut engine, mut qa) = scripted(&[Some(2)]);
        qa.pairs[0].gold_ids.push(engine.rankings["question 0"][0].clone());
        let report = evaluate(&qa, &engine, &quiz_config()).unwrap();
        assert_eq!(report.cells[0].accuracy(1), Some(100.0));
        engine.rankings.get_mut("question 0").unwrap().remove(0);
        let report = evaluate(&qa, &engine, &quiz_config()).unwrap();
        assert_eq!(report.cells[0].accuracy(1), Some(0.0));
        assert_eq!(report.cells[0].accuracy(3), Some(100.0));
    }

    #[test]
    fn empty_cell_is_reported_not_fatal() {
        let (engine, qa) = scripted(&[Some(0)]);
        let report = evaluate(&qa, &engine, &EvalConfig::default()).unwrap();
        assert_eq!(report.cells.len(), 4);
        let fr = report.cell("tfidf", Lang::Fr, QaType::Student).unwrap();
        assert_eq!(fr.n_questions, 0);
        assert_eq!(fr.accuracy(1), None);
        assert_eq!(fr.mean_seconds_per_question, None);
        assert!(render_report(&report, ReportFormat::Text).contains("| -"));
    }

    #[test]
    fn config_validation() {
        for k in [vec![], vec![0, 1], vec![3, 1], vec![1, 1, 3]] {
            assert!(quiz_config().with_k_values(k).validate().is_err());
        }
        assert!(quiz_config().with_timing(0, 1).validate().is_err());
        assert!(quiz_config().with_k_values([2, 7]).validate().is_ok());
    }

    #[test]
    fn json_and_csv_round_trip() {
        let ranks: Vec<Option<usize>> = (0..7).map(|q| Some(q % 4)).collect();
        let (engine, qa) = scripted(&ranks);
        let mut report = evaluate(&qa, &engine, &EvalConfig::default()).unwrap();
        report.cells[0].mean_seconds_per_question = Some(0.1 + 0.2);
        report.cells[0].timing_stable = false;
        for format in [ReportFormat::Json, ReportFormat::Csv] {
            let doc = render_report(&report, format);
            assert_eq!(parse_report(&doc, format).unwrap(), report, "{format:?}");
        }
        assert_eq!(report.schema_version, 1);
        assert!(render_report(&report, ReportFormat::Json).contains("\"schema_version\": 1"));
    }

    #[test]
    fn single_cell_renders_one_row_tables() {
        let (engine, qa) = scripted(&[Some(0), None]);
        let report = evaluate(&qa, &engine, &quiz_config()).unwrap();
        let text = render_report(&report, ReportFormat::Text);
        let body: Vec<&str> = text.lines().filter(|l| l.starts_with("| tfidf")).collect();
        assert_eq!(body.len(), 2);
        assert!(body[0].contains("50.0%"));
        assert!(text.contains("Random baseline (top-1): English 10.0%"));
    }

    #[test]
    fn merge_relabels_rows() {
        let (engine, qa) = scripted(&[Some(0)]);
        let mut a = evaluate(&qa, &engine, &quiz_config()).unwrap();
        let b = a.clone();
        assert!(a.clone().merge(b.clone()).is_err());
        a.relabel("tfidf", "model A");
        let merged = a.merge(b).unwrap();
        assert_eq!(merged.backend_labels(), ["model A", "tfidf"]);
    }
}
