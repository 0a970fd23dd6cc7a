use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{EvalCell, EvalError, EvalReport};
use crate::corpus::QaType;
use crate::lang::Lang;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(EvalError::Parse(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => render_csv(report),
    }
}

/// Reads back a JSON or CSV rendering.
pub fn parse_report(doc: &str, format: ReportFormat) -> Result<EvalReport, EvalError> {
    match format {
        ReportFormat::Json => serde_json::from_str(doc).map_err(|e| EvalError::Parse(e.to_string())),
        ReportFormat::Csv => parse_csv(doc),
        ReportFormat::Text => Err(EvalError::Parse("text reports are not machine readable".into())),
    }
}

fn percent(v: f64) -> String {
    format!("{v:.1}%")
}

/// Pipe table with grouped header rows. Each header level lists
/// `(label, span)` over the leaf columns.
struct Grid {
    header: Vec<Vec<(String, usize)>>,
    rows: Vec<Vec<String>>,
}

impl Grid {
    fn render(&self, out: &mut String) {
        let n = self.header.last().map_or(0, |l| l.iter().map(|(_, s)| s).sum());
        let mut widths = vec![3usize; n];
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        for level in self.header.iter().rev() {
            let mut col = 0;
            for (label, span) in level {
                let have: usize = widths[col..col + span].iter().sum::<usize>() + 3 * (span - 1);
                let need = label.chars().count();
                if need > have {
                    let extra = need - have;
                    for (i, w) in widths[col..col + span].iter_mut().enumerate() {
                        *w += extra / span + usize::from(i < extra % span);
                    }
                }
                col += span;
            }
        }

        for level in &self.header {
            let mut col = 0;
            out.push('|');
            for (label, span) in level {
                let w = widths[col..col + span].iter().sum::<usize>() + 3 * (span - 1);
                let _ = write!(out, " {label:<w$} |");
                col += span;
            }
            out.push('\n');
        }
        out.push('|');
        for w in &widths {
            let _ = write!(out, "{}|", "-".repeat(w + 2));
        }
        out.push('\n');
        for row in &self.rows {
            out.push('|');
            for (w, cell) in widths.iter().zip(row) {
                let _ = write!(out, " {cell:<w$} |");
            }
            out.push('\n');
        }
    }
}

fn axes(report: &EvalReport) -> (Vec<Lang>, Vec<QaType>) {
    let mut langs: Vec<Lang> = report.cells.iter().map(|c| c.lang).collect();
    langs.sort();
    langs.dedup();
    let mut qtypes: Vec<QaType> = report.cells.iter().map(|c| c.qtype).collect();
    qtypes.sort();
    qtypes.dedup();
    (langs, qtypes)
}

/// Mean duration over a row's cells in one language, weighted by questions.
fn row_duration(cells: &[&EvalCell]) -> Option<(f64, bool)> {
    let timed: Vec<_> = cells
        .iter()
        .filter_map(|c| c.mean_seconds_per_question.map(|m| (m, c.n_questions, c.timing_stable)))
        .collect();
    let n: usize = timed.iter().map(|t| t.1).sum();
    if n == 0 {
        return None;
    }
    let mean = timed.iter().map(|(m, k, _)| m * *k as f64).sum::<f64>() / n as f64;
    Some((mean, timed.iter().all(|t| t.2)))
}

fn render_text(report: &EvalReport) -> String {
    let (langs, qtypes) = axes(report);
    let labels = report.backend_labels();
    let ks = &report.config.k_values;
    let k1 = ks[0];
    let mut out = String::new();
    let mut unstable = false;

    let _ = writeln!(out, "Table A: Top-{k1} accuracy and duration\n");
    let mut top = vec![("Model".to_string(), 1)];
    top.extend(langs.iter().map(|l| (l.display_name().to_string(), qtypes.len())));
    top.push(("Duration (secs per question)".to_string(), langs.len()));
    let mut leaf = vec![(String::new(), 1)];
    leaf.extend(langs.iter().flat_map(|_| qtypes.iter().map(|q| (q.display_name().to_string(), 1))));
    leaf.extend(langs.iter().map(|l| (l.display_name().to_string(), 1)));
    let mut rows = Vec::new();
    for label in &labels {
        let mut row = vec![label.to_string()];
        for &l in &langs {
            for &q in &qtypes {
                let v = report.cell(label, l, q).and_then(|c| c.accuracy(k1));
                row.push(v.map_or("-".into(), percent));
            }
        }
        for &l in &langs {
            let cells: Vec<&EvalCell> = report
                .cells
                .iter()
                .filter(|c| c.backend == *label && c.lang == l)
                .collect();
            row.push(match row_duration(&cells) {
                Some((d, stable)) => {
                    unstable |= !stable;
                    format!("{d:.6}{}", if stable { "" } else { "*" })
                }
                None => "-".into(),
            });
        }
        rows.push(row);
    }
    Grid { header: vec![top, leaf], rows }.render(&mut out);

    let ks_text: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
    let _ = writeln!(out, "\nTable B: Top {} accuracy (%)\n", ks_text.join(", "));
    let mut top = vec![("Model".to_string(), 1)];
    top.extend(langs.iter().map(|l| (l.display_name().to_string(), qtypes.len() * ks.len())));
    let mut mid = vec![(String::new(), 1)];
    mid.extend(langs.iter().flat_map(|_| qtypes.iter().map(|q| (q.display_name().to_string(), ks.len()))));
    let mut leaf = vec![(String::new(), 1)];
    for _ in 0..langs.len() * qtypes.len() {
        leaf.extend(ks.iter().map(|k| (format!("Top {k}"), 1)));
    }
    let mut rows = Vec::new();
    for label in &labels {
        let mut row = vec![label.to_string()];
        for &l in &langs {
            for &q in &qtypes {
                let cell = report.cell(label, l, q);
                for &k in ks {
                    let v = cell.and_then(|c| c.accuracy(k));
                    row.push(v.map_or("-".into(), |v| format!("{v:.1}")));
                }
            }
        }
        rows.push(row);
    }
    Grid { header: vec![top, mid, leaf], rows }.render(&mut out);

    out.push('\n');
    if !report.random_baseline.is_empty() {
        let parts: Vec<String> = report
            .random_baseline
            .iter()
            .map(|(l, b)| format!("{} {}", l.display_name(), percent(*b)))
            .collect();
        let _ = writeln!(out, "Random baseline (top-1): {}", parts.join(", "));
        let below = report.below_baseline();
        if below.is_empty() {
            let _ = writeln!(out, "Every cell beats the random baseline at top-{k1}.");
        } else {
            let names: Vec<String> = below
                .iter()
                .map(|c| format!("{} {} {}", c.backend, c.lang, c.qtype))
                .collect();
            let _ = writeln!(out, "At or below the random baseline at top-{k1}: {}", names.join(", "));
        }
    }
    if unstable {
        let _ = writeln!(out, "* repeat timings differ by more than 3x");
    }
    let _ = writeln!(out, "Environment: {}", report.environment);
    let _ = writeln!(out, "Bank digest: {}", report.bank_digest);
    out
}

const CSV_HEADER: [&str; 9] = [
    "backend",
    "lang",
    "qtype",
    "n_questions",
    "k",
    "hits",
    "accuracy",
    "mean_seconds_per_question",
    "timing_stable",
];

fn opt_f64(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Long format, one row per (cell, k). Report-level fields ride along as
/// `# key: json` comment lines.
fn render_csv(report: &EvalReport) -> String {
    let mut out = String::new();
    let meta = [
        ("schema_version", serde_json::to_string(&report.schema_version)),
        ("environment", serde_json::to_string(&report.environment)),
        ("bank_digest", serde_json::to_string(&report.bank_digest)),
        ("config", serde_json::to_string(&report.config)),
        ("random_baseline", serde_json::to_string(&report.random_baseline)),
    ];
    for (key, value) in meta {
        let _ = writeln!(out, "# {key}: {}", value.expect("report serializes"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for c in &report.cells {
        for (&k, &hits) in &c.top_k_hits {
            w.write_record([
                c.backend.clone(),
                c.lang.to_string(),
                c.qtype.to_string(),
                c.n_questions.to_string(),
                k.to_string(),
                hits.to_string(),
                opt_f64(c.accuracy(k)),
                opt_f64(c.mean_seconds_per_question),
                c.timing_stable.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 input"));
    out
}

fn parse_csv(doc: &str) -> Result<EvalReport, EvalError> {
    let err = |m: String| EvalError::Parse(m);
    let mut meta: BTreeMap<&str, &str> = BTreeMap::new();
    for line in doc.lines().filter_map(|l| l.strip_prefix("# ")) {
        if let Some((k, v)) = line.split_once(": ") {
            meta.insert(k, v);
        }
    }
    fn field<T: serde::de::DeserializeOwned>(meta: &BTreeMap<&str, &str>, key: &str) -> Result<T, EvalError> {
        let raw = meta.get(key).ok_or_else(|| EvalError::Parse(format!("missing {key}")))?;
        serde_json::from_str(raw).map_err(|e| EvalError::Parse(format!("{key}: {e}")))
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(doc.as_bytes());
    let mut cells: Vec<EvalCell> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let get = |j: usize| rec.get(j).ok_or_else(|| err(format!("row {}: missing column {}", i + 1, CSV_HEADER[j])));
        let bad = |j: usize, e: &dyn std::fmt::Display| err(format!("row {}: {}: {e}", i + 1, CSV_HEADER[j]));
        let opt = |j: usize| -> Result<Option<f64>, EvalError> {
            let s = get(j)?;
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| bad(j, &e))
            }
        };
        let backend = get(0)?.to_string();
        let lang: Lang = get(1)?.parse().map_err(|e| bad(1, &e))?;
        let qtype: QaType = get(2)?.parse().map_err(|e| bad(2, &e))?;
        let n: usize = get(3)?.parse().map_err(|e| bad(3, &e))?;
        let k: usize = get(4)?.parse().map_err(|e| bad(4, &e))?;
        let hits: usize = get(5)?.parse().map_err(|e| bad(5, &e))?;
        let acc = opt(6)?;
        let mean = opt(7)?;
        let stable: bool = get(8)?.parse().map_err(|e| bad(8, &e))?;

        let same = cells
            .last()
            .is_some_and(|c| c.backend == backend && c.lang == lang && c.qtype == qtype);
        if !same {
            cells.push(EvalCell {
                backend,
                lang,
                qtype,
                n_questions: n,
                top_k_hits: BTreeMap::new(),
                top_k_accuracy: BTreeMap::new(),
                mean_seconds_per_question: mean,
                timing_stable: stable,
            });
        }
        let cell = cells.last_mut().expect("pushed above");
        cell.top_k_hits.insert(k, hits);
        cell.top_k_accuracy.insert(k, acc);
    }

    Ok(EvalReport {
        schema_version: field(&meta, "schema_version")?,
        cells,
        environment: field(&meta, "environment")?,
        bank_digest: field(&meta, "bank_digest")?,
        config: field(&meta, "config")?,
        random_baseline: field(&meta, "random_baseline")?,
    })
}
