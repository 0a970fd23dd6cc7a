use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use super::CorpusError;

static CAPTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(figure|fig\.?)(\s|\d|:|\.|$)").unwrap());
static FIGURE_REF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:figure|fig\.)\s*(\d+)").unwrap());

/// Output of [`strip_noncontent`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stripped {
    /// Surviving prose, paragraphs separated by one blank line.
    pub clean: String,
    /// Paragraph position in `clean` -> figure labels mentioned in it.
    pub figure_refs: BTreeMap<usize, Vec<String>>,
}

/// Removes code blocks, tables and figure captions from a lesson document.
///
/// Removed lines are replaced by blank lines, so a code block sitting
/// between two prose lines always separates them into two paragraphs.
pub fn strip_noncontent(raw: &[u8]) -> Result<Stripped, CorpusError> {
    let text = std::str::from_utf8(raw).map_err(|e| CorpusError::Decode {
        offset: e.valid_up_to(),
    })?;

    let mut kept: Vec<&str> = Vec::new();
    let mut fence: Option<&'static str> = None;
    let mut prev_blank = true;
    let mut in_indented = false;

    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(marker) = fence {
            if trimmed.starts_with(marker) {
                fence = None;
            }
            kept.push("");
            prev_blank = true;
            continue;
        }
        if trimmed.starts_with("```") {
            fence = Some("```");
        } else if trimmed.starts_with("~~~") {
            fence = Some("~~~");
        }
        if fence.is_some() {
            kept.push("");
            prev_blank = true;
            in_indented = false;
            continue;
        }
        if trimmed.is_empty() {
            kept.push("");
            prev_blank = true;
            in_indented = false;
            continue;
        }
        let indented = line.starts_with("    ") || line.starts_with('\t');
        if indented && (prev_blank || in_indented) {
            in_indented = true;
            kept.push("");
            continue;
        }
        in_indented = false;
        let is_table = trimmed.matches('|').count() >= 2;
        if is_table || CAPTION.is_match(trimmed) {
            kept.push("");
            prev_blank = true;
            continue;
        }
        kept.push(line);
        prev_blank = false;
    }

    let paragraphs = split_paragraphs(&kept.join("\n"));
    let mut figure_refs = BTreeMap::new();
    for (i, p) in paragraphs.iter().enumerate() {
        let refs = figure_refs_in(p);
        if !refs.is_empty() {
            figure_refs.insert(i, refs);
        }
    }
    Ok(Stripped {
        clean: paragraphs.join("\n\n"),
        figure_refs,
    })
}

/// Inline figure references, normalised to "Figure N", deduplicated in
/// order of first mention.
pub(crate) fn figure_refs_in(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for cap in FIGURE_REF.captures_iter(text) {
        let label = format!("Figure {}", &cap[1]);
        if !out.contains(&label) {
            out.push(label);
        }
    }
    out
}

/// Splits text on runs of blank lines. Paragraphs are trimmed and empty
/// fragments dropped.
pub fn split_paragraphs(clean: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in clean.lines() {
        if line.trim().is_empty() {
            flush(&mut current, &mut out);
        } else {
            current.push(line);
        }
    }
    flush(&mut current, &mut out);
    out
}

fn flush(current: &mut Vec<&str>, out: &mut Vec<String>) {
    if current.is_empty() {
        return;
    }
    let joined = current.join("\n");
    let trimmed = joined.trim();
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
    current.clear();
}
