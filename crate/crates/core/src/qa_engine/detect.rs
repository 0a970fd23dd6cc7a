//! Character-trigram language identification for the two course languages.
//!
//! Each profile is a smoothed log-probability table of character trigrams
//! plus a stopword set. A text is scored per language as the sum of its
//! trigram log-probabilities plus a fixed bonus per stopword hit; the
//! scores go through a softmax and the confidence is the gap between the
//! best and second-best probability.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::corpus::strip_noncontent;
use crate::lang::Lang;

/// Log-likelihood credit (in nats) for each token found in a language's
/// stopword list.
pub const STOPWORD_BONUS: f64 = 2.0;

/// Texts with fewer characters than this are not classified.
pub const MIN_DETECT_CHARS: usize = 3;

const EN_COURSE: &str = include_str!("../../data/lesson1_en.md");
const FR_COURSE: &str = include_str!("../../data/lesson1_fr.md");
const EN_GENERAL: &str = include_str!("../../data/profiles/en_general.txt");
const FR_GENERAL: &str = include_str!("../../data/profiles/fr_general.txt");
const EN_STOPWORDS: &str = include_str!("../../data/profiles/en_stopwords.txt");
const FR_STOPWORDS: &str = include_str!("../../data/profiles/fr_stopwords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub lang: Lang,
    /// Normalised margin in [0, 1] between the two language posteriors.
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct LanguageProfile {
    pub lang: Lang,
    pub trigram_weights: HashMap<String, f64>,
    /// Log-probability assigned to trigrams never seen in training.
    pub unseen_weight: f64,
    pub stopwords: HashSet<String>,
}

impl LanguageProfile {
    pub fn train(lang: Lang, text: &str, stopwords: &str) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in trigrams(text) {
            *counts.entry(t).or_default() += 1;
        }
        let total: usize = counts.values().sum();
        let denom = (total + counts.len() + 1) as f64;
        let trigram_weights = counts
            .into_iter()
            .map(|(t, c)| (t, ((c + 1) as f64 / denom).ln()))
            .collect();
        Self {
            lang,
            trigram_weights,
            unseen_weight: (1.0 / denom).ln(),
            stopwords: words(stopwords).into_iter().collect(),
        }
    }

    pub fn score(&self, text: &str) -> f64 {
        let trigram_ll: f64 = trigrams(text)
            .iter()
            .map(|t| *self.trigram_weights.get(t).unwrap_or(&self.unseen_weight))
            .sum();
        let hits = words(text)
            .iter()
            .filter(|w| self.stopwords.contains(w.as_str()))
            .count();
        trigram_ll + STOPWORD_BONUS * hits as f64
    }
}

/// Lowercased alphabetic words; apostrophes, hyphens, digits and
/// punctuation all separate words.
fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Character trigrams of each word padded with one space on both sides.
fn trigrams(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in words(text) {
        let padded: Vec<char> = format!(" {w} ").chars().collect();
        out.extend(padded.windows(3).map(|t| t.iter().collect::<String>()));
    }
    out
}

pub struct LanguageDetector {
    profiles: Vec<LanguageProfile>,
}

impl LanguageDetector {
    pub fn new(profiles: Vec<LanguageProfile>) -> Self {
        Self { profiles }
    }

    /// Profiles trained on the bundled lesson texts, a short general-purpose
    /// text and a stopword list per language.
    pub fn bundled() -> Self {
        let course = |raw: &str| {
            strip_noncontent(raw.as_bytes())
                .map(|s| s.clean)
                .unwrap_or_default()
        };
        let en = format!("{}\n{}", course(EN_COURSE), EN_GENERAL);
        let fr = format!("{}\n{}", course(FR_COURSE), FR_GENERAL);
        Self::new(vec![
            LanguageProfile::train(Lang::En, &en, EN_STOPWORDS),
            LanguageProfile::train(Lang::Fr, &fr, FR_STOPWORDS),
        ])
    }

    pub fn profiles(&self) -> &[LanguageProfile] {
        &self.profiles
    }

    /// Raw per-language scores, in profile order.
    pub fn scores(&self, text: &str) -> Vec<(Lang, f64)> {
        self.profiles.iter().map(|p| (p.lang, p.score(text))).collect()
    }

    pub fn detect(&self, text: &str) -> Detection {
        let fallback = Detection {
            lang: Lang::En,
            confidence: 0.0,
        };
        if text.trim().chars().count() < MIN_DETECT_CHARS || trigrams(text).is_empty() {
            return fallback;
        }
        let mut scores = self.scores(text);
        scores.sort_by(|a, b| b.1.total_cmp(&a.1));
        if scores.len() < 2 {
            return scores.first().map_or(fallback, |&(lang, _)| Detection {
                lang,
                confidence: 1.0,
            });
        }
        let (best, runner_up) = (scores[0], scores[1]);
        if best.1 == runner_up.1 {
            return fallback;
        }
        // softmax over the scores, shifted by the max for stability
        let z: f64 = scores.iter().map(|(_, s)| (s - best.1).exp()).sum();
        let p_best = 1.0 / z;
        let p_second = (runner_up.1 - best.1).exp() / z;
        Detection {
            lang: best.0,
            confidence: (p_best - p_second).clamp(0.0, 1.0),
        }
    }
}

static BUNDLED: LazyLock<LanguageDetector> = LazyLock::new(LanguageDetector::bundled);

pub fn bundled_detector() -> &'static LanguageDetector {
    &BUNDLED
}

/// Detects English or French with the bundled profiles. Undecidable input
/// (under three characters, no letters, or a dead heat) is reported as
/// English with confidence 0.
pub fn detect_language(text: &str) -> Detection {
    BUNDLED.detect(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_course_question() {
        let d = detect_language("How do I draw a circle at the center of my screen?");
        assert_eq!(d.lang, Lang::En);
        assert!(d.confidence >= 0.6, "confidence {}", d.confidence);
    }

    #[test]
    fn french_course_question() {
        let d = detect_language("Comment est-ce que je dessine un cercle ?");
        assert_eq!(d.lang, Lang::Fr);
        assert!(d.confidence >= 0.6, "confidence {}", d.confidence);
    }

    #[test]
    fn degenerate_inputs_default_to_english() {
        for text in ["", "  ", "ab", "123 456", "?!?"] {
            assert_eq!(
                detect_language(text),
                Detection {
                    lang: Lang::En,
                    confidence: 0.0
                },
                "{text:?}"
            );
        }
    }

    #[test]
    fn profiles_cover_exactly_en_and_fr() {
        let langs: Vec<_> = bundled_detector().profiles().iter().map(|p| p.lang).collect();
        assert_eq!(langs, [Lang::En, Lang::Fr]);
    }

    #[test]
    fn trigrams_pad_words() {
        assert_eq!(trigrams("Le"), [" le", "le "]);
        assert_eq!(words("qu'est-ce"), ["qu", "est", "ce"]);
    }

    #[test]
    fn confidence_in_unit_interval() {
        for text in ["draw", "la fonction", "ellipse rect line", "bonjour hello"] {
            let d = detect_language(text);
            assert!((0.0..=1.0).contains(&d.confidence));
        }
    }
}
