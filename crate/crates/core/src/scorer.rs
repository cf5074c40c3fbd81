//! Deterministic answer matching against gold aliases.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchgen::{canonical_dates, BenchmarkRecord, Task};
use crate::calendar::GregorianDate;
use crate::datefmt::{convert_digits, extract_dates, is_bidi_mark, DigitScript, Language};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("unknown record {0:?}")]
    UnknownRecord(String),
    #[error("refusal lexicon line {line}: {msg}")]
    Lexicon { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Correct,
    Incorrect,
    NotAttempted,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Correct => "CORRECT",
            Self::Incorrect => "INCORRECT",
            Self::NotAttempted => "NOT_ATTEMPTED",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub record_id: String,
    pub raw_output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub record_id: String,
    pub label: Label,
    /// Present iff the label is CORRECT.
    pub matched_alias: Option<String>,
}

/// Temporal-relation labels recognised as an attempted answer.
const RELATION_LABELS: [&str; 14] = [
    "BEFORE", "AFTER", "IS_INCLUDED", "INCLUDES", "SIMULTANEOUS", "OVERLAP", "DURING", "BEGINS", "ENDS", "IBEFORE",
    "IAFTER", "BEGUN_BY", "ENDED_BY", "IDENTITY",
];

/// Phrases that mark an explicit non-answer, per language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefusalLexicon {
    phrases: HashMap<Language, Vec<String>>,
}

impl RefusalLexicon {
    pub fn builtin() -> &'static RefusalLexicon {
        static CELL: OnceLock<RefusalLexicon> = OnceLock::new();
        CELL.get_or_init(|| Self::parse(include_str!("../data/refusals.txt")).expect("builtin refusal lexicon"))
    }

    pub fn parse(text: &str) -> Result<Self, ScoreError> {
        let mut phrases: HashMap<Language, Vec<String>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| ScoreError::Lexicon { line: i + 1, msg };
            let (lang, phrase) = line.split_once('=').ok_or_else(|| err("expected `<language> = <phrase>`".into()))?;
            let lang: Language = lang.parse().map_err(err)?;
            let phrase = normalize(phrase);
            if phrase.is_empty() {
                return Err(err("empty phrase".into()));
            }
            phrases.entry(lang).or_default().push(phrase);
        }
        Ok(Self { phrases })
    }

    /// True when the normalized output contains a phrase of `lang` or English.
    pub fn matches(&self, normalized: &str, lang: Language) -> bool {
        [lang, Language::En]
            .iter()
            .filter_map(|l| self.phrases.get(l))
            .flatten()
            .any(|p| normalized.contains(p.as_str()))
    }
}

/// Lowercase, Western digits, no bidi marks, single spaces.
pub fn normalize(s: &str) -> String {
    let s: String = s.chars().filter(|&c| !is_bidi_mark(c)).collect();
    let s = convert_digits(&s, DigitScript::Western).to_lowercase();
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Label as free-text words: "IS_INCLUDED" -> "is included".
fn label_phrase(label: &str) -> String {
    normalize(&label.replace('_', " "))
}

fn contains_words(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.match_indices(needle).any(|(i, m)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + m.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// Dates in free text: locale templates of `lang` and English plus the
/// regex extractor, in order of appearance.
fn output_dates(text: &str, lang: Language) -> Vec<GregorianDate> {
    let cleaned: String = text.chars().filter(|&c| !is_bidi_mark(c)).collect();
    let mut dates = canonical_dates(&cleaned, lang);
    for (_, d) in extract_dates(&convert_digits(&cleaned, DigitScript::Western)) {
        if !dates.contains(&d) {
            dates.push(d);
        }
    }
    dates
}

pub fn score(p: &Prediction, r: &BenchmarkRecord) -> Verdict {
    score_with(p, r, RefusalLexicon::builtin())
}

/// CORRECT when a date in the output equals a gold date, or a gold label
/// appears verbatim or as a phrase; NOT_ATTEMPTED when nothing
/// answer-like is found or the output is a refusal; INCORRECT otherwise.
pub fn score_with(p: &Prediction, r: &BenchmarkRecord, lexicon: &RefusalLexicon) -> Verdict {
    let verdict = |label, matched_alias| Verdict { record_id: r.record_id.clone(), label, matched_alias };
    let norm = normalize(&p.raw_output);
    if norm.is_empty() {
        return verdict(Label::NotAttempted, None);
    }

    let predicted = output_dates(&p.raw_output, r.language);
    for alias in &r.gold_aliases {
        let gold = canonical_dates(alias, r.language);
        if !gold.is_empty() && predicted.iter().any(|d| gold.contains(d)) {
            return verdict(Label::Correct, Some(alias.clone()));
        }
    }
    for alias in r.gold_aliases.iter().filter(|a| canonical_dates(a, r.language).is_empty()) {
        if p.raw_output.contains(alias.as_str()) || contains_words(&norm, &label_phrase(alias)) {
            return verdict(Label::Correct, Some(alias.clone()));
        }
    }

    if lexicon.matches(&norm, r.language) {
        return verdict(Label::NotAttempted, None);
    }
    let attempted_label = RELATION_LABELS
        .iter()
        .any(|l| p.raw_output.contains(l) || contains_words(&norm, &label_phrase(l)));
    if predicted.is_empty() && !attempted_label {
        return verdict(Label::NotAttempted, None);
    }
    verdict(Label::Incorrect, None)
}

/// Scores predictions in input order.
pub fn score_all(preds: &[Prediction], records: &[BenchmarkRecord]) -> Result<Vec<Verdict>, ScoreError> {
    use rayon::prelude::*;
    let by_id: HashMap<&str, &BenchmarkRecord> = records.iter().map(|r| (r.record_id.as_str(), r)).collect();
    preds
        .par_iter()
        .map(|p| {
            let r = by_id.get(p.record_id.as_str()).ok_or_else(|| ScoreError::UnknownRecord(p.record_id.clone()))?;
            Ok(score(p, r))
        })
        .collect()
}

pub fn write_verdicts_csv(mut w: impl Write, verdicts: &[Verdict]) -> std::io::Result<()> {
    writeln!(w, "record_id,label,matched_alias")?;
    for v in verdicts {
        let alias = v.matched_alias.as_deref().unwrap_or("");
        writeln!(w, "{},{},{}", csv_field(&v.record_id), v.label, csv_field(alias))?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCell {
    /// Percent CORRECT per task; None when the task has no verdicts.
    pub per_task: BTreeMap<Task, Option<f64>>,
    /// Mean over the tasks that are present.
    pub macro_avg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub cells: BTreeMap<(String, Language), AccuracyCell>,
    pub warnings: Vec<String>,
}

/// Accuracy per (model, language), macro-averaged over tasks.
/// `verdicts` pairs each verdict with its model id.
pub fn accuracy_table(verdicts: &[(String, Verdict)], records: &[BenchmarkRecord]) -> Result<AccuracyTable, ScoreError> {
    let by_id: HashMap<&str, &BenchmarkRecord> = records.iter().map(|r| (r.record_id.as_str(), r)).collect();
    let mut counts: BTreeMap<(String, Language), BTreeMap<Task, (usize, usize)>> = BTreeMap::new();
    for (model, v) in verdicts {
        let r = by_id.get(v.record_id.as_str()).ok_or_else(|| ScoreError::UnknownRecord(v.record_id.clone()))?;
        let e = counts.entry((model.clone(), r.language)).or_default().entry(r.task).or_default();
        e.0 += (v.label == Label::Correct) as usize;
        e.1 += 1;
    }
    let mut warnings = Vec::new();
    let mut cells = BTreeMap::new();
    for ((model, lang), tasks) in counts {
        let per_task: BTreeMap<Task, Option<f64>> = Task::ALL
            .iter()
            .map(|t| (*t, tasks.get(t).map(|(c, n)| 100.0 * *c as f64 / *n as f64)))
            .collect();
        let present: Vec<f64> = per_task.values().flatten().copied().collect();
        let missing: Vec<String> = per_task.iter().filter(|(_, v)| v.is_none()).map(|(t, _)| t.to_string()).collect();
        if !missing.is_empty() {
            warnings.push(format!("{model}/{lang}: no verdicts for {}; averaged over the rest", missing.join(", ")));
        }
        let macro_avg = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        cells.insert((model, lang), AccuracyCell { per_task, macro_avg });
    }
    Ok(AccuracyTable { cells, warnings })
}

impl AccuracyTable {
    /// One row per model, one column per language (macro accuracy).
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "model_id")?;
        for l in Language::ALL {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        let models: BTreeSet<&String> = self.cells.keys().map(|(m, _)| m).collect();
        for m in models {
            write!(w, "{}", csv_field(m))?;
            for l in Language::ALL {
                match self.cells.get(&(m.clone(), l)).and_then(|c| c.macro_avg) {
                    Some(v) => write!(w, ",{v:.2}")?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
