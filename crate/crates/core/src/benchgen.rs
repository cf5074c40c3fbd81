//! Seed-question expansion into the language × format variant matrix.
//!
//! Stage 1 finds the dates in a seed and reduces them to Gregorian (Y, M, D).
//! Stage 2 re-renders every occurrence in place once per format kind, and
//! regenerates the gold aliases the same way.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{CalendarDate, CalendarSystem, GregorianDate};
use crate::datefmt::{extract_dates, target_calendar, FormatKind, Language, Locales};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("seed {0}: no date found")]
    NoDateFound(String),
    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Arithmetic,
    Timezone,
    Relation,
}

impl Task {
    pub const ALL: [Task; 3] = [Self::Arithmetic, Self::Timezone, Self::Relation];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Arithmetic => "arithmetic",
            Self::Timezone => "timezone",
            Self::Relation => "relation",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Tram,
    Tot,
    Freshbench,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedQuestion {
    pub seed_id: String,
    pub task: Task,
    pub language: Language,
    pub text: String,
    pub gold: Vec<String>,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    pub seed_dates: Vec<GregorianDate>,
    /// Dates outside the target calendar's range, written in the
    /// language's Gregorian textual form instead.
    #[serde(default)]
    pub calendar_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub record_id: String,
    pub seed_id: String,
    pub task: Task,
    pub language: Language,
    pub format_kind: FormatKind,
    pub calendar: CalendarSystem,
    pub question: String,
    pub gold_aliases: Vec<String>,
    pub provenance: Provenance,
}

/// Dates in a seed or answer: the regex extractor first, then the locale
/// scanner for `lang` (any calendar, reduced to Gregorian).
pub fn locate_dates(text: &str, lang: Language) -> Vec<(Range<usize>, GregorianDate)> {
    let found = extract_dates(text);
    if !found.is_empty() {
        return found;
    }
    Locales::builtin()
        .find_dates(text, &[lang])
        .into_iter()
        .filter_map(|m| Some((m.span, m.date.to_gregorian().ok()?)))
        .collect()
}

/// `date` in the (lang, kind) cell; falls back to the Gregorian textual form
/// when the cell's calendar cannot represent it.
pub fn format_in_cell(date: GregorianDate, lang: Language, kind: FormatKind) -> (String, bool) {
    let locales = Locales::builtin();
    let opts = Default::default();
    let converted = CalendarDate::from(date).convert(target_calendar(lang, kind));
    if let Ok(text) = converted.map_err(|e| e.to_string()).and_then(|d| locales.format(&d, lang, kind, &opts).map_err(|e| e.to_string())) {
        return (text, false);
    }
    let text = locales
        .format(&date.into(), lang, FormatKind::Textual, &opts)
        .expect("every language formats Gregorian textual dates");
    (text, true)
}

fn rewrite(text: &str, dates: &[(Range<usize>, GregorianDate)], lang: Language, kind: FormatKind) -> (String, usize) {
    let mut out = String::with_capacity(text.len() + 16);
    let mut at = 0;
    let mut fallbacks = 0;
    for (span, d) in dates {
        out.push_str(&text[at..span.start]);
        let (s, fell_back) = format_in_cell(*d, lang, kind);
        fallbacks += fell_back as usize;
        out.push_str(&s);
        at = span.end;
    }
    out.push_str(&text[at..]);
    (out, fallbacks)
}

/// Gold aliases for a (lang, kind) record: the record's own form first, then
/// the language's four forms, plain ISO and English textual. Answers without
/// a date are kept verbatim.
fn gold_aliases(gold: &[String], lang: Language, kind: FormatKind) -> Vec<String> {
    let mut cells = vec![(lang, kind)];
    cells.extend(FormatKind::ALL.iter().map(|&k| (lang, k)));
    cells.push((Language::En, FormatKind::Iso));
    cells.push((Language::En, FormatKind::Textual));
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for g in gold {
        let dates = locate_dates(g, lang);
        if dates.is_empty() {
            if seen.insert(g.clone()) {
                out.push(g.clone());
            }
            continue;
        }
        for &(l, k) in &cells {
            let (alias, _) = rewrite(g, &dates, l, k);
            if seen.insert(alias.clone()) {
                out.push(alias);
            }
        }
    }
    out
}

/// One record per format kind of the seed's language.
pub fn expand_seed(s: &SeedQuestion) -> Result<Vec<BenchmarkRecord>, BenchError> {
    let dates = locate_dates(&s.text, s.language);
    if dates.is_empty() {
        return Err(BenchError::NoDateFound(s.seed_id.clone()));
    }
    Ok(FormatKind::ALL
        .iter()
        .map(|&kind| {
            let (question, calendar_fallbacks) = rewrite(&s.text, &dates, s.language, kind);
            BenchmarkRecord {
                record_id: format!("{}:{}:{}", s.seed_id, s.language, kind),
                seed_id: s.seed_id.clone(),
                task: s.task,
                language: s.language,
                format_kind: kind,
                calendar: target_calendar(s.language, kind),
                question,
                gold_aliases: gold_aliases(&s.gold, s.language, kind),
                provenance: Provenance {
                    source: s.source,
                    seed_dates: dates.iter().map(|(_, d)| *d).collect(),
                    calendar_fallbacks,
                },
            }
        })
        .collect())
}

/// Expands seeds in parallel; output order follows the input order.
pub fn expand_all(seeds: &[SeedQuestion]) -> Result<Vec<BenchmarkRecord>, BenchError> {
    let parts: Result<Vec<Vec<BenchmarkRecord>>, BenchError> = seeds.par_iter().map(expand_seed).collect();
    Ok(parts?.into_iter().flatten().collect())
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(r: impl BufRead) -> Result<Vec<T>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| BenchError::Schema { line: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut w: impl Write, items: &[T]) -> std::io::Result<()> {
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusIssue {
    pub record_id: String,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusReport {
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
    pub count_failures: Vec<String>,
    pub issues: Vec<CorpusIssue>,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.count_failures.is_empty() && self.issues.is_empty()
    }
}

fn iso_pattern() -> &'static Regex {
    static CELL: OnceLock<Regex> = OnceLock::new();
    CELL.get_or_init(|| Regex::new(r"[0-9]{4}-[0-9]{1,2}-[0-9]{1,2}").unwrap())
}

/// Gregorian reading of every date in `text`, scanning the record's language and English.
pub fn canonical_dates(text: &str, lang: Language) -> Vec<GregorianDate> {
    Locales::builtin()
        .find_dates(text, &[lang, Language::En])
        .into_iter()
        .filter_map(|m| m.date.to_gregorian().ok())
        .collect()
}

/// Checks per-cell counts against `expected_per_cell` for every
/// (task, language, format) cell, unique ids, alias agreement and format purity.
pub fn validate_corpus(records: &[BenchmarkRecord], expected_per_cell: usize) -> CorpusReport {
    let key = |t: Task, l: Language, k: FormatKind| format!("{t}/{l}/{k}");
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in Task::ALL {
        for l in Language::ALL {
            for k in FormatKind::ALL {
                counts.insert(key(t, l, k), 0);
            }
        }
    }
    let mut issues = Vec::new();
    let mut ids = HashSet::new();
    for r in records {
        *counts.entry(key(r.task, r.language, r.format_kind)).or_default() += 1;
        if !ids.insert(r.record_id.as_str()) {
            issues.push(CorpusIssue { record_id: r.record_id.clone(), problem: "duplicate record id".into() });
        }
    }
    let per_record: Vec<Vec<String>> = records.par_iter().map(record_problems).collect();
    for (r, problems) in records.iter().zip(per_record) {
        issues.extend(problems.into_iter().map(|problem| CorpusIssue { record_id: r.record_id.clone(), problem }));
    }
    let count_failures = counts
        .iter()
        .filter(|(_, &n)| n != expected_per_cell)
        .map(|(k, n)| format!("{k}: {n} records, expected {expected_per_cell}"))
        .collect();
    CorpusReport { total: records.len(), counts, count_failures, issues }
}

fn record_problems(r: &BenchmarkRecord) -> Vec<String> {
    let mut out = Vec::new();
    if r.gold_aliases.is_empty() {
        out.push("no gold aliases".into());
    }
    let readings: Vec<Vec<GregorianDate>> = r.gold_aliases.iter().map(|a| canonical_dates(a, r.language)).collect();
    if readings.windows(2).any(|w| w[0] != w[1]) {
        out.push(format!("gold aliases disagree: {:?}", r.gold_aliases));
    }
    if r.format_kind != FormatKind::Iso && iso_pattern().is_match(&r.question) {
        out.push("ISO date left in a non-ISO variant".into());
    }
    if canonical_dates(&r.question, r.language) != r.provenance.seed_dates {
        out.push("question dates do not read back as the seed dates".into());
    }
    out
}

struct SeedText {
    arithmetic: &'static str,
    timezone: &'static str,
    relation: &'static str,
}

// {d}, {d1}..{d3} are dates; {n} years; {t} clock time; {city} a city name.
const SEED_TEXT: [(Language, SeedText); 5] = [
    (Language::En, SeedText {
        arithmetic: "The project started in {d}. It took {n} years to finish. When was it ready?",
        timezone: "A call is scheduled for {t} on {d} in London. What are the time and date in {city} at that moment?",
        relation: "Event A lasted from {d1} to {d2}. Event B happened on {d3}. How is B related to A?",
    }),
    (Language::De, SeedText {
        arithmetic: "Das Projekt begann am {d}. Es dauerte {n} Jahre. Wann war es fertig?",
        timezone: "Ein Anruf ist für {t} Uhr am {d} in London angesetzt. Welche Uhrzeit und welches Datum sind es dann in {city}?",
        relation: "Ereignis A dauerte vom {d1} bis zum {d2}. Ereignis B geschah am {d3}. Wie steht B zu A?",
    }),
    (Language::Zh, SeedText {
        arithmetic: "该项目始于{d}。历时{n}年完成。它何时完成？",
        timezone: "伦敦时间{d} {t}安排了一次通话。那时{city}的时间和日期是什么？",
        relation: "事件A从{d1}持续到{d2}。事件B发生在{d3}。B与A是什么关系？",
    }),
    (Language::Ar, SeedText {
        arithmetic: "بدأ المشروع في {d}. استغرق {n} سنوات. متى اكتمل؟",
        timezone: "تم تحديد مكالمة في الساعة {t} يوم {d} في لندن. ما الوقت والتاريخ في {city} حينها؟",
        relation: "استمر الحدث أ من {d1} إلى {d2}. وقع الحدث ب في {d3}. ما علاقة ب بـ أ؟",
    }),
    (Language::Ha, SeedText {
        arithmetic: "Aikin ya fara a {d}. Ya ɗauki shekaru {n}. Yaushe ya kammala?",
        timezone: "An shirya kira da ƙarfe {t} a {d} a London. Mene ne lokaci da kwanan wata a {city} a lokacin?",
        relation: "Lamari A ya faru daga {d1} zuwa {d2}. Lamari B ya faru a {d3}. Yaya B yake da A?",
    }),
];

const CITIES: [(&str, i64); 6] = [("Tokyo", 9), ("Dubai", 4), ("Beijing", 8), ("Lagos", 1), ("New York", -5), ("Sydney", 10)];

fn random_date(rng: &mut ChaCha8Rng, years: Range<i32>) -> GregorianDate {
    let lo = GregorianDate::new(years.start, 1, 1).unwrap().to_jdn();
    let hi = GregorianDate::new(years.end - 1, 12, 31).unwrap().to_jdn();
    GregorianDate::from_jdn(rng.random_range(lo..=hi)).unwrap()
}

fn add_years(d: GregorianDate, n: i32) -> GregorianDate {
    GregorianDate::new(d.year() + n, d.month(), d.day())
        .or_else(|_| GregorianDate::new(d.year() + n, d.month(), d.day() - 1))
        .expect("only 29 February needs clamping")
}

/// Synthetic seeds for exercising the pipeline: `per_task` seeds per task,
/// each rendered in every language of `languages`, with ISO dates between
/// 1200 and 2089. Seed ids are shared across languages.
pub fn synthetic_seeds(per_task: usize, languages: &[Language], seed: u64) -> Vec<SeedQuestion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for task in Task::ALL {
        let source = match task {
            Task::Arithmetic => Source::Tram,
            Task::Relation => Source::Tot,
            Task::Timezone => Source::Freshbench,
        };
        for i in 0..per_task {
            let seed_id = format!("{}-{:04}", task, i);
            let d = random_date(&mut rng, 1200..2090);
            let n = rng.random_range(1..=40);
            let hour = rng.random_range(0..24);
            let (city, offset) = CITIES[rng.random_range(0..CITIES.len())];
            let d2 = GregorianDate::from_jdn(d.to_jdn() + rng.random_range(10..400)).unwrap();
            let d3 = GregorianDate::from_jdn(d.to_jdn() + rng.random_range(-200..600)).unwrap();
            let local = hour as i64 + offset;
            let shifted = GregorianDate::from_jdn(d.to_jdn() + local.div_euclid(24)).unwrap();
            for &lang in languages {
                let text = &SEED_TEXT[lang.index()].1;
                let (text, gold) = match task {
                    Task::Arithmetic => (
                        text.arithmetic.replace("{d}", &d.to_string()).replace("{n}", &n.to_string()),
                        vec![add_years(d, n).to_string()],
                    ),
                    Task::Timezone => (
                        text.timezone
                            .replace("{t}", &format!("{hour:02}:00"))
                            .replace("{d}", &d.to_string())
                            .replace("{city}", city),
                        vec![format!("{:02}:00 on {shifted}", local.rem_euclid(24))],
                    ),
                    Task::Relation => {
                        let label = if d3 < d {
                            "BEFORE"
                        } else if d3 > d2 {
                            "AFTER"
                        } else {
                            "IS_INCLUDED"
                        };
                        (
                            text.relation
                                .replace("{d1}", &d.to_string())
                                .replace("{d2}", &d2.to_string())
                                .replace("{d3}", &d3.to_string()),
                            vec![label.to_string()],
                        )
                    }
                };
                out.push(SeedQuestion { seed_id: seed_id.clone(), task, language: lang, text, gold, source });
            }
        }
    }
    out
}
