//! Locale tables: line-based `key = value` files, one per language.

use std::collections::BTreeSet;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use super::template::{match_at, render, word_clash, Piece, SlotKind, Template, TemplateMatch};
use super::{digit_value, is_ignorable, DigitScript, FormatError, FormatKind, FormatOptions, Language};
use crate::calendar::{CalendarDate, CalendarSystem, HEAVENLY_STEMS};

const BUILTIN: [(Language, &str); 5] = [
    (Language::En, include_str!("../../data/locales/en.txt")),
    (Language::De, include_str!("../../data/locales/de.txt")),
    (Language::Zh, include_str!("../../data/locales/zh.txt")),
    (Language::Ar, include_str!("../../data/locales/ar.txt")),
    (Language::Ha, include_str!("../../data/locales/ha.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateEntry {
    pub kind: FormatKind,
    pub calendar: CalendarSystem,
    pub variant: Option<String>,
    /// `template.*` lines format and parse; `parse.*` lines only parse.
    pub formats: bool,
    pub template: Template,
}

impl TemplateEntry {
    fn search_rank(&self) -> u8 {
        match (self.formats, self.variant.is_some()) {
            (true, false) => 0,
            (true, true) => 1,
            (false, _) => 2,
        }
    }
}

type Names = Vec<Vec<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocaleTable {
    language: Language,
    months: [Option<Names>; 3],
    lunar_days: Option<Names>,
    leap_prefixes: Vec<String>,
    year_digits: Option<Names>,
    digits: Vec<(FormatKind, DigitScript)>,
    entries: Vec<TemplateEntry>,
    starts: StartSet,
}

/// Lowercased characters that can open a match of some template.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct StartSet {
    digits: bool,
    any: bool,
    chars: BTreeSet<char>,
}

fn lower(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

impl StartSet {
    fn build(t: &LocaleTable) -> Self {
        let mut set = Self::default();
        let add_names = |set: &mut Self, names: Option<&[Vec<String>]>| {
            for alts in names.into_iter().flatten() {
                set.chars.extend(alts.iter().filter_map(|n| n.chars().next()).map(lower));
            }
        };
        for e in &t.entries {
            match e.template.pieces().first() {
                Some(Piece::Slot(slot)) => match slot {
                    SlotKind::MonthName => add_names(&mut set, t.month_names(e.calendar)),
                    SlotKind::LunarMonth => {
                        add_names(&mut set, t.month_names(CalendarSystem::Lunar));
                        set.chars.extend(t.leap_prefixes.iter().filter_map(|p| p.chars().next()).map(lower));
                    }
                    SlotKind::LunarDay => add_names(&mut set, t.lunar_days()),
                    SlotKind::LunarYear => add_names(&mut set, t.year_digits()),
                    SlotKind::Ganzhi => set.chars.extend(HEAVENLY_STEMS),
                    _ => set.digits = true,
                },
                Some(Piece::Delimiter(s) | Piece::Marker(s)) => match s.chars().next() {
                    Some(c) if !c.is_whitespace() => {
                        set.chars.insert(lower(c));
                    }
                    _ => set.any = true,
                },
                None => set.any = true,
            }
        }
        set
    }

    fn admits(&self, c: char) -> bool {
        self.any || (self.digits && digit_value(c).is_some()) || self.chars.contains(&lower(c))
    }
}

fn calendar_slot(c: CalendarSystem) -> usize {
    match c {
        CalendarSystem::Gregorian => 0,
        CalendarSystem::Hijri => 1,
        CalendarSystem::Lunar => 2,
    }
}

fn name_list(value: &str, expect: usize) -> Result<Names, String> {
    let list: Names = value
        .split(',')
        .map(|entry| entry.split('|').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect::<Vec<_>>())
        .collect();
    if list.len() != expect {
        return Err(format!("expected {expect} entries, found {}", list.len()));
    }
    if list.iter().any(Vec::is_empty) {
        return Err("empty entry".into());
    }
    Ok(list)
}

impl LocaleTable {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut language = None;
        let mut months: [Option<Names>; 3] = Default::default();
        let mut lunar_days = None;
        let mut leap_prefixes = Vec::new();
        let mut year_digits = None;
        let mut digits = Vec::new();
        let mut entries = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| FormatError::Locale(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| at("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["language"] => language = Some(value.parse::<Language>().map_err(at)?),
                ["months", cal] => {
                    let cal: CalendarSystem = cal.parse().map_err(at)?;
                    months[calendar_slot(cal)] = Some(name_list(value, 12).map_err(at)?);
                }
                ["days", "lunar"] => lunar_days = Some(name_list(value, 30).map_err(at)?),
                ["lunar", "leap_prefix"] => {
                    leap_prefixes = value.split('|').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
                }
                ["lunar", "year_digits"] => year_digits = Some(name_list(value, 10).map_err(at)?),
                ["digits", kind] => {
                    let kind: FormatKind = kind.parse().map_err(at)?;
                    digits.push((kind, value.parse::<DigitScript>().map_err(at)?));
                }
                [head @ ("template" | "parse"), kind, cal, rest @ ..] if rest.len() <= 1 => {
                    let formats = *head == "template";
                    if !formats && !rest.is_empty() {
                        return Err(at("parse-only templates take no variant".into()));
                    }
                    entries.push(TemplateEntry {
                        kind: kind.parse().map_err(at)?,
                        calendar: cal.parse().map_err(at)?,
                        variant: rest.first().map(|v| v.to_string()),
                        formats,
                        template: Template::parse(value).map_err(|e| at(e.to_string()))?,
                    });
                }
                _ => return Err(at(format!("unknown key {key:?}"))),
            }
        }

        let language = language.ok_or_else(|| FormatError::Locale("missing `language` key".into()))?;
        entries.sort_by_key(|e| (e.kind, e.search_rank()));
        let mut table =
            Self { language, months, lunar_days, leap_prefixes, year_digits, digits, entries, starts: StartSet::default() };
        table.starts = StartSet::build(&table);
        for e in &table.entries {
            e.template.check(e.calendar, &table).map_err(|m| FormatError::Locale(format!("{language}: {m}")))?;
        }
        for kind in FormatKind::ALL {
            if !table.entries.iter().any(|e| e.kind == kind && e.formats && e.variant.is_none()) {
                return Err(FormatError::Locale(format!("{language}: no {kind} template")));
            }
        }
        Ok(table)
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn month_names(&self, calendar: CalendarSystem) -> Option<&[Vec<String>]> {
        self.months[calendar_slot(calendar)].as_deref()
    }

    pub fn lunar_days(&self) -> Option<&[Vec<String>]> {
        self.lunar_days.as_deref()
    }

    pub fn leap_prefixes(&self) -> &[String] {
        &self.leap_prefixes
    }

    pub fn year_digits(&self) -> Option<&[Vec<String>]> {
        self.year_digits.as_deref()
    }

    pub fn digit_script(&self, kind: FormatKind) -> DigitScript {
        self.digits.iter().find(|(k, _)| *k == kind).map(|(_, d)| *d).unwrap_or_default()
    }

    /// Entries sorted by kind, then formatting templates before parse-only ones.
    pub fn entries(&self) -> &[TemplateEntry] {
        &self.entries
    }

    /// Calendars a kind can be formatted in, in file order.
    pub fn calendars(&self, kind: FormatKind) -> Vec<CalendarSystem> {
        let mut out: Vec<CalendarSystem> = Vec::new();
        for e in self.entries.iter().filter(|e| e.kind == kind && e.formats) {
            if !out.contains(&e.calendar) {
                out.push(e.calendar);
            }
        }
        out
    }

    pub fn format(&self, date: &CalendarDate, kind: FormatKind, opts: &FormatOptions) -> Result<String, FormatError> {
        let calendar = date.system();
        let entry = self
            .entries
            .iter()
            .find(|e| e.kind == kind && e.formats && e.calendar == calendar && e.variant == opts.variant)
            .ok_or_else(|| {
                FormatError::UnsupportedCombination(format!(
                    "{} {kind} has no {calendar} template{}",
                    self.language,
                    opts.variant.as_deref().map(|v| format!(" (variant {v})")).unwrap_or_default()
                ))
            })?;
        let out = render(self, &entry.template, date, opts)?;
        Ok(match self.digit_script(kind) {
            DigitScript::Western => out,
            script => super::convert_digits(&out, script),
        })
    }

    fn to_match(&self, e: &TemplateEntry, start: usize, end: usize, date: CalendarDate, spans: Vec<Range<usize>>) -> TemplateMatch {
        TemplateMatch {
            language: self.language,
            kind: e.kind,
            calendar: e.calendar,
            span: start..end,
            segments: e.template.pieces().iter().map(|p| p.role()).zip(spans).collect(),
            date,
        }
    }

    /// First template of `kind` (or of any kind) matching all of `text`.
    pub fn match_exact(&self, text: &str, kind: Option<FormatKind>) -> Option<TemplateMatch> {
        self.entries.iter().filter(|e| kind.is_none_or(|k| e.kind == k)).find_map(|e| {
            let found = match_at(self, &e.template, e.calendar, text, 0, |end| end == text.len(), true);
            found.into_iter().next().map(|(end, date, spans)| self.to_match(e, 0, end, date, spans))
        })
    }

    /// Longest valid match starting at `start` whose edges do not run into
    /// neighbouring digits or letters.
    pub fn longest_match_at(&self, text: &str, start: usize) -> Option<TemplateMatch> {
        let first = text[start..].chars().next()?;
        if !self.starts.admits(first) {
            return None;
        }
        if text[..start].chars().next_back().is_some_and(|p| word_clash(p, first)) {
            return None;
        }
        let mut best: Option<TemplateMatch> = None;
        for e in &self.entries {
            let boundary_ok = |end: usize| {
                end > start
                    && match (text[..end].chars().next_back(), text[end..].chars().next()) {
                        (Some(a), Some(b)) => !word_clash(a, b),
                        _ => true,
                    }
            };
            for (end, date, spans) in match_at(self, &e.template, e.calendar, text, start, boundary_ok, false) {
                if best.as_ref().is_none_or(|b| end > b.span.end) {
                    best = Some(self.to_match(e, start, end, date, spans));
                }
            }
        }
        best
    }
}

/// The set of locale tables in use, one per language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Locales {
    tables: Vec<LocaleTable>,
}

impl Locales {
    pub fn builtin() -> &'static Locales {
        static CELL: OnceLock<Locales> = OnceLock::new();
        CELL.get_or_init(|| {
            let tables = BUILTIN
                .iter()
                .map(|(lang, src)| {
                    let t = LocaleTable::parse(src).unwrap_or_else(|e| panic!("builtin {lang} locale: {e}"));
                    assert_eq!(t.language, *lang);
                    t
                })
                .collect();
            Locales { tables }
        })
    }

    pub fn builtin_source(lang: Language) -> &'static str {
        BUILTIN[lang.index()].1
    }

    /// Builtin tables with every `<code>.txt` found in `dir` replacing its language.
    pub fn load_dir(dir: &Path) -> Result<Locales, FormatError> {
        let mut out = Self::builtin().clone();
        for lang in Language::ALL {
            let path = dir.join(format!("{}.txt", lang.code()));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|e| FormatError::Locale(format!("{}: {e}", path.display())))?;
            let table = LocaleTable::parse(&text)
                .map_err(|e| FormatError::Locale(format!("{}: {e}", path.display())))?;
            if table.language != lang {
                return Err(FormatError::Locale(format!(
                    "{} declares language {}",
                    path.display(),
                    table.language
                )));
            }
            out = out.with_table(table);
        }
        Ok(out)
    }

    pub fn with_table(mut self, table: LocaleTable) -> Self {
        let i = table.language.index();
        self.tables[i] = table;
        self
    }

    pub fn table(&self, lang: Language) -> &LocaleTable {
        &self.tables[lang.index()]
    }

    pub fn format(
        &self,
        date: &CalendarDate,
        lang: Language,
        kind: FormatKind,
        opts: &FormatOptions,
    ) -> Result<String, FormatError> {
        self.table(lang).format(date, kind, opts)
    }

    /// Parses a bare date string. Surrounding whitespace and bidi marks are
    /// ignored; templates are tried kind by kind (ISO first) and the first
    /// valid reading wins.
    pub fn parse(&self, s: &str, lang: Language) -> Result<CalendarDate, FormatError> {
        let t = s.trim_matches(is_ignorable);
        self.table(lang)
            .match_exact(t, None)
            .map(|m| m.date)
            .ok_or_else(|| FormatError::Unparseable(s.to_string()))
    }

    /// Anchored match of the whole string against the (lang, kind) templates.
    pub fn match_exact(&self, s: &str, lang: Language, kind: FormatKind) -> Option<TemplateMatch> {
        self.table(lang).match_exact(s, Some(kind))
    }

    /// Scans free text left to right for dates in any template of `langs`,
    /// taking the longest match at each position.
    pub fn find_dates(&self, text: &str, langs: &[Language]) -> Vec<TemplateMatch> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < text.len() {
            let c = text[pos..].chars().next().unwrap();
            let mut best: Option<TemplateMatch> = None;
            if !is_ignorable(c) {
                for &lang in langs {
                    if let Some(m) = self.table(lang).longest_match_at(text, pos) {
                        if best.as_ref().is_none_or(|b| m.span.end > b.span.end) {
                            best = Some(m);
                        }
                    }
                }
            }
            match best {
                Some(m) => {
                    pos = m.span.end;
                    out.push(m);
                }
                None => pos += c.len_utf8(),
            }
        }
        out
    }
}
