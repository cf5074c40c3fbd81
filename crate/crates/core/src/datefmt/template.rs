//! Template syntax, rendering and backtracking matching.
//!
//! `{slot}` is a date field, `[text]` a calendar-marker literal, `\u{XXXX}`
//! an escaped character; all other text is a delimiter literal. When
//! matching, a whitespace run in a literal matches one or more whitespace
//! characters and letters compare case-insensitively.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::locale::LocaleTable;
use super::{digit_value, FormatError, FormatKind, FormatOptions, Language};
use crate::calendar::{ganzhi_from_name, ganzhi_name, CalendarDate, CalendarSystem, GregorianDate, HijriDate, LunarDate};

/// First year of the sexagenary window used to resolve a bare ganzhi year (甲子).
pub const GANZHI_BASE_YEAR: i32 = 1984;

/// Semantic role of a segment of a date string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Year,
    Month,
    Day,
    CalendarMarker,
    Delimiter,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Year => "Year",
            Self::Month => "Month",
            Self::Day => "Day",
            Self::CalendarMarker => "CalendarMarker",
            Self::Delimiter => "Delimiter",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    /// Day number, unpadded.
    Day,
    /// Day number, zero-padded to two digits.
    Day2,
    /// English ordinal day ("3rd").
    DayOrd,
    /// Chinese lunar day name (初一 … 三十).
    LunarDay,
    Month,
    Month2,
    MonthName,
    /// Chinese lunar month name with optional leap prefix.
    LunarMonth,
    Year,
    Year4,
    /// Year written digit by digit in Chinese numerals (二零二三).
    LunarYear,
    /// Sexagenary year name (辛亥).
    Ganzhi,
}

impl SlotKind {
    const NAMES: [(&'static str, SlotKind); 12] = [
        ("day", Self::Day),
        ("day2", Self::Day2),
        ("dayord", Self::DayOrd),
        ("lday", Self::LunarDay),
        ("month", Self::Month),
        ("month2", Self::Month2),
        ("monthname", Self::MonthName),
        ("lmonth", Self::LunarMonth),
        ("year", Self::Year),
        ("year4", Self::Year4),
        ("lyear", Self::LunarYear),
        ("ganzhi", Self::Ganzhi),
    ];

    pub fn name(&self) -> &'static str {
        Self::NAMES.iter().find(|(_, k)| k == self).map(|(n, _)| *n).unwrap()
    }

    pub fn role(&self) -> Role {
        match self {
            Self::Day | Self::Day2 | Self::DayOrd | Self::LunarDay => Role::Day,
            Self::Month | Self::Month2 | Self::MonthName | Self::LunarMonth => Role::Month,
            Self::Year | Self::Year4 | Self::LunarYear | Self::Ganzhi => Role::Year,
        }
    }

    fn is_lunar_only(&self) -> bool {
        matches!(self, Self::LunarDay | Self::LunarMonth | Self::LunarYear | Self::Ganzhi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    Slot(SlotKind),
    Delimiter(String),
    Marker(String),
}

impl Piece {
    pub fn role(&self) -> Role {
        match self {
            Self::Slot(k) => k.role(),
            Self::Delimiter(_) => Role::Delimiter,
            Self::Marker(_) => Role::CalendarMarker,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(src: &str) -> Result<Self, FormatError> {
        let err = |msg: &str| FormatError::Locale(format!("template {src:?}: {msg}"));
        let mut pieces = Vec::new();
        let mut lit = String::new();
        let mut chars = src.chars();
        while let Some(c) = chars.next() {
            match c {
                '{' => {
                    if !lit.is_empty() {
                        pieces.push(Piece::Delimiter(std::mem::take(&mut lit)));
                    }
                    let name: String = chars.by_ref().take_while(|&c| c != '}').collect();
                    let kind = SlotKind::NAMES
                        .iter()
                        .find(|(n, _)| *n == name)
                        .map(|(_, k)| *k)
                        .ok_or_else(|| err(&format!("unknown slot {{{name}}}")))?;
                    if matches!(pieces.last(), Some(Piece::Slot(_))) {
                        return Err(err("adjacent slots need a literal between them"));
                    }
                    pieces.push(Piece::Slot(kind));
                }
                '[' => {
                    if !lit.is_empty() {
                        pieces.push(Piece::Delimiter(std::mem::take(&mut lit)));
                    }
                    let mut marker = String::new();
                    loop {
                        match chars.next() {
                            Some(']') => break,
                            Some('\\') => marker.push(read_escape(&mut chars).ok_or_else(|| err("bad escape"))?),
                            Some(c) => marker.push(c),
                            None => return Err(err("unterminated marker")),
                        }
                    }
                    if marker.trim().is_empty() {
                        return Err(err("empty marker"));
                    }
                    pieces.push(Piece::Marker(marker));
                }
                '\\' => lit.push(read_escape(&mut chars).ok_or_else(|| err("bad escape"))?),
                '}' | ']' => return Err(err("unbalanced bracket")),
                c => lit.push(c),
            }
        }
        if !lit.is_empty() {
            pieces.push(Piece::Delimiter(lit));
        }
        if !pieces.iter().any(|p| matches!(p, Piece::Slot(_))) {
            return Err(err("no slots"));
        }
        Ok(Self { source: src.to_string(), pieces })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn slots(&self) -> impl Iterator<Item = SlotKind> + '_ {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Slot(k) => Some(*k),
            _ => None,
        })
    }

    /// Checks the slots against the calendar and the locale's vocabularies.
    pub(crate) fn check(&self, calendar: CalendarSystem, table: &LocaleTable) -> Result<(), String> {
        for slot in self.slots() {
            if slot.is_lunar_only() != (calendar == CalendarSystem::Lunar)
                && !matches!(slot, SlotKind::Day | SlotKind::Day2 | SlotKind::Month | SlotKind::Month2)
            {
                return Err(format!("slot {{{}}} cannot be used with the {calendar} calendar", slot.name()));
            }
            let missing = match slot {
                SlotKind::MonthName => table.month_names(calendar).is_none(),
                SlotKind::LunarMonth => table.month_names(CalendarSystem::Lunar).is_none(),
                SlotKind::LunarDay => table.lunar_days().is_none(),
                SlotKind::LunarYear => table.year_digits().is_none(),
                _ => false,
            };
            if missing {
                return Err(format!("slot {{{}}} needs vocabulary the table does not define", slot.name()));
            }
        }
        for role in [Role::Year, Role::Month, Role::Day] {
            if self.slots().filter(|s| s.role() == role).count() != 1 {
                return Err(format!("template {:?} needs exactly one {role} slot", self.source));
            }
        }
        Ok(())
    }
}

impl FromStr for Template {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

fn read_escape(chars: &mut std::str::Chars<'_>) -> Option<char> {
    match chars.next()? {
        'u' => {
            if chars.next()? != '{' {
                return None;
            }
            let hex: String = chars.by_ref().take_while(|&c| c != '}').collect();
            char::from_u32(u32::from_str_radix(&hex, 16).ok()?)
        }
        c @ ('{' | '}' | '[' | ']' | '\\') => Some(c),
        _ => None,
    }
}

/// A template matched against a span of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateMatch {
    pub language: Language,
    pub kind: FormatKind,
    pub calendar: CalendarSystem,
    pub span: Range<usize>,
    /// One entry per template piece, in order; the ranges tile `span`.
    pub segments: Vec<(Role, Range<usize>)>,
    pub date: CalendarDate,
}

/// Called with (end, fields, spans) for each full match; true stops the search.
type OnComplete<'a> = dyn FnMut(usize, &Fields, &[Range<usize>]) -> bool + 'a;

#[derive(Debug, Clone, Copy, Default)]
struct Fields {
    year: Option<i64>,
    month: Option<u32>,
    day: Option<u32>,
    leap: bool,
    ganzhi: Option<u8>,
}

fn ordinal_suffix(day: u32) -> &'static str {
    match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

pub(crate) fn render(
    table: &LocaleTable,
    template: &Template,
    date: &CalendarDate,
    opts: &FormatOptions,
) -> Result<String, FormatError> {
    let (year, month, day, leap) = match date {
        CalendarDate::Gregorian(g) => (g.year(), g.month(), g.day(), false),
        CalendarDate::Hijri(h) => (h.year(), h.month(), h.day(), false),
        CalendarDate::Lunar(l) => (l.lunar_year(), l.month(), l.day(), l.is_leap_month()),
    };
    let calendar = date.system();
    let vocab = |list: Option<&[Vec<String>]>, i: u8| -> Result<String, FormatError> {
        list.and_then(|l| l.get(i as usize - 1))
            .map(|alts| alts[0].clone())
            .ok_or_else(|| FormatError::Locale(format!("no name for index {i}")))
    };
    let mut out = String::new();
    for piece in template.pieces() {
        match piece {
            Piece::Delimiter(s) | Piece::Marker(s) => out.push_str(s),
            Piece::Slot(slot) => match slot {
                SlotKind::Day if opts.pad_day == Some(true) => out.push_str(&format!("{day:02}")),
                SlotKind::Day => out.push_str(&day.to_string()),
                SlotKind::Day2 if opts.pad_day == Some(false) => out.push_str(&day.to_string()),
                SlotKind::Day2 => out.push_str(&format!("{day:02}")),
                SlotKind::DayOrd => out.push_str(&format!("{day}{}", ordinal_suffix(day as u32))),
                SlotKind::Month => out.push_str(&month.to_string()),
                SlotKind::Month2 => out.push_str(&format!("{month:02}")),
                SlotKind::MonthName => out.push_str(&vocab(table.month_names(calendar), month)?),
                SlotKind::LunarMonth => {
                    if leap {
                        out.push_str(table.leap_prefixes().first().map(String::as_str).unwrap_or("闰"));
                    }
                    out.push_str(&vocab(table.month_names(CalendarSystem::Lunar), month)?);
                }
                SlotKind::LunarDay => out.push_str(&vocab(table.lunar_days(), day)?),
                SlotKind::Year => out.push_str(&year.to_string()),
                SlotKind::Year4 => out.push_str(&format!("{year:04}")),
                SlotKind::LunarYear => {
                    for c in year.to_string().chars() {
                        let d = c.to_digit(10).expect("years are non-negative") as u8;
                        out.push_str(&vocab(table.year_digits(), d + 1)?);
                    }
                }
                SlotKind::Ganzhi => out.push_str(&ganzhi_name(crate::calendar::ganzhi_index(year))),
            },
        }
    }
    Ok(out)
}

fn is_cjk(c: char) -> bool {
    matches!(c, '\u{3000}'..='\u{9FFF}' | '\u{F900}'..='\u{FAFF}' | '\u{20000}'..='\u{2FFFF}')
}

fn is_word_letter(c: char) -> bool {
    c.is_alphabetic() && !is_cjk(c)
}

/// True when `a` and `b` would run together into one number or one word.
pub(crate) fn word_clash(a: char, b: char) -> bool {
    (digit_value(a).is_some() && digit_value(b).is_some()) || (is_word_letter(a) && is_word_letter(b))
}

fn chars_eq(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Matches `lit` at `pos`; returns the end offset.
fn match_literal(text: &str, pos: usize, lit: &str) -> Option<usize> {
    let mut t = text[pos..].char_indices().peekable();
    let mut l = lit.chars().peekable();
    let mut end = 0;
    while let Some(lc) = l.next() {
        if lc.is_whitespace() {
            while l.peek().is_some_and(|c| c.is_whitespace()) {
                l.next();
            }
            let mut n = 0;
            while let Some(&(i, tc)) = t.peek() {
                if !tc.is_whitespace() {
                    break;
                }
                end = i + tc.len_utf8();
                t.next();
                n += 1;
            }
            if n == 0 {
                return None;
            }
        } else {
            let (i, tc) = t.next()?;
            if !chars_eq(lc, tc) {
                return None;
            }
            end = i + tc.len_utf8();
        }
    }
    Some(pos + end)
}

/// Maximal digit run at `pos`: (end, value, digit count).
fn digit_run(text: &str, pos: usize) -> Option<(usize, i64, usize)> {
    let mut value: i64 = 0;
    let mut n = 0;
    let mut end = pos;
    for c in text[pos..].chars() {
        let Some(v) = digit_value(c) else { break };
        value = value.saturating_mul(10).saturating_add(v as i64);
        n += 1;
        end += c.len_utf8();
    }
    (n > 0).then_some((end, value, n))
}

fn prev_char(text: &str, pos: usize) -> Option<char> {
    text[..pos].chars().next_back()
}

fn next_char(text: &str, pos: usize) -> Option<char> {
    text[pos..].chars().next()
}

/// Vocabulary lookup: every (end, 1-based index) whose alternative matches at `pos`.
fn match_names(text: &str, pos: usize, names: &[Vec<String>], word_boundary: bool) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    for (i, alts) in names.iter().enumerate() {
        for alt in alts {
            let Some(end) = match_literal(text, pos, alt) else { continue };
            if word_boundary {
                let last = prev_char(text, end).unwrap();
                if next_char(text, end).is_some_and(|n| word_clash(last, n)) {
                    continue;
                }
            }
            out.push((end, i as u32 + 1));
        }
    }
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    out.dedup();
    out
}

struct Matcher<'a> {
    table: &'a LocaleTable,
    template: &'a Template,
    calendar: CalendarSystem,
    text: &'a str,
}

impl Matcher<'_> {
    fn candidates(&self, piece: &Piece, pos: usize, f: Fields) -> Vec<(usize, Fields)> {
        let text = self.text;
        match piece {
            Piece::Delimiter(lit) | Piece::Marker(lit) => match_literal(text, pos, lit).map(|e| (e, f)).into_iter().collect(),
            Piece::Slot(slot) => match slot {
                SlotKind::Day | SlotKind::Day2 | SlotKind::Month | SlotKind::Month2 => {
                    let Some((end, v, n)) = digit_run(text, pos) else { return vec![] };
                    if n > 2 {
                        return vec![];
                    }
                    let mut f = f;
                    if slot.role() == Role::Day {
                        f.day = Some(v as u32);
                    } else {
                        f.month = Some(v as u32);
                    }
                    vec![(end, f)]
                }
                SlotKind::Year | SlotKind::Year4 => {
                    let Some((end, v, n)) = digit_run(text, pos) else { return vec![] };
                    let ok = if *slot == SlotKind::Year4 { n == 4 } else { n <= 4 };
                    if !ok {
                        return vec![];
                    }
                    vec![(end, Fields { year: Some(v), ..f })]
                }
                SlotKind::DayOrd => {
                    let Some((end, v, n)) = digit_run(text, pos) else { return vec![] };
                    if n > 2 {
                        return vec![];
                    }
                    ["st", "nd", "rd", "th"]
                        .iter()
                        .filter_map(|s| match_literal(text, end, s))
                        .filter(|&e| !next_char(text, e).is_some_and(is_word_letter))
                        .map(|e| (e, Fields { day: Some(v as u32), ..f }))
                        .take(1)
                        .collect()
                }
                SlotKind::MonthName => {
                    let Some(names) = self.table.month_names(self.calendar) else { return vec![] };
                    match_names(text, pos, names, true)
                        .into_iter()
                        .map(|(e, m)| (e, Fields { month: Some(m), ..f }))
                        .collect()
                }
                SlotKind::LunarMonth => {
                    let Some(names) = self.table.month_names(CalendarSystem::Lunar) else { return vec![] };
                    let mut starts = vec![(pos, false)];
                    for p in self.table.leap_prefixes() {
                        if let Some(e) = match_literal(text, pos, p) {
                            starts.push((e, true));
                        }
                    }
                    let mut out = Vec::new();
                    for (start, leap) in starts {
                        for (e, m) in match_names(text, start, names, false) {
                            out.push((e, Fields { month: Some(m), leap, ..f }));
                        }
                    }
                    out
                }
                SlotKind::LunarDay => {
                    let Some(names) = self.table.lunar_days() else { return vec![] };
                    match_names(text, pos, names, false)
                        .into_iter()
                        .map(|(e, d)| (e, Fields { day: Some(d), ..f }))
                        .collect()
                }
                SlotKind::LunarYear => {
                    let Some(digits) = self.table.year_digits() else { return vec![] };
                    let (mut end, mut value, mut n) = (pos, 0i64, 0);
                    while let Some((e, d)) = match_names(text, end, digits, false).first().copied() {
                        value = value * 10 + (d as i64 - 1);
                        end = e;
                        n += 1;
                        if n > 4 {
                            return vec![];
                        }
                    }
                    if n == 0 {
                        return vec![];
                    }
                    vec![(end, Fields { year: Some(value), ..f })]
                }
                SlotKind::Ganzhi => {
                    let mut it = text[pos..].char_indices();
                    let (Some(_), Some((i, c))) = (it.next(), it.next()) else { return vec![] };
                    let end = pos + i + c.len_utf8();
                    match ganzhi_from_name(&text[pos..end]) {
                        Some(g) => vec![(end, Fields { ganzhi: Some(g), ..f })],
                        None => vec![],
                    }
                }
            },
        }
    }

    /// Depth-first over pieces; `on` returns true to stop the search.
    fn run(
        &self,
        piece: usize,
        pos: usize,
        f: Fields,
        spans: &mut Vec<Range<usize>>,
        on: &mut OnComplete,
    ) -> bool {
        let pieces = self.template.pieces();
        if piece == pieces.len() {
            return on(pos, &f, spans);
        }
        for (end, nf) in self.candidates(&pieces[piece], pos, f) {
            spans.push(pos..end);
            if self.run(piece + 1, end, nf, spans, on) {
                return true;
            }
            spans.pop();
        }
        false
    }
}

fn interpret(calendar: CalendarSystem, f: &Fields) -> Option<CalendarDate> {
    let month = u8::try_from(f.month?).ok()?;
    let day = u8::try_from(f.day?).ok()?;
    match calendar {
        CalendarSystem::Gregorian => {
            Some(GregorianDate::new(i32::try_from(f.year?).ok()?, month, day).ok()?.into())
        }
        CalendarSystem::Hijri => Some(HijriDate::new(i32::try_from(f.year?).ok()?, month, day).ok()?.into()),
        CalendarSystem::Lunar => {
            let year = match (f.year, f.ganzhi) {
                (Some(y), _) => i32::try_from(y).ok()?,
                (None, Some(g)) => GANZHI_BASE_YEAR + g as i32,
                (None, None) => return None,
            };
            Some(LunarDate::new(year, month, f.leap, day).ok()?.into())
        }
    }
}

/// All valid matches of `template` starting at `start`, in search order:
/// (end, date, piece spans). Stops early when `first_only`.
pub(crate) fn match_at(
    table: &LocaleTable,
    template: &Template,
    calendar: CalendarSystem,
    text: &str,
    start: usize,
    mut accept: impl FnMut(usize) -> bool,
    first_only: bool,
) -> Vec<(usize, CalendarDate, Vec<Range<usize>>)> {
    let m = Matcher { table, template, calendar, text };
    let mut found = Vec::new();
    let mut spans = Vec::new();
    m.run(0, start, Fields::default(), &mut spans, &mut |end, f, spans| {
        if !accept(end) {
            return false;
        }
        if let Some(date) = interpret(calendar, f) {
            found.push((end, date, spans.to_vec()));
            return first_only;
        }
        false
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_template_syntax() {
        let t = Template::parse("{dayord} [of] {monthname} {year}").unwrap();
        assert_eq!(
            t.pieces(),
            &[
                Piece::Slot(SlotKind::DayOrd),
                Piece::Delimiter(" ".into()),
                Piece::Marker("of".into()),
                Piece::Delimiter(" ".into()),
                Piece::Slot(SlotKind::MonthName),
                Piece::Delimiter(" ".into()),
                Piece::Slot(SlotKind::Year),
            ]
        );
        let t = Template::parse(r"\u{200E}{year4}-{month2}-{day2}\u{200E}").unwrap();
        assert_eq!(t.pieces()[0], Piece::Delimiter("\u{200E}".into()));
        assert_eq!(t.pieces().len(), 7);
    }

    #[test]
    fn rejects_bad_templates() {
        for bad in ["{year}{month}", "{bogus}", "[unterminated", "no slots", "{year}]", "[]{year}", r"\q{year}"] {
            assert!(Template::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ordinals() {
        let got: Vec<_> = [1, 2, 3, 4, 11, 12, 13, 21, 22, 23, 31].iter().map(|&d| ordinal_suffix(d)).collect();
        assert_eq!(got, ["st", "nd", "rd", "th", "th", "th", "th", "st", "nd", "rd", "st"]);
    }

    #[test]
    fn literal_matching() {
        assert_eq!(match_literal("des  Jahres x", 0, "des Jahres"), Some(11));
        assert_eq!(match_literal("desJahres", 0, "des Jahres"), None);
        assert_eq!(match_literal("OF", 0, "of"), Some(2));
        assert_eq!(match_literal("ab", 1, "bc"), None);
    }

    #[test]
    fn digit_runs_cover_scripts() {
        assert_eq!(digit_run("٢٠٢٣x", 0), Some(("٢٠٢٣".len(), 2023, 4)));
        assert_eq!(digit_run("x1", 0), None);
        assert_eq!(digit_run("a12", 1), Some((3, 12, 2)));
    }

    #[test]
    fn word_clash_rules() {
        assert!(word_clash('1', '٢'));
        assert!(word_clash('a', 'B'));
        assert!(!word_clash('年', '月'));
        assert!(!word_clash('3', 'r'));
    }
}
