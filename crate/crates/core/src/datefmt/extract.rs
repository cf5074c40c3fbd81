//! Regex-based date-entity extraction for seed questions.

use std::ops::Range;
use std::sync::OnceLock;

use regex::{Captures, Regex};

use super::{Language, Locales};
use crate::calendar::{CalendarSystem, GregorianDate};

struct Extractor {
    re: Regex,
    /// Lowercased English month alternative -> month number.
    months: Vec<(String, u8)>,
}

fn extractor() -> &'static Extractor {
    static CELL: OnceLock<Extractor> = OnceLock::new();
    CELL.get_or_init(|| {
        let names = Locales::builtin()
            .table(Language::En)
            .month_names(CalendarSystem::Gregorian)
            .expect("English Gregorian months");
        let mut months: Vec<(String, u8)> = names
            .iter()
            .enumerate()
            .flat_map(|(i, alts)| alts.iter().map(move |a| (a.to_lowercase(), i as u8 + 1)))
            .collect();
        // longest first so the alternation prefers "September" over "Sep"
        months.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        let alt = months.iter().map(|(m, _)| regex::escape(m)).collect::<Vec<_>>().join("|");
        let pattern = format!(
            r"(?i)\b(?:(?P<iy>[0-9]{{4}})-(?P<im>[0-9]{{1,2}})-(?P<id>[0-9]{{1,2}})|(?P<sa>[0-9]{{1,2}})/(?P<sb>[0-9]{{1,2}})/(?P<sy>[0-9]{{4}})|(?P<dd>[0-9]{{1,2}})\.(?P<dm>[0-9]{{1,2}})\.(?P<dy>[0-9]{{4}})|(?P<mn>{alt})\.?\s+(?P<md>[0-9]{{1,2}})(?:st|nd|rd|th)?,?\s+(?P<my>[0-9]{{4}})|(?P<xd>[0-9]{{1,2}})(?:st|nd|rd|th)?\s+(?:of\s+)?(?P<xn>{alt})\.?,?\s+(?P<xy>[0-9]{{4}}))\b"
        );
        Extractor { re: Regex::new(&pattern).expect("static pattern"), months }
    })
}

fn num(c: &Captures<'_>, name: &str) -> Option<i64> {
    c.name(name)?.as_str().parse().ok()
}

fn date(y: i64, m: i64, d: i64) -> Option<GregorianDate> {
    GregorianDate::new(i32::try_from(y).ok()?, u8::try_from(m).ok()?, u8::try_from(d).ok()?).ok()
}

impl Extractor {
    fn month(&self, name: &str) -> Option<i64> {
        let name = name.to_lowercase();
        self.months.iter().find(|(m, _)| *m == name).map(|(_, n)| *n as i64)
    }

    fn interpret(&self, c: &Captures<'_>) -> Option<GregorianDate> {
        if let Some(y) = num(c, "iy") {
            return date(y, num(c, "im")?, num(c, "id")?);
        }
        if let Some(y) = num(c, "sy") {
            let (a, b) = (num(c, "sa")?, num(c, "sb")?);
            // DD/MM first; MM/DD only when that is the sole valid reading
            return date(y, b, a).or_else(|| date(y, a, b));
        }
        if let Some(y) = num(c, "dy") {
            return date(y, num(c, "dm")?, num(c, "dd")?);
        }
        if let Some(y) = num(c, "my") {
            return date(y, self.month(c.name("mn")?.as_str())?, num(c, "md")?);
        }
        date(num(c, "xy")?, self.month(c.name("xn")?.as_str())?, num(c, "xd")?)
    }
}

/// Non-overlapping date entities, left to right: ISO, DD/MM/YYYY (MM/DD as
/// fallback), DD.MM.YYYY, "Month DD, YYYY" and "DD Month YYYY" with English
/// month names. Matches that are not real calendar dates are skipped.
pub fn extract_dates(text: &str) -> Vec<(Range<usize>, GregorianDate)> {
    let ex = extractor();
    ex.re
        .captures_iter(text)
        .filter_map(|c| Some((c.get(0)?.range(), ex.interpret(&c)?)))
        .collect()
}
