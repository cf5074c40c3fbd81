//! Baseline semantic segmentation of date strings.
//!
//! A string is matched against the locale templates of its (language,
//! kind) cell; every template piece becomes one unit. Whitespace stays in
//! delimiter units so that the units tile the input exactly.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{CalendarDate, CalendarSystem};
use crate::datefmt::{is_ignorable, FormatKind, Language, Locales, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentationFailure {
    #[error("empty input")]
    Empty,
    #[error("{input:?} does not match any {lang} {kind} template")]
    NoMatch { input: String, lang: Language, kind: FormatKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticUnit {
    pub role: Role,
    pub text: String,
    pub byte_span: Range<usize>,
}

impl SemanticUnit {
    /// False for units made only of whitespace and bidi marks.
    pub fn has_content(&self) -> bool {
        has_content(&self.text)
    }
}

pub fn has_content(s: &str) -> bool {
    s.chars().any(|c| !is_ignorable(c))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticSegmentation {
    pub input: String,
    pub units: Vec<SemanticUnit>,
    pub language: Language,
    pub kind: FormatKind,
    pub calendar: CalendarSystem,
    #[serde(skip)]
    date: Option<CalendarDate>,
}

impl SemanticSegmentation {
    /// The date the Year/Month/Day units denote.
    pub fn date(&self) -> Option<CalendarDate> {
        self.date
    }

    pub fn units_with_role(&self, role: Role) -> impl Iterator<Item = &SemanticUnit> {
        self.units.iter().filter(move |u| u.role == role)
    }
}

pub fn baseline_segment(s: &str, lang: Language, kind: FormatKind) -> Result<SemanticSegmentation, SegmentationFailure> {
    baseline_segment_with(Locales::builtin(), s, lang, kind)
}

pub fn baseline_segment_with(
    locales: &Locales,
    s: &str,
    lang: Language,
    kind: FormatKind,
) -> Result<SemanticSegmentation, SegmentationFailure> {
    if s.is_empty() {
        return Err(SegmentationFailure::Empty);
    }
    let m = locales
        .match_exact(s, lang, kind)
        .ok_or_else(|| SegmentationFailure::NoMatch { input: s.to_string(), lang, kind })?;
    let units = m
        .segments
        .into_iter()
        .map(|(role, span)| SemanticUnit { role, text: s[span.clone()].to_string(), byte_span: span })
        .collect();
    Ok(SemanticSegmentation {
        input: s.to_string(),
        units,
        language: lang,
        kind,
        calendar: m.calendar,
        date: Some(m.date),
    })
}

/// N_b: units carrying visible content. Pure-whitespace delimiters do not count.
pub fn baseline_unit_count(seg: &SemanticSegmentation) -> usize {
    seg.units.iter().filter(|u| u.has_content()).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(seg: &SemanticSegmentation) -> Vec<(Role, &str)> {
        seg.units.iter().map(|u| (u.role, u.text.as_str())).collect()
    }

    #[test]
    fn german_textual() {
        let seg = baseline_segment("10. Oktober 2034", Language::De, FormatKind::Textual).unwrap();
        assert_eq!(
            shape(&seg),
            [
                (Role::Day, "10"),
                (Role::Delimiter, ". "),
                (Role::Month, "Oktober"),
                (Role::Delimiter, " "),
                (Role::Year, "2034")
            ]
        );
        assert_eq!(baseline_unit_count(&seg), 4);
    }

    #[test]
    fn chinese_markers_are_separate_units() {
        let seg = baseline_segment("2034年10月10日", Language::Zh, FormatKind::Textual).unwrap();
        assert_eq!(
            shape(&seg),
            [
                (Role::Year, "2034"),
                (Role::CalendarMarker, "年"),
                (Role::Month, "10"),
                (Role::CalendarMarker, "月"),
                (Role::Day, "10"),
                (Role::CalendarMarker, "日")
            ]
        );
        assert_eq!(baseline_unit_count(&seg), 6);
    }

    #[test]
    fn iso_and_counts() {
        for lang in Language::ALL {
            let s = if lang == Language::Ar { "\u{200E}2023-07-03\u{200E}" } else { "2023-07-03" };
            let seg = baseline_segment(s, lang, FormatKind::Iso).unwrap();
            let roles: Vec<Role> = seg.units.iter().filter(|u| u.has_content()).map(|u| u.role).collect();
            assert_eq!(roles, [Role::Year, Role::Delimiter, Role::Month, Role::Delimiter, Role::Day]);
            assert_eq!(baseline_unit_count(&seg), 5);
        }
        let seg = baseline_segment("03 ga Yuli 2023", Language::Ha, FormatKind::Textual).unwrap();
        assert_eq!(baseline_unit_count(&seg), 4);
        assert_eq!(seg.units_with_role(Role::CalendarMarker).next().unwrap().text, "ga");
    }

    #[test]
    fn markers_and_phrases() {
        let seg = baseline_segment("03. Juli des Jahres 2023", Language::De, FormatKind::CalendarSpecific).unwrap();
        assert_eq!(seg.units_with_role(Role::CalendarMarker).next().unwrap().text, "des Jahres");
        let seg = baseline_segment("٣ رمضان ١٤٤٥هـ", Language::Ar, FormatKind::CalendarSpecific).unwrap();
        assert_eq!(seg.calendar, CalendarSystem::Hijri);
        assert_eq!(seg.units.last().unwrap().text, "هـ");
        assert_eq!(seg.units.last().unwrap().role, Role::CalendarMarker);
    }

    #[test]
    fn failures() {
        assert_eq!(baseline_segment("", Language::En, FormatKind::Iso), Err(SegmentationFailure::Empty));
        assert!(matches!(
            baseline_segment("03/07/2023", Language::En, FormatKind::Iso),
            Err(SegmentationFailure::NoMatch { .. })
        ));
        assert!(baseline_segment(" 2023-07-03", Language::En, FormatKind::Iso).is_err());
    }
}
