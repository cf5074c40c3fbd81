//! Locale-table driven date formatting and parsing.
//!
//! Every (language, format kind) cell has a template in the language's
//! locale file. The same templates drive formatting, anchored parsing,
//! date scanning in free text, and the baseline segmentation in
//! [`crate::semtok`].

mod extract;
mod locale;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{CalendarDate, CalendarError, CalendarSystem};

pub use extract::extract_dates;
pub use locale::{LocaleTable, Locales};
pub use template::{Piece, Role, SlotKind, Template, TemplateMatch};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("unparseable date {0:?}")]
    Unparseable(String),
    #[error("locale table: {0}")]
    Locale(String),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    De,
    Zh,
    Ar,
    Ha,
}

impl Language {
    pub const ALL: [Language; 5] = [Self::En, Self::De, Self::Zh, Self::Ar, Self::Ha];

    pub fn code(&self) -> &'static str {
        match self {
            Self::En => "en",
            Self::De => "de",
            Self::Zh => "zh",
            Self::Ar => "ar",
            Self::Ha => "ha",
        }
    }

    /// High-resource: en, de, zh. Low-resource: ar, ha.
    pub fn is_high_resource(&self) -> bool {
        matches!(self, Self::En | Self::De | Self::Zh)
    }

    pub(crate) fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Self::En),
            "de" | "german" => Ok(Self::De),
            "zh" | "chinese" => Ok(Self::Zh),
            "ar" | "arabic" => Ok(Self::Ar),
            "ha" | "hausa" => Ok(Self::Ha),
            other => Err(format!("unsupported language {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FormatKind {
    #[serde(rename = "iso")]
    Iso,
    #[serde(rename = "numeric")]
    Numeric,
    #[serde(rename = "textual")]
    Textual,
    #[serde(rename = "calendar")]
    CalendarSpecific,
}

impl FormatKind {
    pub const ALL: [FormatKind; 4] = [Self::Iso, Self::Numeric, Self::Textual, Self::CalendarSpecific];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Iso => "iso",
            Self::Numeric => "numeric",
            Self::Textual => "textual",
            Self::CalendarSpecific => "calendar",
        }
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormatKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iso" => Ok(Self::Iso),
            "numeric" | "slash" => Ok(Self::Numeric),
            "textual" | "long" => Ok(Self::Textual),
            "calendar" | "calendarspecific" | "calendar_specific" | "phrasal" => Ok(Self::CalendarSpecific),
            other => Err(format!("unknown format kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DigitScript {
    #[default]
    Western,
    /// Eastern Arabic-Indic, U+0660..=U+0669.
    EasternArabic,
}

impl FromStr for DigitScript {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "western" => Ok(Self::Western),
            "eastern" | "eastern-arabic" => Ok(Self::EasternArabic),
            other => Err(format!("unknown digit script {other:?}")),
        }
    }
}

/// Decimal value of a digit in any supported script (Western, Eastern
/// Arabic-Indic, Extended Arabic-Indic).
pub fn digit_value(c: char) -> Option<u32> {
    match c {
        '0'..='9' => Some(c as u32 - '0' as u32),
        '\u{0660}'..='\u{0669}' => Some(c as u32 - 0x0660),
        '\u{06F0}'..='\u{06F9}' => Some(c as u32 - 0x06F0),
        _ => None,
    }
}

/// Rewrites digits into `target`; every other character is left untouched.
pub fn convert_digits(s: &str, target: DigitScript) -> String {
    s.chars()
        .map(|c| match (target, digit_value(c)) {
            (DigitScript::Western, Some(v)) => char::from_digit(v, 10).unwrap(),
            (DigitScript::EasternArabic, Some(v)) if c.is_ascii_digit() => {
                char::from_u32(0x0660 + v).unwrap()
            }
            _ => c,
        })
        .collect()
}

/// Bidi formatting characters that carry no visible content.
pub fn is_bidi_mark(c: char) -> bool {
    matches!(c, '\u{200E}' | '\u{200F}' | '\u{061C}' | '\u{202A}'..='\u{202E}' | '\u{2066}'..='\u{2069}')
}

/// Whitespace or an invisible bidi mark.
pub fn is_ignorable(c: char) -> bool {
    c.is_whitespace() || is_bidi_mark(c)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormatOptions {
    /// Named template variant, e.g. `ganzhi` (zh lunar) or `sentence` (de).
    pub variant: Option<String>,
    /// Force (`true`) or suppress (`false`) two-digit day padding.
    pub pad_day: Option<bool>,
}

/// Formats `date` with the builtin locale tables.
pub fn format_date(date: &CalendarDate, lang: Language, kind: FormatKind) -> Result<String, FormatError> {
    Locales::builtin().format(date, lang, kind, &FormatOptions::default())
}

pub fn format_date_with(
    date: &CalendarDate,
    lang: Language,
    kind: FormatKind,
    opts: &FormatOptions,
) -> Result<String, FormatError> {
    Locales::builtin().format(date, lang, kind, opts)
}

/// Parses a bare date string with every template of `lang`.
pub fn parse_date(s: &str, lang: Language) -> Result<CalendarDate, FormatError> {
    Locales::builtin().parse(s, lang)
}

/// The calendar system a (language, kind) cell formats Gregorian input into.
pub fn target_calendar(lang: Language, kind: FormatKind) -> CalendarSystem {
    match (lang, kind) {
        (Language::Zh, FormatKind::CalendarSpecific) => CalendarSystem::Lunar,
        (Language::Ar | Language::Ha, FormatKind::CalendarSpecific) => CalendarSystem::Hijri,
        _ => CalendarSystem::Gregorian,
    }
}
