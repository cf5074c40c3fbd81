//! Gregorian, tabular Hijri and Chinese lunar calendars.
//!
//! All conversions pivot through the Julian Day Number.

mod gregorian;
mod hijri;
mod lunar;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gregorian::{days_in_month, is_leap_year, GregorianDate, MAX_YEAR, MIN_YEAR};
pub use hijri::{
    is_leap_year as is_hijri_leap_year, month_length as hijri_month_length, year_length as hijri_year_length, HijriDate,
    HIJRI_EPOCH_JDN,
};
pub use lunar::{ganzhi_from_name, ganzhi_index, ganzhi_name, LunarDate, LunarTable, LunarYear, HEAVENLY_STEMS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalendarError {
    #[error("invalid date: {0}")]
    InvalidDate(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("lunar table: {0}")]
    Table(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalendarSystem {
    Gregorian,
    Hijri,
    Lunar,
}

impl CalendarSystem {
    pub const ALL: [CalendarSystem; 3] = [Self::Gregorian, Self::Hijri, Self::Lunar];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gregorian => "gregorian",
            Self::Hijri => "hijri",
            Self::Lunar => "lunar",
        }
    }
}

impl fmt::Display for CalendarSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CalendarSystem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gregorian" | "greg" => Ok(Self::Gregorian),
            "hijri" => Ok(Self::Hijri),
            "lunar" => Ok(Self::Lunar),
            other => Err(format!("unknown calendar {other:?}")),
        }
    }
}

/// A day in one of the supported calendar systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CalendarDate {
    Gregorian(GregorianDate),
    Hijri(HijriDate),
    Lunar(LunarDate),
}

impl CalendarDate {
    pub fn system(&self) -> CalendarSystem {
        match self {
            Self::Gregorian(_) => CalendarSystem::Gregorian,
            Self::Hijri(_) => CalendarSystem::Hijri,
            Self::Lunar(_) => CalendarSystem::Lunar,
        }
    }

    pub fn to_jdn(&self) -> Result<i64, CalendarError> {
        match self {
            Self::Gregorian(g) => Ok(g.to_jdn()),
            Self::Hijri(h) => Ok(h.to_jdn()),
            Self::Lunar(l) => l.to_jdn(),
        }
    }

    pub fn to_gregorian(&self) -> Result<GregorianDate, CalendarError> {
        match self {
            Self::Gregorian(g) => Ok(*g),
            Self::Hijri(h) => h.to_gregorian(),
            Self::Lunar(l) => l.to_gregorian(),
        }
    }

    /// The same day expressed in `system`.
    pub fn convert(&self, system: CalendarSystem) -> Result<CalendarDate, CalendarError> {
        let g = self.to_gregorian()?;
        Ok(match system {
            CalendarSystem::Gregorian => Self::Gregorian(g),
            CalendarSystem::Hijri => Self::Hijri(HijriDate::from_gregorian(g)?),
            CalendarSystem::Lunar => Self::Lunar(LunarDate::from_gregorian(g)?),
        })
    }
}

impl From<GregorianDate> for CalendarDate {
    fn from(g: GregorianDate) -> Self {
        Self::Gregorian(g)
    }
}

impl From<HijriDate> for CalendarDate {
    fn from(h: HijriDate) -> Self {
        Self::Hijri(h)
    }
}

impl From<LunarDate> for CalendarDate {
    fn from(l: LunarDate) -> Self {
        Self::Lunar(l)
    }
}
