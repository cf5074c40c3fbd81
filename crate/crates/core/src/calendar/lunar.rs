//! Table-driven Chinese lunisolar calendar, 1900–2100.
//!
//! Each table record gives the Gregorian date of the lunar New Year, the
//! leap month (0 when none), and the month lengths in calendar order with
//! the leap month placed right after the month whose number it repeats.
//!
//! ```text
//! 2023-01-22;2;29,30,29,29,30,30,29,30,30,29,30,29,30
//! ```

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{CalendarError, GregorianDate};

const BUILTIN_TABLE: &str = include_str!("../../data/lunar_years.txt");

pub const HEAVENLY_STEMS: [char; 10] = ['甲', '乙', '丙', '丁', '戊', '己', '庚', '辛', '壬', '癸'];
pub const EARTHLY_BRANCHES: [char; 12] =
    ['子', '丑', '寅', '卯', '辰', '巳', '午', '未', '申', '酉', '戌', '亥'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LunarYear {
    pub year: i32,
    pub new_year_jdn: i64,
    pub leap_month: u8,
    pub month_lengths: Vec<u8>,
}

impl LunarYear {
    pub fn total_days(&self) -> u16 {
        self.month_lengths.iter().map(|&d| d as u16).sum()
    }

    /// Position of (month, leap) in `month_lengths`, if such a month exists.
    fn month_index(&self, month: u8, is_leap: bool) -> Option<usize> {
        if !(1..=12).contains(&month) {
            return None;
        }
        if is_leap {
            return (self.leap_month == month).then_some(month as usize);
        }
        if self.leap_month != 0 && month > self.leap_month {
            Some(month as usize)
        } else {
            Some(month as usize - 1)
        }
    }

    /// Inverse of `month_index`.
    fn month_at(&self, index: usize) -> (u8, bool) {
        let leap = self.leap_month as usize;
        if leap == 0 || index < leap {
            (index as u8 + 1, false)
        } else if index == leap {
            (self.leap_month, true)
        } else {
            (index as u8, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LunarTable {
    years: Vec<LunarYear>,
}

impl LunarTable {
    /// The embedded 1900–2100 table.
    pub fn builtin() -> &'static LunarTable {
        static TABLE: OnceLock<LunarTable> = OnceLock::new();
        TABLE.get_or_init(|| LunarTable::parse(BUILTIN_TABLE).expect("embedded lunar table is valid"))
    }

    pub fn builtin_source() -> &'static str {
        BUILTIN_TABLE
    }

    pub fn parse(text: &str) -> Result<Self, CalendarError> {
        let mut years: Vec<LunarYear> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| CalendarError::Table(format!("line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split(';').collect();
            if fields.len() != 3 {
                return Err(err("expected 3 ';'-separated fields"));
            }
            let new_year: GregorianDate = fields[0].parse().map_err(|_| err("bad new-year date"))?;
            let leap_month: u8 = fields[1].parse().map_err(|_| err("bad leap month"))?;
            if leap_month > 12 {
                return Err(err("leap month must be 0-12"));
            }
            let month_lengths = fields[2]
                .split(',')
                .map(|s| s.trim().parse::<u8>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| err("bad month length"))?;
            let expected = if leap_month == 0 { 12 } else { 13 };
            if month_lengths.len() != expected {
                return Err(err(&format!("expected {expected} month lengths")));
            }
            if month_lengths.iter().any(|&l| l != 29 && l != 30) {
                return Err(err("month lengths must be 29 or 30"));
            }
            let entry = LunarYear {
                year: new_year.year(),
                new_year_jdn: new_year.to_jdn(),
                leap_month,
                month_lengths,
            };
            if !(353..=385).contains(&entry.total_days()) {
                return Err(err("lunar year length outside [353, 385]"));
            }
            if let Some(prev) = years.last() {
                if entry.year != prev.year + 1 {
                    return Err(err("years must be consecutive"));
                }
                if prev.new_year_jdn + prev.total_days() as i64 != entry.new_year_jdn {
                    return Err(err("new year inconsistent with previous year's month lengths"));
                }
            }
            years.push(entry);
        }
        if years.is_empty() {
            return Err(CalendarError::Table("empty lunar table".into()));
        }
        Ok(Self { years })
    }

    pub fn first_year(&self) -> i32 {
        self.years[0].year
    }

    pub fn last_year(&self) -> i32 {
        self.years[self.years.len() - 1].year
    }

    pub fn year(&self, year: i32) -> Option<&LunarYear> {
        let idx = year.checked_sub(self.first_year())?;
        self.years.get(usize::try_from(idx).ok()?)
    }

    pub fn years(&self) -> &[LunarYear] {
        &self.years
    }

    /// Inclusive JDN range covered by the table.
    pub fn jdn_range(&self) -> (i64, i64) {
        let last = &self.years[self.years.len() - 1];
        (self.years[0].new_year_jdn, last.new_year_jdn + last.total_days() as i64 - 1)
    }

    pub fn from_jdn(&self, jdn: i64) -> Result<LunarDate, CalendarError> {
        let (lo, hi) = self.jdn_range();
        if jdn < lo || jdn > hi {
            return Err(CalendarError::OutOfRange(format!(
                "JDN {jdn} outside the lunar table ({lo}..={hi})"
            )));
        }
        let pos = self.years.partition_point(|y| y.new_year_jdn <= jdn) - 1;
        let entry = &self.years[pos];
        let mut offset = jdn - entry.new_year_jdn;
        for (i, &len) in entry.month_lengths.iter().enumerate() {
            if offset < len as i64 {
                let (month, is_leap) = entry.month_at(i);
                return Ok(LunarDate {
                    lunar_year: entry.year,
                    month,
                    is_leap_month: is_leap,
                    day: offset as u8 + 1,
                    ganzhi_index: ganzhi_index(entry.year),
                });
            }
            offset -= len as i64;
        }
        unreachable!("offset within the year's total length")
    }

    pub fn to_jdn(&self, date: &LunarDate) -> Result<i64, CalendarError> {
        let entry = self.year(date.lunar_year).ok_or_else(|| {
            CalendarError::OutOfRange(format!("lunar year {} not in table", date.lunar_year))
        })?;
        let idx = entry.month_index(date.month, date.is_leap_month).ok_or_else(|| {
            CalendarError::InvalidDate(format!(
                "lunar year {} has no {}month {}",
                date.lunar_year,
                if date.is_leap_month { "leap " } else { "" },
                date.month
            ))
        })?;
        let len = entry.month_lengths[idx];
        if date.day == 0 || date.day > len {
            return Err(CalendarError::InvalidDate(format!(
                "lunar month {} of {} has {len} days, got day {}",
                date.month, date.lunar_year, date.day
            )));
        }
        let before: i64 = entry.month_lengths[..idx].iter().map(|&d| d as i64).sum();
        Ok(entry.new_year_jdn + before + date.day as i64 - 1)
    }
}

/// Sexagenary index of a lunar year; 0 is 甲子 (e.g. 1984).
pub fn ganzhi_index(year: i32) -> u8 {
    (year as i64 - 4).rem_euclid(60) as u8
}

pub fn ganzhi_name(index: u8) -> String {
    let i = index as usize % 60;
    [HEAVENLY_STEMS[i % 10], EARTHLY_BRANCHES[i % 12]].iter().collect()
}

/// Index of a two-character stem-branch name, if it is one of the 60 valid pairs.
pub fn ganzhi_from_name(name: &str) -> Option<u8> {
    let mut chars = name.chars();
    let (stem, branch) = (chars.next()?, chars.next()?);
    if chars.next().is_some() {
        return None;
    }
    let s = HEAVENLY_STEMS.iter().position(|&c| c == stem)?;
    let b = EARTHLY_BRANCHES.iter().position(|&c| c == branch)?;
    (0..60u8).find(|&i| i as usize % 10 == s && i as usize % 12 == b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LunarDate {
    lunar_year: i32,
    month: u8,
    is_leap_month: bool,
    day: u8,
    ganzhi_index: u8,
}

impl LunarDate {
    /// Validated against the builtin table.
    pub fn new(lunar_year: i32, month: u8, is_leap_month: bool, day: u8) -> Result<Self, CalendarError> {
        Self::new_in(LunarTable::builtin(), lunar_year, month, is_leap_month, day)
    }

    pub fn new_in(
        table: &LunarTable,
        lunar_year: i32,
        month: u8,
        is_leap_month: bool,
        day: u8,
    ) -> Result<Self, CalendarError> {
        let date = Self {
            lunar_year,
            month,
            is_leap_month,
            day,
            ganzhi_index: ganzhi_index(lunar_year),
        };
        table.to_jdn(&date)?;
        Ok(date)
    }

    pub fn lunar_year(&self) -> i32 {
        self.lunar_year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn is_leap_month(&self) -> bool {
        self.is_leap_month
    }

    pub fn day(&self) -> u8 {
        self.day
    }

    pub fn ganzhi_index(&self) -> u8 {
        self.ganzhi_index
    }

    pub fn from_gregorian(date: GregorianDate) -> Result<Self, CalendarError> {
        LunarTable::builtin().from_jdn(date.to_jdn())
    }

    pub fn to_jdn(&self) -> Result<i64, CalendarError> {
        LunarTable::builtin().to_jdn(self)
    }

    pub fn to_gregorian(&self) -> Result<GregorianDate, CalendarError> {
        GregorianDate::from_jdn(self.to_jdn()?)
    }
}
