//! Arithmetic (tabular, "civil") Islamic calendar.
//!
//! 30-year cycle with 11 leap years, where year `y` is leap when
//! `(11y + 14) mod 30 < 11`. 1 Muharram 1 AH falls on JDN 1948440
//! (Friday, 19 July 622 proleptic Gregorian). This is not the Umm al-Qura
//! calendar; observational calendars can differ by up to two days.

use serde::{Deserialize, Serialize};

use super::{CalendarError, GregorianDate};

pub const HIJRI_EPOCH_JDN: i64 = 1_948_440;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HijriDate {
    year: i32,
    month: u8,
    day: u8,
}

pub fn is_leap_year(year: i32) -> bool {
    (11 * year as i64 + 14).rem_euclid(30) < 11
}

pub fn month_length(year: i32, month: u8) -> u8 {
    if month % 2 == 1 || (month == 12 && is_leap_year(year)) {
        30
    } else {
        29
    }
}

pub fn year_length(year: i32) -> u16 {
    if is_leap_year(year) {
        355
    } else {
        354
    }
}

fn jdn_of(year: i32, month: u8, day: u8) -> i64 {
    let (y, m, d) = (year as i64, month as i64, day as i64);
    // ceil(29.5 * (m - 1)) in integers
    let month_days = (59 * (m - 1) + 1) / 2;
    d + month_days + (y - 1) * 354 + (3 + 11 * y).div_euclid(30) + HIJRI_EPOCH_JDN - 1
}

impl HijriDate {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self, CalendarError> {
        if year < 1 {
            return Err(CalendarError::OutOfRange(format!("Hijri year {year} before 1 AH")));
        }
        if !(1..=12).contains(&month) || day == 0 || day > month_length(year, month) {
            return Err(CalendarError::InvalidDate(format!(
                "{day} of month {month}, {year} AH does not exist in the tabular calendar"
            )));
        }
        Ok(Self { year, month, day })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn day(&self) -> u8 {
        self.day
    }

    pub fn to_jdn(&self) -> i64 {
        jdn_of(self.year, self.month, self.day)
    }

    pub fn from_jdn(jdn: i64) -> Result<Self, CalendarError> {
        if jdn < HIJRI_EPOCH_JDN {
            return Err(CalendarError::OutOfRange(format!(
                "JDN {jdn} precedes the Hijri epoch"
            )));
        }
        let mut year = ((30 * (jdn - HIJRI_EPOCH_JDN) + 10646).div_euclid(10631)) as i32;
        while jdn_of(year + 1, 1, 1) <= jdn {
            year += 1;
        }
        while jdn_of(year, 1, 1) > jdn {
            year -= 1;
        }
        let month = (1..=12u8)
            .rev()
            .find(|&m| jdn_of(year, m, 1) <= jdn)
            .expect("month 1 starts the year");
        let day = (jdn - jdn_of(year, month, 1) + 1) as u8;
        Ok(Self { year, month, day })
    }

    pub fn from_gregorian(date: GregorianDate) -> Result<Self, CalendarError> {
        Self::from_jdn(date.to_jdn())
    }

    pub fn to_gregorian(&self) -> Result<GregorianDate, CalendarError> {
        GregorianDate::from_jdn(self.to_jdn())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(y: i32, m: u8, d: u8) -> GregorianDate {
        GregorianDate::new(y, m, d).unwrap()
    }

    #[test]
    fn epoch_anchor() {
        let h = HijriDate::new(1, 1, 1).unwrap();
        assert_eq!(h.to_jdn(), 1948440);
        assert_eq!(h.to_gregorian().unwrap(), g(622, 7, 19));
        assert_eq!(HijriDate::from_gregorian(g(622, 7, 19)).unwrap(), h);
        assert!(HijriDate::from_gregorian(g(622, 7, 18)).is_err());
    }

    // Expected values produced by the `convertdate` tabular-islamic routines.
    #[test]
    fn known_conversions() {
        assert_eq!(
            HijriDate::from_gregorian(g(2023, 7, 3)).unwrap(),
            HijriDate::new(1444, 12, 14).unwrap()
        );
        assert_eq!(HijriDate::new(1445, 1, 1).unwrap().to_gregorian().unwrap(), g(2023, 7, 19));
    }

    #[test]
    fn leap_rule() {
        // (11 * 1445 + 14) mod 30 = 15909 mod 30 = 9 < 11
        assert_eq!((11 * 1445 + 14) % 30, 9);
        assert!(is_leap_year(1445));
        assert!(!is_leap_year(1444));
        let leaps: Vec<i32> = (1..=30).filter(|&y| is_leap_year(y)).collect();
        assert_eq!(leaps, vec![2, 5, 7, 10, 13, 16, 18, 21, 24, 26, 29]);
        assert!(HijriDate::new(1445, 12, 30).is_ok());
        assert!(HijriDate::new(1444, 12, 30).is_err());
        assert!(HijriDate::new(1444, 2, 30).is_err());
    }

    #[test]
    fn year_lengths_and_cycle() {
        for y in 1..=1500 {
            let len = HijriDate::new(y + 1, 1, 1).unwrap().to_jdn() - HijriDate::new(y, 1, 1).unwrap().to_jdn();
            assert_eq!(len, year_length(y) as i64);
        }
        // one full cycle is 10631 days
        assert_eq!(
            HijriDate::new(31, 1, 1).unwrap().to_jdn() - HijriDate::new(1, 1, 1).unwrap().to_jdn(),
            10631
        );
    }
}
