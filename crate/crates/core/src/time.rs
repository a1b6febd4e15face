//! Integer simulation clock.
//!
//! All simulated time is kept in integer ticks. A time unit (T.U) is
//! `tick_scale` ticks, 1000 unless a scenario says otherwise.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// Default number of ticks per time unit.
pub const DEFAULT_TICK_SCALE: u64 = 1000;

/// A point in (or span of) simulated time, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub const fn from_tu(tu: u64, scale: u64) -> SimTime {
        SimTime(tu * scale)
    }

    /// Value in time units as a float, for display only.
    pub fn as_tu(self, scale: u64) -> f64 {
        self.0 as f64 / scale as f64
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}t", self.0)
    }
}

/// Formats `ticks` as a decimal time-unit string with exactly as many
/// fractional digits as the scale needs (3 for the default scale).
pub fn format_tu(ticks: u64, scale: u64) -> String {
    let whole = ticks / scale;
    let frac = ticks % scale;
    let digits = decimal_digits(scale);
    if digits == 0 {
        return whole.to_string();
    }
    // scale is a power of ten whenever digits > 0
    format!("{whole}.{frac:0width$}", width = digits)
}

fn decimal_digits(scale: u64) -> usize {
    let mut s = scale;
    let mut n = 0;
    while s > 1 && s.is_multiple_of(10) {
        s /= 10;
        n += 1;
    }
    if s == 1 {
        n
    } else {
        // non-decimal scale: fall back to a fixed precision
        6
    }
}

/// A time written in a scenario file: either an integer number of time
/// units or a string such as `"2.5 tu"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeValue {
    Units(u64),
    Text(String),
}

impl From<u64> for TimeValue {
    fn from(v: u64) -> Self {
        TimeValue::Units(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimeParseError {
    #[error("malformed time value {0:?} (expected an integer or \"N.M tu\")")]
    Malformed(String),
    #[error("time value {value:?} is not a whole number of ticks at {scale} ticks per time unit")]
    NotRepresentable { value: String, scale: u64 },
    #[error("time value {0:?} overflows")]
    Overflow(String),
}

impl TimeValue {
    /// Exact value in time units.
    pub fn to_units(&self) -> Result<Ratio<i128>, TimeParseError> {
        match self {
            TimeValue::Units(v) => Ok(Ratio::from_integer(*v as i128)),
            TimeValue::Text(s) => parse_units(s),
        }
    }

    /// Converts to ticks; fails if the value is not an integer number of ticks.
    pub fn to_ticks(&self, scale: u64) -> Result<SimTime, TimeParseError> {
        let units = self.to_units()?;
        let ticks = units * Ratio::from_integer(scale as i128);
        if !ticks.is_integer() {
            return Err(TimeParseError::NotRepresentable {
                value: self.to_string(),
                scale,
            });
        }
        ticks
            .to_integer()
            .to_u64()
            .map(SimTime)
            .ok_or_else(|| TimeParseError::Overflow(self.to_string()))
    }
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeValue::Units(v) => write!(f, "{v}"),
            TimeValue::Text(s) => f.write_str(s),
        }
    }
}

fn parse_units(raw: &str) -> Result<Ratio<i128>, TimeParseError> {
    let malformed = || TimeParseError::Malformed(raw.to_string());
    let s = raw.trim();
    let s = s
        .strip_suffix("tu")
        .or_else(|| s.strip_suffix("TU"))
        .or_else(|| s.strip_suffix("T.U"))
        .unwrap_or(s)
        .trim();
    if s.is_empty() {
        return Err(malformed());
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    let all_digits = |p: &str| p.chars().all(|c| c.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) || frac_part.len() > 18 {
        return Err(malformed());
    }
    let int: i128 = if int_part.is_empty() {
        0
    } else {
        int_part
            .parse()
            .map_err(|_| TimeParseError::Overflow(raw.to_string()))?
    };
    let mut value = Ratio::from_integer(int);
    if !frac_part.is_empty() {
        let num: i128 = frac_part.parse().map_err(|_| malformed())?;
        let den = 10i128.pow(frac_part.len() as u32);
        value += Ratio::new(num, den);
    }
    Ok(value)
}
