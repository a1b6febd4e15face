use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Maximum number of priority levels an output port can carry.
pub const MAX_PRIORITIES: u8 = 8;

/// An 802.1p-style priority level. Larger values are more urgent.
///
/// Three-class configurations use levels 2, 1 and 0, named `high`,
/// `mean` and `low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Priority(u8);

impl Priority {
    pub const LOW: Priority = Priority(0);
    pub const MEAN: Priority = Priority(1);
    pub const HIGH: Priority = Priority(2);

    /// The three classes of a three-class switch, most urgent first.
    pub const THREE_CLASS: [Priority; 3] = [Priority::HIGH, Priority::MEAN, Priority::LOW];

    pub fn new(level: u8) -> Option<Priority> {
        (level < MAX_PRIORITIES).then_some(Priority(level))
    }

    pub const fn level(self) -> u8 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("low"),
            1 => f.write_str("mean"),
            2 => f.write_str("high"),
            n => write!(f, "p{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown priority class {0:?} (expected high, mean, low, p0..p7 or 0..7)")]
pub struct ParsePriorityError(String);

impl FromStr for Priority {
    type Err = ParsePriorityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParsePriorityError(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "high" | "hp" => Ok(Priority::HIGH),
            "mean" | "mp" => Ok(Priority::MEAN),
            "low" | "bp" | "lp" => Ok(Priority::LOW),
            other => {
                let digits = other.strip_prefix('p').unwrap_or(other);
                let level: u8 = digits.parse().map_err(|_| err())?;
                Priority::new(level).ok_or_else(err)
            }
        }
    }
}

impl Serialize for Priority {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Priority {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Level(u8),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Level(l) => Priority::new(l)
                .ok_or_else(|| serde::de::Error::custom(format!("priority level {l} out of range 0..7"))),
            Raw::Name(n) => n.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in (0..MAX_PRIORITIES).map(|l| Priority::new(l).unwrap()) {
            assert_eq!(p.to_string().parse::<Priority>().unwrap(), p);
        }
        assert_eq!("HP".parse::<Priority>().unwrap(), Priority::HIGH);
        assert!("p8".parse::<Priority>().is_err());
    }

    #[test]
    fn ordering_puts_high_above_low() {
        assert!(Priority::HIGH > Priority::MEAN);
        assert!(Priority::MEAN > Priority::LOW);
    }
}
