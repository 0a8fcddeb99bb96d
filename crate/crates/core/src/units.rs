//! The ordered eight-step duration scale.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A duration granularity, ordered from seconds to decades.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DurationUnit {
    Seconds,
    Minutes,
    Hours,
    Days,
    Weeks,
    Months,
    Years,
    Decades,
}

impl DurationUnit {
    pub const COUNT: usize = 8;

    pub const ALL: [DurationUnit; 8] = [
        DurationUnit::Seconds,
        DurationUnit::Minutes,
        DurationUnit::Hours,
        DurationUnit::Days,
        DurationUnit::Weeks,
        DurationUnit::Months,
        DurationUnit::Years,
        DurationUnit::Decades,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Absolute difference of scale positions.
    pub fn distance(self, other: DurationUnit) -> usize {
        self.index().abs_diff(other.index())
    }

    pub fn singular(self) -> &'static str {
        match self {
            DurationUnit::Seconds => "second",
            DurationUnit::Minutes => "minute",
            DurationUnit::Hours => "hour",
            DurationUnit::Days => "day",
            DurationUnit::Weeks => "week",
            DurationUnit::Months => "month",
            DurationUnit::Years => "year",
            DurationUnit::Decades => "decade",
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            DurationUnit::Seconds => "seconds",
            DurationUnit::Minutes => "minutes",
            DurationUnit::Hours => "hours",
            DurationUnit::Days => "days",
            DurationUnit::Weeks => "weeks",
            DurationUnit::Months => "months",
            DurationUnit::Years => "years",
            DurationUnit::Decades => "decades",
        }
    }

    /// Immediate neighbours on the scale (one at either end).
    pub fn neighbors(self) -> impl Iterator<Item = DurationUnit> {
        let i = self.index();
        [i.checked_sub(1), Some(i + 1)]
            .into_iter()
            .flatten()
            .filter_map(DurationUnit::from_index)
    }
}

impl fmt::Display for DurationUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.plural())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown duration unit {0:?}")]
pub struct UnknownUnit(pub String);

impl FromStr for DurationUnit {
    type Err = UnknownUnit;

    /// Accepts singular or plural names, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        DurationUnit::ALL
            .into_iter()
            .find(|u| u.plural() == lower || u.singular() == lower)
            .ok_or_else(|| UnknownUnit(s.to_string()))
    }
}

impl Serialize for DurationUnit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.plural())
    }
}

impl<'de> Deserialize<'de> for DurationUnit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_ordered_units() {
        assert_eq!(DurationUnit::ALL.len(), 8);
        for w in DurationUnit::ALL.windows(2) {
            assert!(w[0] < w[1]);
        }
        for (i, u) in DurationUnit::ALL.iter().enumerate() {
            assert_eq!(u.index(), i);
            assert_eq!(DurationUnit::from_index(i), Some(*u));
        }
        assert_eq!(DurationUnit::from_index(8), None);
    }

    #[test]
    fn distance_is_index_difference() {
        assert_eq!(DurationUnit::Minutes.distance(DurationUnit::Hours), 1);
        assert_eq!(DurationUnit::Decades.distance(DurationUnit::Seconds), 7);
        assert_eq!(DurationUnit::Days.distance(DurationUnit::Days), 0);
    }

    #[test]
    fn parses_both_number_forms() {
        assert_eq!("hour".parse::<DurationUnit>().unwrap(), DurationUnit::Hours);
        assert_eq!("Decades".parse::<DurationUnit>().unwrap(), DurationUnit::Decades);
        assert!("fortnight".parse::<DurationUnit>().is_err());
    }

    #[test]
    fn boundary_units_have_one_neighbor() {
        assert_eq!(DurationUnit::Seconds.neighbors().collect::<Vec<_>>(), vec![DurationUnit::Minutes]);
        assert_eq!(DurationUnit::Decades.neighbors().collect::<Vec<_>>(), vec![DurationUnit::Years]);
        assert_eq!(DurationUnit::Hours.neighbors().count(), 2);
    }
}
