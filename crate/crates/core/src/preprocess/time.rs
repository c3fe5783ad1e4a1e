//! Time-axis transforms mapping event timestamps into the unit interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArtifactStats, Dataset};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum TimeMode {
    /// Real chronology across the whole dataset.
    #[default]
    Absolute,
    /// Every history starts at a common origin.
    RelStart,
    /// Every history ends at a common point.
    RelEnd,
    /// Every history is centered on its median event.
    RelMedian,
    /// Every history is stretched over the full axis.
    Normalized,
}

impl TimeMode {
    pub const ALL: [TimeMode; 5] = [
        TimeMode::Absolute,
        TimeMode::RelStart,
        TimeMode::RelEnd,
        TimeMode::RelMedian,
        TimeMode::Normalized,
    ];

    pub fn token(self) -> &'static str {
        match self {
            TimeMode::Absolute => "absolute",
            TimeMode::RelStart => "relstart",
            TimeMode::RelEnd => "relend",
            TimeMode::RelMedian => "relmedian",
            TimeMode::Normalized => "normtime",
        }
    }
}

impl fmt::Display for TimeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for TimeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "absolute" => TimeMode::Absolute,
            "relstart" => TimeMode::RelStart,
            "relend" => TimeMode::RelEnd,
            "relmedian" => TimeMode::RelMedian,
            "normtime" | "normage" | "normalized" => TimeMode::Normalized,
            _ => {
                return Err(Error::InvalidParam {
                    key: "time".into(),
                    value: s.into(),
                })
            }
        })
    }
}

/// Dataset-wide denominators for the time transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TimeScales {
    pub t_min: i64,
    pub t_max: i64,
    /// Largest artifact age.
    pub max_age_s: i64,
    /// Largest distance between any event and its artifact's median.
    pub max_median_dev_s: i64,
}

impl TimeScales {
    pub fn from_stats<'a>(t_min: i64, t_max: i64, stats: impl IntoIterator<Item = &'a ArtifactStats>) -> Self {
        let mut scales = TimeScales {
            t_min,
            t_max,
            max_age_s: 0,
            max_median_dev_s: 0,
        };
        for s in stats {
            scales.max_age_s = scales.max_age_s.max(s.age_s);
            let dev = (s.median_ts - s.first_ts).max(s.last_ts - s.median_ts);
            scales.max_median_dev_s = scales.max_median_dev_s.max(dev);
        }
        scales
    }

    pub fn from_dataset(dataset: &Dataset) -> Self {
        Self::from_stats(dataset.t_min(), dataset.t_max(), dataset.stats())
    }
}

/// The per-artifact fields the transforms read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub first_ts: i64,
    pub last_ts: i64,
    pub median_ts: i64,
}

impl From<&ArtifactStats> for Span {
    fn from(s: &ArtifactStats) -> Self {
        Span {
            first_ts: s.first_ts,
            last_ts: s.last_ts,
            median_ts: s.median_ts,
        }
    }
}

/// `num / den`, or one half when the denominator vanishes.
fn ratio<T: Scalar>(num: i64, den: i64) -> T {
    if den <= 0 {
        T::half()
    } else {
        T::from_i64(num) / T::from_i64(den)
    }
}

/// Maps `ts` of an artifact with the given span to a vertical position in `[0, 1]`.
pub fn time_transform<T: Scalar>(ts: i64, span: Span, scales: &TimeScales, mode: TimeMode) -> Result<T> {
    if ts < span.first_ts || ts > span.last_ts {
        return Err(Error::contract(format!(
            "timestamp {ts} outside artifact span [{}, {}]",
            span.first_ts, span.last_ts
        )));
    }
    Ok(transform_unchecked(ts, span, scales, mode))
}

pub(crate) fn transform_unchecked<T: Scalar>(ts: i64, span: Span, scales: &TimeScales, mode: TimeMode) -> T {
    let y: T = match mode {
        TimeMode::Absolute => ratio(ts - scales.t_min, scales.t_max - scales.t_min),
        TimeMode::RelStart => ratio(ts - span.first_ts, scales.max_age_s),
        TimeMode::RelEnd => {
            if scales.max_age_s <= 0 {
                T::half()
            } else {
                T::one() + ratio::<T>(ts - span.last_ts, scales.max_age_s)
            }
        }
        TimeMode::RelMedian => {
            let h = scales.max_median_dev_s;
            if h <= 0 {
                T::half()
            } else {
                T::half() + ratio::<T>(ts - span.median_ts, 2 * h)
            }
        }
        TimeMode::Normalized => ratio(ts - span.first_ts, span.last_ts - span.first_ts),
    };
    y.max(T::zero()).min(T::one())
}
