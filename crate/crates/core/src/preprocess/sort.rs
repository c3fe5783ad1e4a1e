//! Artifact-axis orderings.
//!
//! A criterion is written as comma-separated keys, each optionally prefixed by
//! `-` for descending order: `ext,last`, `-count`, `size_delta,size_first`.
//! Built-in keys are `count`, `first`, `last`, `mid`, `age`, `path`, `ext` and
//! `similarity`; metric keys are `<metric>_first`, `<metric>_last` and
//! `<metric>_delta`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Dataset;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SortField {
    NumEvents,
    FirstTs,
    LastTs,
    MedianTs,
    Age,
    Similarity,
    MetricFirst(String),
    MetricLast(String),
    MetricDelta(String),
    Path,
    Extension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortKey {
    pub field: SortField,
    pub direction: Direction,
}

impl SortKey {
    pub fn asc(field: SortField) -> Self {
        SortKey {
            field,
            direction: Direction::Asc,
        }
    }

    pub fn desc(field: SortField) -> Self {
        SortKey {
            field,
            direction: Direction::Desc,
        }
    }
}

impl fmt::Display for SortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.direction == Direction::Desc {
            f.write_str("-")?;
        }
        match &self.field {
            SortField::NumEvents => f.write_str("count"),
            SortField::FirstTs => f.write_str("first"),
            SortField::LastTs => f.write_str("last"),
            SortField::MedianTs => f.write_str("mid"),
            SortField::Age => f.write_str("age"),
            SortField::Similarity => f.write_str("similarity"),
            SortField::Path => f.write_str("path"),
            SortField::Extension => f.write_str("ext"),
            SortField::MetricFirst(m) => write!(f, "{m}_first"),
            SortField::MetricLast(m) => write!(f, "{m}_last"),
            SortField::MetricDelta(m) => write!(f, "{m}_delta"),
        }
    }
}

impl FromStr for SortKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidCriterion {
            input: s.to_owned(),
            reason: reason.to_owned(),
        };
        let (direction, name) = match s.strip_prefix('-') {
            Some(rest) => (Direction::Desc, rest),
            None => (Direction::Asc, s.strip_prefix('+').unwrap_or(s)),
        };
        let field = match name {
            "count" | "events" => SortField::NumEvents,
            "first" | "start" => SortField::FirstTs,
            "last" | "end" => SortField::LastTs,
            "mid" | "median" => SortField::MedianTs,
            "age" => SortField::Age,
            "similarity" | "sim" => SortField::Similarity,
            "path" => SortField::Path,
            "ext" | "extension" => SortField::Extension,
            _ => {
                let metric = |suffix: &str| name.strip_suffix(suffix).filter(|m| !m.is_empty()).map(str::to_owned);
                if let Some(m) = metric("_first") {
                    SortField::MetricFirst(m)
                } else if let Some(m) = metric("_last") {
                    SortField::MetricLast(m)
                } else if let Some(m) = metric("_delta") {
                    SortField::MetricDelta(m)
                } else {
                    return Err(invalid("unknown sort key"));
                }
            }
        };
        Ok(SortKey { field, direction })
    }
}

/// Non-empty, lexicographically applied list of keys. Path ascending always
/// breaks remaining ties.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortCriterion {
    keys: Vec<SortKey>,
}

impl SortCriterion {
    pub fn new(keys: Vec<SortKey>) -> Result<Self> {
        let c = SortCriterion { keys };
        if c.keys.is_empty() {
            return Err(Error::InvalidCriterion {
                input: String::new(),
                reason: "no keys".into(),
            });
        }
        if c.keys.len() > 1 && c.keys.iter().any(|k| k.field == SortField::Similarity) {
            return Err(Error::InvalidCriterion {
                input: c.to_string(),
                reason: "similarity must be the only key".into(),
            });
        }
        Ok(c)
    }

    pub fn single(key: SortKey) -> Self {
        SortCriterion { keys: vec![key] }
    }

    pub fn path() -> Self {
        Self::single(SortKey::asc(SortField::Path))
    }

    pub fn keys(&self) -> &[SortKey] {
        &self.keys
    }

    pub fn is_similarity(&self) -> bool {
        matches!(self.keys.as_slice(), [k] if k.field == SortField::Similarity)
    }

    /// Metric names referenced by the keys.
    pub fn metrics(&self) -> impl Iterator<Item = &str> {
        self.keys.iter().filter_map(|k| match &k.field {
            SortField::MetricFirst(m) | SortField::MetricLast(m) | SortField::MetricDelta(m) => Some(m.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for SortCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.keys.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

impl FromStr for SortCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let keys = s
            .split(',')
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<SortKey>>>()?;
        SortCriterion::new(keys).map_err(|e| match e {
            Error::InvalidCriterion { reason, .. } => Error::InvalidCriterion {
                input: s.to_owned(),
                reason,
            },
            other => other,
        })
    }
}

enum Column<'a> {
    Int(Vec<i64>),
    Str(Vec<&'a str>),
    /// Missing values sort after every present value in either direction.
    Metric(Vec<Option<f64>>),
}

impl Column<'_> {
    fn compare(&self, a: usize, b: usize, dir: Direction) -> Ordering {
        let directed = |o: Ordering| if dir == Direction::Desc { o.reverse() } else { o };
        match self {
            Column::Int(v) => directed(v[a].cmp(&v[b])),
            Column::Str(v) => directed(v[a].cmp(v[b])),
            Column::Metric(v) => match (v[a], v[b]) {
                (Some(x), Some(y)) => directed(x.total_cmp(&y)),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            },
        }
    }
}

fn column<'a>(dataset: &'a Dataset, field: &SortField) -> Result<Column<'a>> {
    let stats = dataset.stats();
    let metric = |name: &str, pick: fn(&crate::model::ArtifactStats, &str) -> Option<f64>| -> Result<Column<'a>> {
        if dataset.metric(name).is_none() {
            return Err(Error::UnknownMetric(name.to_owned()));
        }
        Ok(Column::Metric(stats.iter().map(|s| pick(s, name)).collect()))
    };
    Ok(match field {
        SortField::NumEvents => Column::Int(stats.iter().map(|s| s.n_events as i64).collect()),
        SortField::FirstTs => Column::Int(stats.iter().map(|s| s.first_ts).collect()),
        SortField::LastTs => Column::Int(stats.iter().map(|s| s.last_ts).collect()),
        SortField::MedianTs => Column::Int(stats.iter().map(|s| s.median_ts).collect()),
        SortField::Age => Column::Int(stats.iter().map(|s| s.age_s).collect()),
        SortField::Path => Column::Str(dataset.artifacts().iter().map(|a| a.path.as_str()).collect()),
        SortField::Extension => Column::Str(dataset.artifacts().iter().map(|a| a.extension.as_str()).collect()),
        SortField::MetricFirst(m) => metric(m, |s, m| s.first_metric.get(m).copied())?,
        SortField::MetricLast(m) => metric(m, |s, m| s.last_metric.get(m).copied())?,
        SortField::MetricDelta(m) => metric(m, |s, m| s.delta_metric.get(m).copied())?,
        SortField::Similarity => {
            return Err(Error::InvalidCriterion {
                input: "similarity".into(),
                reason: "similarity orderings come from similarity_order".into(),
            })
        }
    })
}

/// Returns `p` with `p[rank]` = artifact ordinal.
pub fn sort_artifacts(dataset: &Dataset, criterion: &SortCriterion) -> Result<Vec<u32>> {
    let columns = criterion
        .keys()
        .iter()
        .map(|k| Ok((column(dataset, &k.field)?, k.direction)))
        .collect::<Result<Vec<_>>>()?;
    let paths = Column::Str(dataset.artifacts().iter().map(|a| a.path.as_str()).collect());

    let mut order: Vec<u32> = (0..dataset.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (a, b) = (a as usize, b as usize);
        columns
            .iter()
            .map(|(c, dir)| c.compare(a, b, *dir))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| paths.compare(a, b, Direction::Asc))
    });
    Ok(order)
}

/// Inverse of a permutation: `rank[artifact]`. Fails unless `perm` is a bijection.
pub fn ranks_of(perm: &[u32]) -> Option<Vec<u32>> {
    let mut ranks = vec![u32::MAX; perm.len()];
    for (rank, &a) in perm.iter().enumerate() {
        let slot = ranks.get_mut(a as usize)?;
        if *slot != u32::MAX {
            return None;
        }
        *slot = rank as u32;
    }
    Some(ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArtifactRecord, MetricValues};
    use crate::synth;

    fn paths(d: &Dataset, perm: &[u32]) -> Vec<String> {
        perm.iter().map(|&i| d.artifacts()[i as usize].path.clone()).collect()
    }

    #[test]
    fn by_event_count() {
        let d = synth::from_timestamps("d", &[("a", vec![1, 2, 3]), ("b", vec![1]), ("c", vec![1, 2])]);
        let p = sort_artifacts(&d, &"count".parse().unwrap()).unwrap();
        assert_eq!(paths(&d, &p), ["b", "c", "a"]);
        let p = sort_artifacts(&d, &"-count".parse().unwrap()).unwrap();
        assert_eq!(paths(&d, &p), ["a", "c", "b"]);
    }

    #[test]
    fn extension_then_last() {
        let d = synth::from_timestamps("d", &[("x.py", vec![1, 5]), ("y.c", vec![9]), ("z.py", vec![2])]);
        let p = sort_artifacts(&d, &"ext,last".parse().unwrap()).unwrap();
        assert_eq!(paths(&d, &p), ["y.c", "z.py", "x.py"]);
    }

    fn with_metric(values: &[(&str, Option<(f64, f64)>)]) -> Dataset {
        let base = synth::from_timestamps("d", &values.iter().map(|(p, _)| (*p, vec![10, 20])).collect::<Vec<_>>());
        let artifacts = base
            .artifacts()
            .iter()
            .zip(values)
            .map(|(a, (_, v))| {
                let mut a: ArtifactRecord = a.clone();
                if let Some((first, last)) = v {
                    a.events[0].metrics = MetricValues::from_pairs([("m", *first)]);
                    a.events[1].metrics = MetricValues::from_pairs([("m", *last)]);
                }
                a
            })
            .collect();
        Dataset::new("d", artifacts, vec![]).unwrap()
    }

    #[test]
    fn metric_variation_bands() {
        let d = with_metric(&[
            ("grow", Some((1.0, 3.0))),
            ("same", Some((4.0, 4.0))),
            ("fix", Some((5.0, 2.0))),
        ]);
        let p = sort_artifacts(&d, &"m_delta".parse().unwrap()).unwrap();
        assert_eq!(paths(&d, &p), ["fix", "same", "grow"]);
    }

    #[test]
    fn missing_metric_sorts_last_both_ways() {
        let d = with_metric(&[("a", None), ("b", Some((1.0, 1.0))), ("c", Some((2.0, 2.0)))]);
        let asc = sort_artifacts(&d, &"m_last".parse().unwrap()).unwrap();
        assert_eq!(paths(&d, &asc), ["b", "c", "a"]);
        let desc = sort_artifacts(&d, &"-m_last".parse().unwrap()).unwrap();
        assert_eq!(paths(&d, &desc), ["c", "b", "a"]);
    }

    #[test]
    fn unknown_metric_is_named() {
        let d = synth::from_timestamps("d", &[("a", vec![1])]);
        match sort_artifacts(&d, &"nope_first".parse().unwrap()) {
            Err(Error::UnknownMetric(m)) => assert_eq!(m, "nope"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn criterion_syntax() {
        let c: SortCriterion = "ext, -last".parse().unwrap();
        assert_eq!(c.to_string(), "ext,-last");
        assert_eq!("median".parse::<SortCriterion>().unwrap().to_string(), "mid");
        assert!("similarity,path".parse::<SortCriterion>().is_err());
        assert!("".parse::<SortCriterion>().is_err());
        assert!("bogus".parse::<SortCriterion>().is_err());
        assert!("_first".parse::<SortCriterion>().is_err());
        assert!("similarity".parse::<SortCriterion>().unwrap().is_similarity());
    }

    #[test]
    fn ranks_detect_non_bijections() {
        assert_eq!(ranks_of(&[2, 0, 1]), Some(vec![1, 2, 0]));
        assert_eq!(ranks_of(&[0, 0]), None);
        assert_eq!(ranks_of(&[0, 5]), None);
    }
}
