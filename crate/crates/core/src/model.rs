//! Domain types shared across the pipeline and elementary per-artifact statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, Datelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Index of an artifact within its dataset.
pub type ArtifactId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
}

impl ChangeKind {
    pub fn letter(self) -> &'static str {
        match self {
            ChangeKind::Added => "A",
            ChangeKind::Modified => "M",
            ChangeKind::Deleted => "D",
        }
    }

    /// Maps a VCS name-status letter. Anything other than A/M/D counts as a modification.
    pub fn from_status(status: &str) -> Self {
        match status.chars().next() {
            Some('A') => ChangeKind::Added,
            Some('D') => ChangeKind::Deleted,
            _ => ChangeKind::Modified,
        }
    }

    pub(crate) fn to_code(self) -> u8 {
        match self {
            ChangeKind::Added => 0,
            ChangeKind::Modified => 1,
            ChangeKind::Deleted => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ChangeKind::Added),
            1 => Some(ChangeKind::Modified),
            2 => Some(ChangeKind::Deleted),
            _ => None,
        }
    }
}

impl Serialize for ChangeKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.letter())
    }
}

impl<'de> Deserialize<'de> for ChangeKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "A" => Ok(ChangeKind::Added),
            "M" => Ok(ChangeKind::Modified),
            "D" => Ok(ChangeKind::Deleted),
            other => Err(serde::de::Error::custom(format!("unknown change kind `{other}`"))),
        }
    }
}

/// 8-bit RGB color, written as `#rrggbb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const WHITE: Rgb = Rgb(0xff, 0xff, 0xff);
    pub const BLACK: Rgb = Rgb(0, 0, 0);

    pub fn from_hex(s: &str) -> Option<Self> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        let digits: Vec<u8> = hex
            .chars()
            .map(|c| c.to_digit(16).map(|d| d as u8))
            .collect::<Option<_>>()?;
        match digits.as_slice() {
            [r, g, b] => Some(Rgb(r * 17, g * 17, b * 17)),
            [r1, r0, g1, g0, b1, b0] => Some(Rgb(r1 * 16 + r0, g1 * 16 + g0, b1 * 16 + b0)),
            _ => None,
        }
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rgb::from_hex(s).ok_or_else(|| Error::InvalidParam {
            key: "color".into(),
            value: s.into(),
        })
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Rgb::from_hex(&s).ok_or_else(|| serde::de::Error::custom(format!("bad color `{s}`")))
    }
}

/// Metric values carried by one event, sorted by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricValues(Vec<(Arc<str>, f64)>);

impl MetricValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<Arc<str>>,
    {
        let mut v: Vec<(Arc<str>, f64)> = pairs.into_iter().map(|(k, x)| (k.into(), x)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v.dedup_by(|later, earlier| later.0 == earlier.0);
        MetricValues(v)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0
            .binary_search_by(|(k, _)| k.as_ref().cmp(name))
            .ok()
            .map(|i| self.0[i].1)
    }

    pub fn insert(&mut self, name: Arc<str>, value: f64) {
        match self.0.binary_search_by(|(k, _)| k.as_ref().cmp(&name)) {
            Ok(i) => self.0[i].1 = value,
            Err(i) => self.0.insert(i, (name, value)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_ref(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// One commit touching one artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub artifact_id: ArtifactId,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub commit_id: Arc<str>,
    pub author: Arc<str>,
    pub change_kind: ChangeKind,
    pub metrics: MetricValues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactRecord {
    pub path: String,
    pub extension: String,
    pub events: Vec<Event>,
}

impl ArtifactRecord {
    /// Builds a record, sorting events by `(timestamp, commit_id)`.
    pub fn new(path: impl Into<String>, mut events: Vec<Event>) -> Self {
        let path = path.into();
        events.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.commit_id.cmp(&b.commit_id))
        });
        ArtifactRecord {
            extension: extension_of(&path),
            path,
            events,
        }
    }
}

/// Lowercase suffix after the final dot of the file name, empty if none.
pub fn extension_of(path: &str) -> String {
    let name = path.rsplit(['/', '\\']).next().unwrap_or(path);
    match name.rfind('.') {
        Some(i) => name[i + 1..].to_lowercase(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactStats {
    pub first_ts: i64,
    pub last_ts: i64,
    /// Lower median: the timestamp at index `(n - 1) / 2`.
    pub median_ts: i64,
    pub n_events: usize,
    pub age_s: i64,
    pub first_metric: BTreeMap<String, f64>,
    pub last_metric: BTreeMap<String, f64>,
    pub delta_metric: BTreeMap<String, f64>,
}

pub fn compute_stats(artifact: &ArtifactRecord) -> Result<ArtifactStats> {
    let events = &artifact.events;
    let (first, last) = match (events.first(), events.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::contract(format!("artifact `{}` has no events", artifact.path))),
    };
    if events.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
        return Err(Error::contract(format!(
            "events of `{}` are not sorted by timestamp",
            artifact.path
        )));
    }
    let n = events.len();
    let median_ts = events[(n - 1) / 2].timestamp;

    let mut first_metric = BTreeMap::new();
    let mut last_metric = BTreeMap::new();
    for event in events {
        for (name, value) in event.metrics.iter() {
            first_metric.entry(name.to_owned()).or_insert(value);
            last_metric.insert(name.to_owned(), value);
        }
    }
    let delta_metric = first_metric
        .iter()
        .filter_map(|(k, f)| last_metric.get(k).map(|l| (k.clone(), l - f)))
        .collect();

    Ok(ArtifactStats {
        first_ts: first.timestamp,
        last_ts: last.timestamp,
        median_ts,
        n_events: n,
        age_s: last.timestamp - first.timestamp,
        first_metric,
        last_metric,
        delta_metric,
    })
}

/// Calendar year (proleptic Gregorian, UTC) of an epoch-second timestamp.
pub fn year_of(timestamp: i64) -> i32 {
    const MIN: i64 = -8_334_601_228_800; // -262143-01-01
    const MAX: i64 = 8_210_266_876_799; // 262142-12-31
    DateTime::from_timestamp(timestamp.clamp(MIN, MAX), 0)
        .map(|dt| dt.year())
        .unwrap_or(if timestamp < 0 { -262_143 } else { 262_142 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Gauge,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorStop {
    pub value: f64,
    pub color: Rgb,
}

/// Describes one per-event metric and its default color classes.
///
/// Class `i` covers `(stops[i-1].value, stops[i].value]`; the first class is
/// unbounded below. Values above the last stop use `above_color` when set,
/// otherwise they fall into the last class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDescriptor {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub kind: MetricKind,
    #[serde(default = "default_stops")]
    pub color_stops: Vec<ColorStop>,
    #[serde(default = "default_above", skip_serializing_if = "Option::is_none")]
    pub above_color: Option<Rgb>,
}

fn default_stops() -> Vec<ColorStop> {
    vec![
        ColorStop {
            value: 0.0,
            color: Rgb(0x00, 0xff, 0x00),
        },
        ColorStop {
            value: 2.0,
            color: Rgb(0x00, 0xff, 0xff),
        },
        ColorStop {
            value: 20.0,
            color: Rgb(0xff, 0x00, 0x00),
        },
    ]
}

fn default_above() -> Option<Rgb> {
    Some(Rgb::BLACK)
}

impl MetricDescriptor {
    /// Descriptor with the default 0 / 2 / 20 / above-20 color classes.
    pub fn with_defaults(name: impl Into<String>) -> Self {
        MetricDescriptor {
            name: name.into(),
            unit: String::new(),
            kind: MetricKind::Gauge,
            color_stops: default_stops(),
            above_color: default_above(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.color_stops.is_empty() {
            return Err(Error::contract(format!("metric `{}` has no color stops", self.name)));
        }
        let increasing = self.color_stops.windows(2).all(|w| w[0].value < w[1].value);
        if !increasing || self.color_stops.iter().any(|s| !s.value.is_finite()) {
            return Err(Error::contract(format!(
                "color stop thresholds of `{}` must be finite and strictly increasing",
                self.name
            )));
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.color_stops.len() + usize::from(self.above_color.is_some())
    }

    /// Class index of a value under this descriptor's stops.
    pub fn class_of(&self, value: f64) -> usize {
        let idx = self.color_stops.partition_point(|s| s.value < value);
        idx.min(self.class_count() - 1)
    }

    pub fn class_label(&self, class: usize) -> String {
        let stops = &self.color_stops;
        if class == 0 {
            format!("<={}", stops[0].value)
        } else if class < stops.len() {
            format!("({},{}]", stops[class - 1].value, stops[class].value)
        } else {
            format!(">{}", stops[stops.len() - 1].value)
        }
    }

    pub fn class_color(&self, class: usize) -> Rgb {
        match self.color_stops.get(class) {
            Some(stop) => stop.color,
            None => self.above_color.unwrap_or(stops_last(&self.color_stops)),
        }
    }
}

fn stops_last(stops: &[ColorStop]) -> Rgb {
    stops.last().map(|s| s.color).unwrap_or(Rgb::BLACK)
}

/// Validated, immutable collection of artifacts and their histories.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id: String,
    artifacts: Vec<ArtifactRecord>,
    stats: Vec<ArtifactStats>,
    metric_descriptors: Vec<MetricDescriptor>,
    t_min: i64,
    t_max: i64,
}

impl Dataset {
    /// Builds a dataset, checking every invariant and deriving per-artifact stats.
    ///
    /// Artifact ids on events are reassigned to match positions. Metrics found on
    /// events but absent from `descriptors` get a default descriptor.
    pub fn new(
        id: impl Into<String>,
        mut artifacts: Vec<ArtifactRecord>,
        descriptors: Vec<MetricDescriptor>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(artifacts.len());
        for (i, artifact) in artifacts.iter_mut().enumerate() {
            if !seen.insert(artifact.path.clone()) {
                return Err(Error::contract(format!("duplicate artifact path `{}`", artifact.path)));
            }
            artifact.extension = extension_of(&artifact.path);
            let strictly_sorted = artifact
                .events
                .windows(2)
                .all(|w| (w[0].timestamp, &w[0].commit_id) < (w[1].timestamp, &w[1].commit_id));
            if !strictly_sorted {
                return Err(Error::contract(format!(
                    "events of `{}` are not strictly sorted by (timestamp, commit)",
                    artifact.path
                )));
            }
            let mut deleted = false;
            for event in &mut artifact.events {
                if deleted && event.change_kind != ChangeKind::Added {
                    return Err(Error::contract(format!(
                        "`{}` changes after deletion without re-creation",
                        artifact.path
                    )));
                }
                deleted = event.change_kind == ChangeKind::Deleted;
                event.artifact_id = i as ArtifactId;
            }
        }
        let stats = artifacts.iter().map(compute_stats).collect::<Result<Vec<_>>>()?;

        let mut metric_descriptors = descriptors;
        let declared: BTreeSet<String> = metric_descriptors.iter().map(|d| d.name.clone()).collect();
        if declared.len() != metric_descriptors.len() {
            return Err(Error::contract("duplicate metric descriptor"));
        }
        let found: BTreeSet<&str> = artifacts
            .iter()
            .flat_map(|a| a.events.iter())
            .flat_map(|e| e.metrics.iter().map(|(k, _)| k))
            .collect();
        for name in found {
            if !declared.contains(name) {
                metric_descriptors.push(MetricDescriptor::with_defaults(name));
            }
        }
        for d in &metric_descriptors {
            d.validate()?;
        }

        let t_min = stats.iter().map(|s| s.first_ts).min().unwrap_or(0);
        let t_max = stats.iter().map(|s| s.last_ts).max().unwrap_or(0);
        Ok(Dataset {
            id: id.into(),
            artifacts,
            stats,
            metric_descriptors,
            t_min,
            t_max,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn artifacts(&self) -> &[ArtifactRecord] {
        &self.artifacts
    }

    pub fn stats(&self) -> &[ArtifactStats] {
        &self.stats
    }

    pub fn metric_descriptors(&self) -> &[MetricDescriptor] {
        &self.metric_descriptors
    }

    pub fn metric(&self, name: &str) -> Option<&MetricDescriptor> {
        self.metric_descriptors.iter().find(|d| d.name == name)
    }

    pub fn t_min(&self) -> i64 {
        self.t_min
    }

    pub fn t_max(&self) -> i64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.artifacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.artifacts.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.stats.iter().map(|s| s.n_events).sum()
    }

    pub fn commit_count(&self) -> usize {
        self.events().map(|e| &e.commit_id).collect::<HashSet<_>>().len()
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.artifacts.iter().flat_map(|a| a.events.iter())
    }

    /// Every event ordered by `(timestamp, commit_id, path)`.
    pub fn events_in_time_order(&self) -> Vec<&Event> {
        let mut all: Vec<&Event> = self.events().collect();
        all.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.commit_id.cmp(&b.commit_id))
                .then_with(|| {
                    self.artifacts[a.artifact_id as usize]
                        .path
                        .cmp(&self.artifacts[b.artifact_id as usize].path)
                })
        });
        all
    }

    /// Keeps the artifacts selected by `keep`, preserving order.
    pub fn retain(&self, mut keep: impl FnMut(&ArtifactRecord, &ArtifactStats) -> bool) -> Result<Dataset> {
        let artifacts = self
            .artifacts
            .iter()
            .zip(&self.stats)
            .filter(|(a, s)| keep(a, s))
            .map(|(a, _)| a.clone())
            .collect();
        Dataset::new(self.id.clone(), artifacts, self.metric_descriptors.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ev(ts: i64, commit: &str) -> Event {
        Event {
            artifact_id: 0,
            timestamp: ts,
            commit_id: commit.into(),
            author: "alice".into(),
            change_kind: ChangeKind::Modified,
            metrics: MetricValues::new(),
        }
    }

    fn artifact(ts: &[i64]) -> ArtifactRecord {
        let events = ts
            .iter()
            .enumerate()
            .map(|(i, &t)| ev(t, &format!("{i:040x}")))
            .collect();
        ArtifactRecord::new("a.txt", events)
    }

    #[test]
    fn single_event_stats() {
        let s = compute_stats(&artifact(&[100])).unwrap();
        assert_eq!(
            (s.first_ts, s.last_ts, s.median_ts, s.n_events, s.age_s),
            (100, 100, 100, 1, 0)
        );
    }

    #[test]
    fn even_count_uses_lower_median() {
        let s = compute_stats(&artifact(&[10, 20, 30, 40])).unwrap();
        assert_eq!(s.median_ts, 20);
        assert_eq!(s.age_s, 30);
        assert_eq!(s.n_events, 4);
    }

    #[test]
    fn metric_delta_is_last_minus_first() {
        let t = 1_600_000_000;
        let mut a = artifact(&[t, t + 86_400]);
        a.events[0].metrics = MetricValues::from_pairs([("size", 5.0)]);
        a.events[1].metrics = MetricValues::from_pairs([("size", 9.0)]);
        let s = compute_stats(&a).unwrap();
        assert_eq!(s.delta_metric["size"], 4.0);
        assert_eq!(s.first_metric["size"], 5.0);
        assert_eq!(s.last_metric["size"], 9.0);
    }

    #[test]
    fn metric_endpoints_skip_events_without_value() {
        let mut a = artifact(&[1, 2, 3]);
        a.events[1].metrics = MetricValues::from_pairs([("m", 7.0)]);
        let s = compute_stats(&a).unwrap();
        assert_eq!(s.first_metric["m"], 7.0);
        assert_eq!(s.last_metric["m"], 7.0);
        assert_eq!(s.delta_metric["m"], 0.0);
    }

    #[test]
    fn empty_artifact_is_contract_violation() {
        let a = ArtifactRecord::new("x", vec![]);
        assert!(matches!(compute_stats(&a), Err(Error::Contract(_))));
    }

    #[test]
    fn years() {
        assert_eq!(year_of(1_399_530_161), 2014);
        assert_eq!(year_of(0), 1970);
        assert_eq!(year_of(653_662_060), 1990);
        assert_eq!(year_of(-1), 1969);
        assert_eq!(year_of(i64::MAX), 262_142);
    }

    #[test]
    fn extensions() {
        assert_eq!(extension_of("src/Main.PY"), "py");
        assert_eq!(extension_of("Makefile"), "");
        assert_eq!(extension_of("a.b/c"), "");
        assert_eq!(extension_of("owner/repo:doc/x.tar.gz"), "gz");
        assert_eq!(extension_of("dir/.gitignore"), "gitignore");
    }

    #[test]
    fn rgb_parsing() {
        assert_eq!(Rgb::from_hex("#000"), Some(Rgb(0, 0, 0)));
        assert_eq!(Rgb::from_hex("FF4A46"), Some(Rgb(0xff, 0x4a, 0x46)));
        assert_eq!(Rgb(0x1f, 0xcb, 0x23).to_string(), "#1fcb23");
        assert_eq!(Rgb::from_hex("#12345"), None);
    }

    #[test]
    fn default_metric_classes() {
        let d = MetricDescriptor::with_defaults("m");
        let classes: Vec<usize> = [-1.0, 0.0, 0.5, 2.0, 2.1, 20.0, 21.0]
            .iter()
            .map(|&v| d.class_of(v))
            .collect();
        assert_eq!(classes, [0, 0, 1, 1, 2, 2, 3]);
        assert_eq!(d.class_label(0), "<=0");
        assert_eq!(d.class_label(1), "(0,2]");
        assert_eq!(d.class_label(3), ">20");
        assert_eq!(d.class_color(3), Rgb::BLACK);
    }

    #[test]
    fn dataset_rejects_duplicate_paths_and_unsorted() {
        let a = artifact(&[1, 2]);
        assert!(Dataset::new("d", vec![a.clone(), a.clone()], vec![]).is_err());
        let mut b = a.clone();
        b.events.swap(0, 1);
        assert!(Dataset::new("d", vec![b], vec![]).is_err());
    }

    #[test]
    fn dataset_bounds_and_auto_descriptors() {
        let mut a = artifact(&[5, 9]);
        a.events[0].metrics = MetricValues::from_pairs([("size", 1.0)]);
        let mut b = artifact(&[3]);
        b.path = "b".into();
        let d = Dataset::new("d", vec![a, b], vec![]).unwrap();
        assert_eq!((d.t_min(), d.t_max()), (3, 9));
        assert_eq!(d.metric_descriptors().len(), 1);
        assert_eq!(d.artifacts()[1].events[0].artifact_id, 1);
        assert_eq!(d.event_count(), 3);
    }
}
