//! Color classes for events and the per-class counts that double as the legend.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{year_of, ChangeKind, Dataset, MetricDescriptor, Rgb};

/// Categorical palette; entry `i` is also the color of year `2014 + i`.
pub const CATEGORICAL: [Rgb; 11] = [
    Rgb(0xFF, 0x4A, 0x46),
    Rgb(0xFF, 0x34, 0xFF),
    Rgb(0xFF, 0xFF, 0x00),
    Rgb(0x00, 0x89, 0x41),
    Rgb(0x19, 0x66, 0xFF),
    Rgb(0x1C, 0xFF, 0xD9),
    Rgb(0xC0, 0x00, 0x69),
    Rgb(0xFF, 0xDB, 0xE5),
    Rgb(0xFF, 0x99, 0x00),
    Rgb(0x81, 0x48, 0xD5),
    Rgb(0xFF, 0x00, 0x66),
];

pub const SHRINK: Rgb = Rgb(0xFF, 0x4A, 0x46);
pub const STABLE: Rgb = Rgb(0x00, 0xAE, 0xFF);
pub const GROW: Rgb = Rgb(0x1F, 0xCB, 0x23);

/// Color of events that do not carry the mapped attribute.
pub const NO_CLASS: Rgb = Rgb(0xBB, 0xBB, 0xBB);

pub fn year_color(year: i32) -> Rgb {
    CATEGORICAL[(i64::from(year) - 2014).rem_euclid(CATEGORICAL.len() as i64) as usize]
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColorMode {
    Year,
    /// File extension.
    Type,
    Author,
    Metric(String),
    /// Sign of the per-event metric change.
    MetricVariation(String),
    Solid(Rgb),
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColorMode::Year => f.write_str("year"),
            ColorMode::Type => f.write_str("type"),
            ColorMode::Author => f.write_str("author"),
            ColorMode::Metric(m) => write!(f, "metric:{m}"),
            ColorMode::MetricVariation(m) => write!(f, "delta:{m}"),
            ColorMode::Solid(c) => write!(f, "{c}"),
        }
    }
}

impl ColorMode {
    /// Parses a color token; bare `metric` / `delta` resolve to `default_metric`.
    pub fn parse_with_default(s: &str, default_metric: Option<&str>) -> Result<Self> {
        let bad = || Error::InvalidColorMode(s.to_owned());
        let metric_name = |name: Option<&str>| -> Result<String> {
            match name {
                Some(n) if !n.is_empty() => Ok(n.to_owned()),
                Some(_) => Err(bad()),
                None => default_metric.map(str::to_owned).ok_or_else(bad),
            }
        };
        let (head, name) = match s.split_once(':') {
            Some((h, n)) => (h, Some(n)),
            None => (s, None),
        };
        Ok(match head {
            "year" if name.is_none() => ColorMode::Year,
            "type" | "ext" if name.is_none() => ColorMode::Type,
            "author" if name.is_none() => ColorMode::Author,
            "metric" => ColorMode::Metric(metric_name(name)?),
            "delta" | "variation" => ColorMode::MetricVariation(metric_name(name)?),
            _ if s.starts_with('#') => ColorMode::Solid(Rgb::from_hex(s).ok_or_else(bad)?),
            _ => return Err(bad()),
        })
    }

    pub fn metric(&self) -> Option<&str> {
        match self {
            ColorMode::Metric(m) | ColorMode::MetricVariation(m) => Some(m),
            _ => None,
        }
    }
}

impl FromStr for ColorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ColorMode::parse_with_default(s, None)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramClass {
    pub label: String,
    pub count: u64,
    pub color: Rgb,
}

/// Attributes of one event relevant to coloring.
#[derive(Debug, Clone, Copy)]
pub struct EventAttrs<'a> {
    pub artifact: u32,
    pub ts: i64,
    pub kind: ChangeKind,
    pub extension: &'a str,
    pub author: &'a str,
    pub metric: Option<f64>,
}

/// Per-event class assignment together with the class table.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub classes: Vec<HistogramClass>,
    /// Class index per event, `None` when the event lacks the attribute.
    pub event_class: Vec<Option<u32>>,
}

impl Classification {
    pub fn color_of(&self, event: usize) -> Rgb {
        self.event_class[event]
            .map(|c| self.classes[c as usize].color)
            .unwrap_or(NO_CLASS)
    }
}

/// Ranks string-keyed classes by descending count, then label.
fn categorical<'a>(keys: impl Iterator<Item = &'a str>, label: impl Fn(&str) -> String) -> Classification {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut names: Vec<&str> = Vec::new();
    let raw: Vec<u32> = keys
        .map(|k| {
            let id = *ids.entry(k).or_insert_with(|| {
                names.push(k);
                counts.push(0);
                (names.len() - 1) as u32
            });
            counts[id as usize] += 1;
            id
        })
        .collect();
    let mut rank: Vec<u32> = (0..names.len() as u32).collect();
    rank.sort_by(|&a, &b| {
        counts[b as usize]
            .cmp(&counts[a as usize])
            .then_with(|| names[a as usize].cmp(names[b as usize]))
    });
    let mut remap = vec![0u32; rank.len()];
    for (r, &id) in rank.iter().enumerate() {
        remap[id as usize] = r as u32;
    }
    let classes = rank
        .iter()
        .enumerate()
        .map(|(r, &id)| HistogramClass {
            label: label(names[id as usize]),
            count: counts[id as usize],
            color: CATEGORICAL[r % CATEGORICAL.len()],
        })
        .collect();
    Classification {
        classes,
        event_class: raw.into_iter().map(|id| Some(remap[id as usize])).collect(),
    }
}

/// Classifies events supplied in chronological order (per artifact at least).
pub fn classify<'a, I>(mode: &ColorMode, descriptor: Option<&MetricDescriptor>, events: I) -> Result<Classification>
where
    I: IntoIterator<Item = EventAttrs<'a>>,
{
    let need_descriptor =
        || descriptor.ok_or_else(|| Error::UnknownMetric(mode.metric().unwrap_or_default().to_owned()));
    Ok(match mode {
        ColorMode::Year => {
            let years: Vec<i32> = events.into_iter().map(|e| year_of(e.ts)).collect();
            let mut counts: BTreeMap<i32, u64> = BTreeMap::new();
            for &y in &years {
                *counts.entry(y).or_default() += 1;
            }
            let index: HashMap<i32, u32> = counts.keys().enumerate().map(|(i, &y)| (y, i as u32)).collect();
            Classification {
                classes: counts
                    .iter()
                    .map(|(&y, &count)| HistogramClass {
                        label: y.to_string(),
                        count,
                        color: year_color(y),
                    })
                    .collect(),
                event_class: years.iter().map(|y| Some(index[y])).collect(),
            }
        }
        ColorMode::Type => categorical(events.into_iter().map(|e| e.extension), |k| {
            if k.is_empty() {
                "(none)".to_owned()
            } else {
                k.to_owned()
            }
        }),
        ColorMode::Author => categorical(events.into_iter().map(|e| e.author), str::to_owned),
        ColorMode::Metric(_) => {
            let d = need_descriptor()?;
            let mut classes: Vec<HistogramClass> = (0..d.class_count())
                .map(|c| HistogramClass {
                    label: d.class_label(c),
                    count: 0,
                    color: d.class_color(c),
                })
                .collect();
            let event_class = events
                .into_iter()
                .map(|e| {
                    e.metric.map(|v| {
                        let c = d.class_of(v);
                        classes[c].count += 1;
                        c as u32
                    })
                })
                .collect();
            Classification { classes, event_class }
        }
        ColorMode::MetricVariation(_) => {
            need_descriptor()?;
            let mut classes = vec![
                HistogramClass {
                    label: "negative".into(),
                    count: 0,
                    color: SHRINK,
                },
                HistogramClass {
                    label: "zero".into(),
                    count: 0,
                    color: STABLE,
                },
                HistogramClass {
                    label: "positive".into(),
                    count: 0,
                    color: GROW,
                },
            ];
            let mut previous: HashMap<u32, f64> = HashMap::new();
            let event_class = events
                .into_iter()
                .map(|e| {
                    let class = if e.kind == ChangeKind::Deleted {
                        Some(0)
                    } else {
                        e.metric.map(|v| {
                            let prev = previous.get(&e.artifact).copied().unwrap_or(0.0);
                            match (v - prev).partial_cmp(&0.0) {
                                Some(std::cmp::Ordering::Less) => 0,
                                Some(std::cmp::Ordering::Equal) => 1,
                                _ => 2,
                            }
                        })
                    };
                    if let Some(v) = e.metric {
                        previous.insert(e.artifact, v);
                    }
                    if let Some(c) = class {
                        classes[c].count += 1;
                    }
                    class.map(|c| c as u32)
                })
                .collect();
            Classification { classes, event_class }
        }
        ColorMode::Solid(color) => {
            let event_class: Vec<Option<u32>> = events.into_iter().map(|_| Some(0)).collect();
            Classification {
                classes: vec![HistogramClass {
                    label: "all".into(),
                    count: event_class.len() as u64,
                    color: *color,
                }],
                event_class,
            }
        }
    })
}

/// Class table and per-class event counts of a dataset under a color mode.
pub fn compute_histogram(dataset: &Dataset, mode: &ColorMode) -> Result<Vec<HistogramClass>> {
    let metric = mode.metric();
    let descriptor = match metric {
        Some(m) => Some(dataset.metric(m).ok_or_else(|| Error::UnknownMetric(m.to_owned()))?),
        None => None,
    };
    let artifacts = dataset.artifacts();
    let events = dataset.events_in_time_order().into_iter().map(|e| {
        let a = &artifacts[e.artifact_id as usize];
        EventAttrs {
            artifact: e.artifact_id,
            ts: e.timestamp,
            kind: e.change_kind,
            extension: &a.extension,
            author: &e.author,
            metric: metric.and_then(|m| e.metrics.get(m)),
        }
    });
    Ok(classify(mode, descriptor, events)?.classes)
}
