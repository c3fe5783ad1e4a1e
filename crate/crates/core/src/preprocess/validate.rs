use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eventlog::EventRecord;
use crate::model::{ArtifactRecord, ChangeKind, Dataset, Event, MetricDescriptor, MetricValues};

/// Inclusive range of plausible event timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationWindow {
    pub lo: i64,
    pub hi: i64,
}

impl ValidationWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParam {
                key: "window".into(),
                value: format!("{lo},{hi}"),
            });
        }
        Ok(ValidationWindow { lo, hi })
    }

    /// From the epoch up to the current time.
    pub fn until_now() -> Self {
        ValidationWindow {
            lo: 0,
            hi: chrono::Utc::now().timestamp(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub input_events: usize,
    pub kept_events: usize,
    /// Events older than the window.
    pub past_count: usize,
    /// Events newer than the window.
    pub future_count: usize,
    /// Out-of-window events per artifact path.
    pub excluded_per_artifact: BTreeMap<String, usize>,
    /// Artifacts with no event left inside the window.
    pub dropped_artifacts: Vec<String>,
    /// Repeated `(path, ts, commit)` entries that were merged.
    pub duplicate_events: usize,
    /// Events after a deletion that were not additions, relabelled as re-creations.
    pub relabelled_events: usize,
}

struct Interner(HashMap<String, Arc<str>>);

impl Interner {
    fn get(&mut self, s: String) -> Arc<str> {
        if let Some(v) = self.0.get(&s) {
            return v.clone();
        }
        let v: Arc<str> = Arc::from(s.as_str());
        self.0.insert(s, v.clone());
        v
    }
}

/// Turns raw log records into a validated dataset, dropping out-of-window events.
pub fn validate_events(
    id: &str,
    raw: Vec<EventRecord>,
    window: ValidationWindow,
    descriptors: Vec<MetricDescriptor>,
) -> Result<(Dataset, ValidationReport)> {
    let mut report = ValidationReport {
        input_events: raw.len(),
        ..Default::default()
    };
    let mut strings = Interner(HashMap::new());
    let mut metric_names = Interner(HashMap::new());
    let mut by_path: BTreeMap<String, Vec<Event>> = BTreeMap::new();

    for rec in raw {
        if rec.ts < window.lo || rec.ts > window.hi {
            if rec.ts < window.lo {
                report.past_count += 1;
            } else {
                report.future_count += 1;
            }
            *report.excluded_per_artifact.entry(rec.path.clone()).or_default() += 1;
            by_path.entry(rec.path).or_default();
            continue;
        }
        let metrics = MetricValues::from_pairs(
            rec.metrics
                .into_iter()
                .filter(|(_, v)| v.is_finite())
                .map(|(k, v)| (metric_names.get(k), v)),
        );
        by_path.entry(rec.path).or_default().push(Event {
            artifact_id: 0,
            timestamp: rec.ts,
            commit_id: strings.get(rec.commit),
            author: strings.get(rec.author),
            change_kind: rec.kind,
            metrics,
        });
    }

    let mut artifacts = Vec::with_capacity(by_path.len());
    for (path, events) in by_path {
        if events.is_empty() {
            report.dropped_artifacts.push(path);
            continue;
        }
        let mut record = ArtifactRecord::new(path, events);
        let before = record.events.len();
        record.events.dedup_by(|later, earlier| {
            let same = later.timestamp == earlier.timestamp && later.commit_id == earlier.commit_id;
            if same {
                for (k, v) in later.metrics.iter() {
                    if earlier.metrics.get(k).is_none() {
                        earlier.metrics.insert(Arc::from(k), v);
                    }
                }
            }
            same
        });
        report.duplicate_events += before - record.events.len();

        let mut deleted = false;
        for event in &mut record.events {
            if deleted && event.change_kind != ChangeKind::Added {
                event.change_kind = ChangeKind::Added;
                report.relabelled_events += 1;
            }
            deleted = event.change_kind == ChangeKind::Deleted;
        }
        report.kept_events += record.events.len();
        artifacts.push(record);
    }

    if artifacts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dataset = Dataset::new(id, artifacts, descriptors)?;
    Ok((dataset, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(path: &str, ts: i64, commit: &str, kind: ChangeKind) -> EventRecord {
        EventRecord {
            path: path.into(),
            ts,
            commit: commit.into(),
            author: "a".into(),
            kind,
            metrics: BTreeMap::new(),
        }
    }

    #[test]
    fn future_event_is_excluded() {
        let now = 1_700_000_000;
        let raw = vec![
            rec("a", 100, "c1", ChangeKind::Added),
            rec("a", now + 1_000_000_000, "c2", ChangeKind::Modified),
        ];
        let (d, r) = validate_events("d", raw, ValidationWindow::new(0, now).unwrap(), vec![]).unwrap();
        assert_eq!(r.future_count, 1);
        assert_eq!(r.past_count, 0);
        assert_eq!(r.excluded_per_artifact["a"], 1);
        assert_eq!(d.event_count(), 1);
    }

    #[test]
    fn inside_window_is_identity() {
        let raw = vec![
            rec("b", 20, "c2", ChangeKind::Modified),
            rec("a", 10, "c1", ChangeKind::Added),
            rec("b", 10, "c1", ChangeKind::Added),
        ];
        let (d, r) = validate_events("d", raw, ValidationWindow::new(0, 100).unwrap(), vec![]).unwrap();
        assert_eq!(r.kept_events, 3);
        assert!(r.excluded_per_artifact.is_empty());
        let paths: Vec<_> = d.artifacts().iter().map(|a| a.path.as_str()).collect();
        assert_eq!(paths, ["a", "b"]);
        let b: Vec<i64> = d.artifacts()[1].events.iter().map(|e| e.timestamp).collect();
        assert_eq!(b, [10, 20]);
    }

    #[test]
    fn everything_excluded_is_error() {
        let raw = vec![rec("a", -5, "c", ChangeKind::Added)];
        assert!(matches!(
            validate_events("d", raw, ValidationWindow::new(0, 10).unwrap(), vec![]),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn emptied_artifacts_are_dropped() {
        let raw = vec![
            rec("a", 5, "c", ChangeKind::Added),
            rec("gone", 50, "c", ChangeKind::Added),
        ];
        let (d, r) = validate_events("d", raw, ValidationWindow::new(0, 10).unwrap(), vec![]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(r.dropped_artifacts, ["gone"]);
    }

    #[test]
    fn duplicates_and_resurrections() {
        let raw = vec![
            rec("a", 1, "c1", ChangeKind::Added),
            rec("a", 1, "c1", ChangeKind::Added),
            rec("a", 2, "c2", ChangeKind::Deleted),
            rec("a", 3, "c3", ChangeKind::Modified),
        ];
        let (d, r) = validate_events("d", raw, ValidationWindow::new(0, 10).unwrap(), vec![]).unwrap();
        assert_eq!(r.duplicate_events, 1);
        assert_eq!(r.relabelled_events, 1);
        assert_eq!(d.artifacts()[0].events[2].change_kind, ChangeKind::Added);
    }

    #[test]
    fn inverted_window() {
        assert!(ValidationWindow::new(5, 4).is_err());
    }
}
