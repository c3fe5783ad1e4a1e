//! NDJSON event-log format shared by the miner, third-party crawlers and the preprocessor.
//!
//! One object per line:
//! `{"path":"a.txt","ts":1399530161,"commit":"<40 hex>","author":"Alice","kind":"A","metrics":{"size":12}}`
//! where `kind` is one of `A`, `M`, `D` and `metrics` is optional.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ChangeKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub path: String,
    pub ts: i64,
    pub commit: String,
    pub author: String,
    pub kind: ChangeKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

/// Line of a metrics side file, keyed by `(commit, path)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub commit: String,
    pub path: String,
    pub metrics: BTreeMap<String, f64>,
}

fn read_lines<T, R>(reader: R) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| Error::EventLog { line: i + 1, source })?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<EventRecord>> {
    read_lines(reader)
}

pub fn read_metrics<R: BufRead>(reader: R) -> Result<Vec<MetricRecord>> {
    read_lines(reader)
}

pub fn write_events<'a, W, I>(mut writer: W, events: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a EventRecord>,
{
    for event in events {
        serde_json::to_writer(&mut writer, event)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Attaches side-file metrics to matching events; side-file values win on conflict.
///
/// Returns the number of side records that matched no event.
pub fn merge_metrics(events: &mut [EventRecord], side: Vec<MetricRecord>) -> usize {
    let mut by_key: HashMap<(String, String), BTreeMap<String, f64>> = HashMap::new();
    for rec in side {
        by_key.entry((rec.commit, rec.path)).or_default().extend(rec.metrics);
    }
    for event in events.iter_mut() {
        if let Some(m) = by_key.remove(&(event.commit.clone(), event.path.clone())) {
            event.metrics.extend(m);
        }
    }
    by_key.len()
}
