//! Render-ready columnar bundle (`.evb`) and its on-disk framing.
//!
//! ```text
//! "EVOSCAT1" | header length (u32 LE) | header (UTF-8 JSON) | deflate(column payload)
//! ```
//!
//! The header carries counts, time scales, metric descriptors, criterion names,
//! histograms with default colors, column descriptors and a SHA-256 checksum.
//! The checksum covers the canonical header serialization (with an empty
//! checksum field) followed by the compressed payload, so any change to a
//! decoded value is detected.
//!
//! Payload columns: authors, extensions and commit ids are dictionary encoded;
//! artifact and event timestamps are delta encoded as varints; metric columns
//! are a presence bitmap followed by the present `f64` values.

mod codec;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ChangeKind, Dataset, MetricDescriptor};
use crate::preprocess::{
    classify, ranks_of, similarity_order, sort_artifacts, Classification, ColorMode, EventAttrs, HistogramClass,
    SimilarityDomain, SortCriterion, Span, TimeScales, DEFAULT_BINS,
};
use codec::{Reader, Writer};

pub const MAGIC: &[u8; 8] = b"EVOSCAT1";
pub const FORMAT_VERSION: u32 = 1;
pub const FILE_EXTENSION: &str = "evb";

/// A sort criterion with the name it is published under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedCriterion {
    pub name: String,
    pub criterion: SortCriterion,
}

impl NamedCriterion {
    pub fn new(criterion: SortCriterion) -> Self {
        NamedCriterion {
            name: criterion.to_string(),
            criterion,
        }
    }
}

impl fmt::Display for NamedCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.name == self.criterion.to_string() {
            write!(f, "{}", self.criterion)
        } else {
            write!(f, "{}={}", self.name, self.criterion)
        }
    }
}

/// `keys` or `name=keys`.
impl FromStr for NamedCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('=') {
            Some((name, keys)) if !name.trim().is_empty() => Ok(NamedCriterion {
                name: name.trim().to_owned(),
                criterion: keys.parse()?,
            }),
            Some(_) => Err(Error::InvalidCriterion {
                input: s.to_owned(),
                reason: "empty name".into(),
            }),
            None => Ok(NamedCriterion::new(s.parse()?)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BundleOptions {
    pub title: Option<String>,
    pub criteria: Vec<NamedCriterion>,
    pub color_modes: Vec<ColorMode>,
    pub bins: usize,
    pub similarity_domain: SimilarityDomain,
}

impl Default for BundleOptions {
    fn default() -> Self {
        BundleOptions {
            title: None,
            criteria: Vec::new(),
            color_modes: Vec::new(),
            bins: DEFAULT_BINS,
            similarity_domain: SimilarityDomain::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionInfo {
    pub name: String,
    pub keys: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeHistogram {
    pub mode: String,
    pub classes: Vec<HistogramClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub encoding: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadInfo {
    pub compression: String,
    pub compressed_len: u64,
    pub raw_len: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleHeader {
    pub format_version: u32,
    pub dataset_id: String,
    pub title: String,
    pub artifact_count: u64,
    pub event_count: u64,
    pub commit_count: u64,
    pub author_count: u64,
    pub time: TimeScales,
    pub metrics: Vec<MetricDescriptor>,
    pub criteria: Vec<CriterionInfo>,
    pub similarity_fallback: bool,
    pub histograms: Vec<ModeHistogram>,
    pub columns: Vec<ColumnInfo>,
    pub payload: PayloadInfo,
    pub checksum: String,
}

impl BundleHeader {
    pub fn criterion_names(&self) -> impl Iterator<Item = &str> {
        self.criteria.iter().map(|c| c.name.as_str())
    }

    pub fn histogram(&self, mode: &str) -> Option<&[HistogramClass]> {
        self.histograms
            .iter()
            .find(|h| h.mode == mode)
            .map(|h| h.classes.as_slice())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArtifactColumns {
    pub path: Vec<String>,
    pub extension: Vec<String>,
    pub first_ts: Vec<i64>,
    pub last_ts: Vec<i64>,
    pub median_ts: Vec<i64>,
    pub n_events: Vec<u32>,
    pub age_s: Vec<i64>,
    /// Indexed `[metric][artifact]`, metrics in header order.
    pub metric_first: Vec<Vec<Option<f64>>>,
    pub metric_last: Vec<Vec<Option<f64>>>,
    pub metric_delta: Vec<Vec<Option<f64>>>,
}

/// Event columns ordered by `(ts, commit, path)`; the position is the event ordinal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventColumns {
    pub artifact: Vec<u32>,
    pub ts: Vec<i64>,
    pub kind: Vec<ChangeKind>,
    pub author: Vec<u32>,
    pub commit: Vec<u32>,
    /// Indexed `[metric][event]`.
    pub metrics: Vec<Vec<Option<f64>>>,
}

impl EventColumns {
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutBundle {
    pub header: BundleHeader,
    pub artifacts: ArtifactColumns,
    pub events: EventColumns,
    pub authors: Vec<String>,
    pub commits: Vec<String>,
    /// Parallel to `header.criteria`; `p[rank]` = artifact ordinal.
    pub permutations: Vec<Vec<u32>>,
}

/// An event resolved to plain values, as returned by lookups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventDetails {
    pub path: String,
    pub commit: String,
    pub ts: i64,
    pub author: String,
    pub kind: ChangeKind,
    pub metrics: BTreeMap<String, f64>,
}

impl LayoutBundle {
    pub fn id(&self) -> &str {
        &self.header.dataset_id
    }

    pub fn artifact_count(&self) -> usize {
        self.artifacts.path.len()
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn permutation(&self, name: &str) -> Option<&[u32]> {
        self.header
            .criteria
            .iter()
            .position(|c| c.name == name)
            .map(|i| self.permutations[i].as_slice())
    }

    pub fn time_scales(&self) -> &TimeScales {
        &self.header.time
    }

    pub fn span(&self, artifact: usize) -> Span {
        Span {
            first_ts: self.artifacts.first_ts[artifact],
            last_ts: self.artifacts.last_ts[artifact],
            median_ts: self.artifacts.median_ts[artifact],
        }
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.header.metrics.iter().position(|m| m.name == name)
    }

    pub fn event(&self, ordinal: usize) -> Option<EventDetails> {
        let ev = &self.events;
        if ordinal >= ev.len() {
            return None;
        }
        Some(EventDetails {
            path: self.artifacts.path[ev.artifact[ordinal] as usize].clone(),
            commit: self.commits[ev.commit[ordinal] as usize].clone(),
            ts: ev.ts[ordinal],
            author: self.authors[ev.author[ordinal] as usize].clone(),
            kind: ev.kind[ordinal],
            metrics: self
                .header
                .metrics
                .iter()
                .zip(&ev.metrics)
                .filter_map(|(m, col)| col[ordinal].map(|v| (m.name.clone(), v)))
                .collect(),
        })
    }

    /// Color classes of every event under `mode`.
    pub fn classify(&self, mode: &ColorMode) -> Result<Classification> {
        let metric = match mode.metric() {
            Some(m) => Some(self.metric_index(m).ok_or_else(|| Error::UnknownMetric(m.to_owned()))?),
            None => None,
        };
        let ev = &self.events;
        let attrs = (0..ev.len()).map(|i| EventAttrs {
            artifact: ev.artifact[i],
            ts: ev.ts[i],
            kind: ev.kind[i],
            extension: &self.artifacts.extension[ev.artifact[i] as usize],
            author: &self.authors[ev.author[i] as usize],
            metric: metric.and_then(|m| ev.metrics[m][i]),
        });
        classify(mode, metric.map(|m| &self.header.metrics[m]), attrs)
    }
}

fn default_color_modes(dataset: &Dataset) -> Vec<ColorMode> {
    let mut modes = vec![ColorMode::Year, ColorMode::Type, ColorMode::Author];
    for m in dataset.metric_descriptors() {
        modes.push(ColorMode::Metric(m.name.clone()));
        modes.push(ColorMode::MetricVariation(m.name.clone()));
    }
    modes
}

fn column_infos(metrics: &[MetricDescriptor]) -> Vec<ColumnInfo> {
    let col = |name: &str, encoding: &str| ColumnInfo {
        name: name.to_owned(),
        encoding: encoding.to_owned(),
    };
    let mut cols = vec![
        col("authors", "dictionary"),
        col("extensions", "dictionary"),
        col("commits", "dictionary:hex20"),
        col("artifact.path", "utf8"),
        col("artifact.extension", "varint:dict"),
        col("artifact.first_ts", "zigzag-delta"),
        col("artifact.age_s", "varint"),
        col("artifact.median_offset", "varint"),
        col("artifact.n_events", "varint"),
    ];
    for m in metrics {
        cols.push(col(&format!("artifact.{}.first", m.name), "bitmap+f64"));
        cols.push(col(&format!("artifact.{}.last", m.name), "bitmap+f64"));
    }
    cols.extend([
        col("event.ts", "varint-delta"),
        col("event.artifact", "varint"),
        col("event.kind", "u8"),
        col("event.author", "varint:dict"),
        col("event.commit", "varint:dict"),
    ]);
    for m in metrics {
        cols.push(col(&format!("event.{}", m.name), "bitmap+f64"));
    }
    cols.push(col("permutations", "varint"));
    cols
}

/// Computes every permutation and histogram and assembles the in-memory bundle.
pub fn assemble_bundle(dataset: &Dataset, opts: &BundleOptions) -> Result<LayoutBundle> {
    let mut criteria: Vec<NamedCriterion> = vec![NamedCriterion::new(SortCriterion::path())];
    for c in &opts.criteria {
        if let Some(existing) = criteria.iter().find(|e| e.name == c.name) {
            if existing.criterion != c.criterion {
                return Err(Error::InvalidCriterion {
                    input: c.to_string(),
                    reason: format!("name `{}` is already used", c.name),
                });
            }
            continue;
        }
        for m in c.criterion.metrics() {
            if dataset.metric(m).is_none() {
                return Err(Error::UnknownMetric(m.to_owned()));
            }
        }
        criteria.push(c.clone());
    }

    let color_modes = if opts.color_modes.is_empty() {
        default_color_modes(dataset)
    } else {
        let mut modes = opts.color_modes.clone();
        modes.dedup();
        modes
    };

    let permutations = criteria
        .par_iter()
        .map(|c| {
            if c.criterion.is_similarity() {
                let order = similarity_order(dataset, opts.bins, opts.similarity_domain);
                Ok((order.permutation, order.fallback))
            } else {
                sort_artifacts(dataset, &c.criterion).map(|p| (p, false))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let similarity_fallback = permutations.iter().any(|(_, f)| *f);
    let permutations: Vec<Vec<u32>> = permutations.into_iter().map(|(p, _)| p).collect();

    let metrics = dataset.metric_descriptors().to_vec();
    let stats = dataset.stats();
    let artifacts = ArtifactColumns {
        path: dataset.artifacts().iter().map(|a| a.path.clone()).collect(),
        extension: dataset.artifacts().iter().map(|a| a.extension.clone()).collect(),
        first_ts: stats.iter().map(|s| s.first_ts).collect(),
        last_ts: stats.iter().map(|s| s.last_ts).collect(),
        median_ts: stats.iter().map(|s| s.median_ts).collect(),
        n_events: stats.iter().map(|s| s.n_events as u32).collect(),
        age_s: stats.iter().map(|s| s.age_s).collect(),
        metric_first: metrics
            .iter()
            .map(|m| stats.iter().map(|s| s.first_metric.get(&m.name).copied()).collect())
            .collect(),
        metric_last: metrics
            .iter()
            .map(|m| stats.iter().map(|s| s.last_metric.get(&m.name).copied()).collect())
            .collect(),
        metric_delta: metrics
            .iter()
            .map(|m| stats.iter().map(|s| s.delta_metric.get(&m.name).copied()).collect())
            .collect(),
    };

    let ordered = dataset.events_in_time_order();
    let mut authors: Vec<String> = ordered.iter().map(|e| e.author.to_string()).collect();
    authors.sort_unstable();
    authors.dedup();
    let mut commits: Vec<String> = ordered.iter().map(|e| e.commit_id.to_string()).collect();
    commits.sort_unstable();
    commits.dedup();
    let find =
        |dict: &[String], key: &str| dict.binary_search_by(|s| s.as_str().cmp(key)).expect("in dictionary") as u32;
    let events = EventColumns {
        artifact: ordered.iter().map(|e| e.artifact_id).collect(),
        ts: ordered.iter().map(|e| e.timestamp).collect(),
        kind: ordered.iter().map(|e| e.change_kind).collect(),
        author: ordered.iter().map(|e| find(&authors, &e.author)).collect(),
        commit: ordered.iter().map(|e| find(&commits, &e.commit_id)).collect(),
        metrics: metrics
            .iter()
            .map(|m| ordered.iter().map(|e| e.metrics.get(&m.name)).collect())
            .collect(),
    };

    let header = BundleHeader {
        format_version: FORMAT_VERSION,
        dataset_id: dataset.id().to_owned(),
        title: opts.title.clone().unwrap_or_else(|| dataset.id().to_owned()),
        artifact_count: dataset.len() as u64,
        event_count: events.len() as u64,
        commit_count: commits.len() as u64,
        author_count: authors.len() as u64,
        time: TimeScales::from_dataset(dataset),
        columns: column_infos(&metrics),
        metrics,
        criteria: criteria
            .iter()
            .map(|c| CriterionInfo {
                name: c.name.clone(),
                keys: c.criterion.to_string(),
            })
            .collect(),
        similarity_fallback,
        histograms: Vec::new(),
        payload: PayloadInfo {
            compression: "deflate".into(),
            compressed_len: 0,
            raw_len: 0,
        },
        checksum: String::new(),
    };
    let mut bundle = LayoutBundle {
        header,
        artifacts,
        events,
        authors,
        commits,
        permutations,
    };
    bundle.header.histograms = color_modes
        .par_iter()
        .map(|mode| {
            Ok(ModeHistogram {
                mode: mode.to_string(),
                classes: bundle.classify(mode)?.classes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(bundle)
}

/// Preprocesses a dataset into compressed `.evb` bytes.
pub fn build_bundle(dataset: &Dataset, opts: &BundleOptions) -> Result<Vec<u8>> {
    let mut bundle = assemble_bundle(dataset, opts)?;
    encode_bundle(&mut bundle)
}

fn encode_payload(b: &LayoutBundle) -> Vec<u8> {
    let mut w = Writer::default();
    let a = &b.artifacts;
    let e = &b.events;

    let mut extensions: Vec<&str> = a.extension.iter().map(String::as_str).collect();
    extensions.sort_unstable();
    extensions.dedup();

    w.varint(b.authors.len() as u64);
    for s in &b.authors {
        w.str(s);
    }
    w.varint(extensions.len() as u64);
    for s in &extensions {
        w.str(s);
    }
    w.varint(b.commits.len() as u64);
    for c in &b.commits {
        match hex::decode(c) {
            Ok(raw) if raw.len() == 20 && c.bytes().all(|ch| !ch.is_ascii_uppercase()) => {
                w.u8(0);
                w.buf.extend_from_slice(&raw);
            }
            _ => {
                w.u8(1);
                w.str(c);
            }
        }
    }

    let n = a.path.len();
    w.varint(n as u64);
    for p in &a.path {
        w.str(p);
    }
    for x in &a.extension {
        w.varint(extensions.binary_search(&x.as_str()).expect("in dictionary") as u64);
    }
    let mut prev = 0i64;
    for i in 0..n {
        w.zigzag(a.first_ts[i].wrapping_sub(prev));
        prev = a.first_ts[i];
        w.varint(a.age_s[i] as u64);
        w.varint((a.median_ts[i] - a.first_ts[i]) as u64);
        w.varint(u64::from(a.n_events[i]));
    }
    for m in 0..b.header.metrics.len() {
        w.optional_f64s(&a.metric_first[m]);
        w.optional_f64s(&a.metric_last[m]);
    }

    w.varint(e.len() as u64);
    let mut prev = e.ts.first().copied().unwrap_or(0);
    w.zigzag(prev);
    for &t in &e.ts {
        w.varint(t.wrapping_sub(prev) as u64);
        prev = t;
    }
    for &x in &e.artifact {
        w.varint(u64::from(x));
    }
    for &k in &e.kind {
        w.u8(k.to_code());
    }
    for &x in &e.author {
        w.varint(u64::from(x));
    }
    for &x in &e.commit {
        w.varint(u64::from(x));
    }
    for col in &e.metrics {
        w.optional_f64s(col);
    }

    for p in &b.permutations {
        for &x in p {
            w.varint(u64::from(x));
        }
    }
    w.buf
}

fn checksum(header: &BundleHeader, payload: &[u8]) -> Result<String> {
    let mut canonical = header.clone();
    canonical.checksum.clear();
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&canonical)?);
    hasher.update(payload);
    Ok(hex::encode(hasher.finalize()))
}

/// Serializes a bundle, filling in the payload sizes and checksum of its header.
pub fn encode_bundle(bundle: &mut LayoutBundle) -> Result<Vec<u8>> {
    let raw = encode_payload(bundle);
    let mut enc = DeflateEncoder::new(Vec::with_capacity(raw.len() / 3), Compression::default());
    enc.write_all(&raw)?;
    let compressed = enc.finish()?;

    let header = &mut bundle.header;
    header.payload = PayloadInfo {
        compression: "deflate".into(),
        compressed_len: compressed.len() as u64,
        raw_len: raw.len() as u64,
    };
    header.checksum = checksum(header, &compressed)?;
    let header_json = serde_json::to_vec(header)?;
    let header_len = u32::try_from(header_json.len()).map_err(|_| Error::corrupt("header too large"))?;

    let mut out = Vec::with_capacity(12 + header_json.len() + compressed.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header_json);
    out.extend_from_slice(&compressed);
    Ok(out)
}

/// Reads only the framing and header, without verifying or decoding the payload.
pub fn read_header(bytes: &[u8]) -> Result<(BundleHeader, &[u8])> {
    let prefix = &bytes[..bytes.len().min(MAGIC.len())];
    if prefix.len() >= 7 && prefix[..7] == MAGIC[..7] && prefix.len() == 8 && prefix[7] != MAGIC[7] {
        let found = (prefix[7] as char).to_digit(10).unwrap_or(u32::MAX);
        return Err(Error::VersionMismatch {
            found,
            expected: FORMAT_VERSION,
        });
    }
    if prefix != &MAGIC[..prefix.len()] {
        return Err(Error::BadMagic);
    }
    if bytes.len() < 12 {
        return Err(Error::Truncated("framing"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let header_end = 12usize.checked_add(header_len).ok_or(Error::Truncated("header"))?;
    if header_end > bytes.len() {
        return Err(Error::Truncated("header"));
    }
    let value: serde_json::Value =
        serde_json::from_slice(&bytes[12..header_end]).map_err(|e| Error::corrupt(format!("header: {e}")))?;
    let version = value.get("format_version").and_then(serde_json::Value::as_u64);
    if version != Some(u64::from(FORMAT_VERSION)) {
        return Err(Error::VersionMismatch {
            found: version.map_or(u32::MAX, |v| u32::try_from(v).unwrap_or(u32::MAX)),
            expected: FORMAT_VERSION,
        });
    }
    let header: BundleHeader = serde_json::from_value(value).map_err(|e| Error::corrupt(format!("header: {e}")))?;
    let clen = usize::try_from(header.payload.compressed_len).map_err(|_| Error::Truncated("payload"))?;
    let end = header_end.checked_add(clen).ok_or(Error::Truncated("payload"))?;
    if end > bytes.len() {
        return Err(Error::Truncated("payload"));
    }
    if end < bytes.len() {
        return Err(Error::corrupt("trailing bytes after payload"));
    }
    Ok((header, &bytes[header_end..end]))
}

/// Verifies and decodes `.evb` bytes.
pub fn load_bundle(bytes: &[u8]) -> Result<LayoutBundle> {
    let (header, compressed) = read_header(bytes)?;
    if header.payload.compression != "deflate" {
        return Err(Error::corrupt(format!(
            "unknown compression `{}`",
            header.payload.compression
        )));
    }
    if checksum(&header, compressed)? != header.checksum {
        return Err(Error::ChecksumMismatch);
    }
    let raw_len = usize::try_from(header.payload.raw_len).map_err(|_| Error::corrupt("payload size"))?;
    let mut raw = Vec::with_capacity(raw_len.min(1 << 30));
    DeflateDecoder::new(compressed)
        .take(raw_len as u64 + 1)
        .read_to_end(&mut raw)
        .map_err(|e| Error::corrupt(format!("payload: {e}")))?;
    if raw.len() != raw_len {
        return Err(Error::corrupt("payload size"));
    }
    decode_payload(header, &raw)
}

fn decode_payload(header: BundleHeader, raw: &[u8]) -> Result<LayoutBundle> {
    let mut r = Reader::new(raw);
    let n_metrics = header.metrics.len();

    let n_authors = r.len()?;
    let authors = (0..n_authors).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let n_ext = r.len()?;
    let extensions = (0..n_ext).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let n_commits = r.len()?;
    let commits = (0..n_commits)
        .map(|_| match r.u8()? {
            0 => Ok(hex::encode(r.take(20)?)),
            1 => r.string(),
            t => Err(Error::corrupt(format!("commit tag {t}"))),
        })
        .collect::<Result<Vec<_>>>()?;

    let n = r.len()?;
    let path = (0..n).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let extension = (0..n)
        .map(|_| Ok(extensions[r.index(extensions.len())? as usize].clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut a = ArtifactColumns {
        path,
        extension,
        ..Default::default()
    };
    let mut prev = 0i64;
    for _ in 0..n {
        let first = prev.wrapping_add(r.zigzag()?);
        prev = first;
        let age = r.varint()? as i64;
        let median_offset = r.varint()? as i64;
        let count = u32::try_from(r.varint()?).map_err(|_| Error::corrupt("event count"))?;
        if age < 0 || median_offset < 0 || median_offset > age || count == 0 {
            return Err(Error::corrupt("artifact stats"));
        }
        a.first_ts.push(first);
        a.age_s.push(age);
        a.last_ts.push(first + age);
        a.median_ts.push(first + median_offset);
        a.n_events.push(count);
    }
    for _ in 0..n_metrics {
        let first = r.optional_f64s(n)?;
        let last = r.optional_f64s(n)?;
        let delta = first
            .iter()
            .zip(&last)
            .map(|(f, l)| match (f, l) {
                (Some(f), Some(l)) => Some(l - f),
                _ => None,
            })
            .collect();
        a.metric_first.push(first);
        a.metric_last.push(last);
        a.metric_delta.push(delta);
    }

    let m = r.len()?;
    let mut e = EventColumns::default();
    let mut t = r.zigzag()?;
    for _ in 0..m {
        t = t.wrapping_add(r.varint()? as i64);
        e.ts.push(t);
    }
    e.artifact = (0..m).map(|_| r.index(n)).collect::<Result<_>>()?;
    e.kind = (0..m)
        .map(|_| ChangeKind::from_code(r.u8()?).ok_or_else(|| Error::corrupt("change kind")))
        .collect::<Result<_>>()?;
    e.author = (0..m).map(|_| r.index(authors.len())).collect::<Result<_>>()?;
    e.commit = (0..m).map(|_| r.index(commits.len())).collect::<Result<_>>()?;
    e.metrics = (0..n_metrics).map(|_| r.optional_f64s(m)).collect::<Result<_>>()?;

    let permutations = header
        .criteria
        .iter()
        .map(|_| {
            let p = (0..n).map(|_| r.index(n)).collect::<Result<Vec<u32>>>()?;
            ranks_of(&p).ok_or_else(|| Error::corrupt("permutation is not a bijection"))?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    if !r.is_done() {
        return Err(Error::corrupt("unread payload bytes"));
    }

    let mut per_artifact = vec![0u32; n];
    for &x in &e.artifact {
        per_artifact[x as usize] += 1;
    }
    let consistent = per_artifact == a.n_events
        && header.artifact_count == n as u64
        && header.event_count == m as u64
        && header.commit_count == commits.len() as u64
        && header.author_count == authors.len() as u64
        && e.ts.windows(2).all(|w| w[0] <= w[1]);
    if !consistent {
        return Err(Error::corrupt("header counts disagree with columns"));
    }

    Ok(LayoutBundle {
        header,
        artifacts: a,
        events: e,
        authors,
        commits,
        permutations,
    })
}
