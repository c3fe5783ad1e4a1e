//! Preprocessing jobs, from a JSON manifest or from command-line flags.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use evoscat::bundle::{build_bundle, BundleOptions, NamedCriterion, FILE_EXTENSION};
use evoscat::eventlog::{merge_metrics, read_events, read_metrics};
use evoscat::model::MetricDescriptor;
use evoscat::preprocess::{
    filter_min_events, validate_events, ColorMode, SimilarityDomain, ValidationReport, ValidationWindow, DEFAULT_BINS,
};
use evoscat::{Dataset, Error};
use serde::Deserialize;

pub const DEFAULT_CRITERIA: &[&str] = &["first", "last", "mid", "age", "count", "ext", "similarity"];

/// ```json
/// {"datasets": [{"id": "wfgh", "events": ["wfgh.ndjson"], "min_events": 2,
///                "criteria": ["first", "last", "ext,last"], "window": "2008-01-01.."}]}
/// ```
/// Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub datasets: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default)]
    pub title: Option<String>,
    pub events: Vec<PathBuf>,
    #[serde(default)]
    pub metrics: Vec<PathBuf>,
    #[serde(default)]
    pub metric_descriptors: Vec<MetricDescriptor>,
    #[serde(default)]
    pub min_events: usize,
    #[serde(default)]
    pub criteria: Vec<String>,
    #[serde(default)]
    pub color_modes: Vec<String>,
    #[serde(default)]
    pub window: Option<String>,
    #[serde(default)]
    pub bins: Option<usize>,
    #[serde(default)]
    pub similarity_domain: Option<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut manifest: Manifest = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut ids = BTreeSet::new();
        for entry in &mut manifest.datasets {
            if !ids.insert(entry.id.clone()) {
                return Err(format!("{}: dataset id `{}` appears twice", path.display(), entry.id));
            }
            for p in entry.events.iter_mut().chain(entry.metrics.iter_mut()) {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(manifest)
    }
}

fn parse_instant(s: &str, end_of_day: bool) -> Result<i64, String> {
    let s = s.trim();
    if let Ok(n) = s.parse::<i64>() {
        return Ok(n);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    let date = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("bad time `{s}`"))?;
    let t = if end_of_day {
        date.and_hms_opt(23, 59, 59)
    } else {
        date.and_hms_opt(0, 0, 0)
    };
    Ok(t.expect("valid time of day").and_utc().timestamp())
}

/// `LO..HI`, each side an epoch second count, `YYYY-MM-DD` or RFC 3339; an
/// empty side means the epoch or now.
pub fn parse_window(s: &str) -> Result<ValidationWindow, String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("window `{s}` is not LO..HI"))?;
    let default = ValidationWindow::until_now();
    let lo = if lo.trim().is_empty() {
        default.lo
    } else {
        parse_instant(lo, false)?
    };
    let hi = if hi.trim().is_empty() {
        default.hi
    } else {
        parse_instant(hi, true)?
    };
    ValidationWindow::new(lo, hi).map_err(|_| format!("window `{s}` ends before it starts"))
}

/// A fully resolved job.
#[derive(Debug, Clone)]
pub struct Job {
    pub id: String,
    pub events: Vec<PathBuf>,
    pub metrics: Vec<PathBuf>,
    pub descriptors: Vec<MetricDescriptor>,
    pub min_events: usize,
    pub window: ValidationWindow,
    pub options: BundleOptions,
}

impl Job {
    pub fn from_entry(e: &ManifestEntry) -> Result<Self, String> {
        Job::build(
            &e.id,
            e.title.clone(),
            e.events.clone(),
            e.metrics.clone(),
            e.metric_descriptors.clone(),
            e.min_events,
            &e.criteria,
            &e.color_modes,
            e.window.as_deref(),
            e.bins,
            e.similarity_domain.as_deref(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn build(
        id: &str,
        title: Option<String>,
        events: Vec<PathBuf>,
        metrics: Vec<PathBuf>,
        descriptors: Vec<MetricDescriptor>,
        min_events: usize,
        criteria: &[String],
        color_modes: &[String],
        window: Option<&str>,
        bins: Option<usize>,
        similarity_domain: Option<&str>,
    ) -> Result<Self, String> {
        let ctx = |e: Error| format!("{id}: {e}");
        if events.is_empty() {
            return Err(format!("{id}: no event log given"));
        }
        let criteria: Vec<NamedCriterion> = if criteria.is_empty() {
            DEFAULT_CRITERIA
                .iter()
                .map(|c| c.parse().expect("built-in criteria parse"))
                .collect()
        } else {
            criteria
                .iter()
                .map(|c| c.parse())
                .collect::<Result<_, _>>()
                .map_err(ctx)?
        };
        let color_modes = color_modes
            .iter()
            .map(|m| m.parse::<ColorMode>())
            .collect::<Result<_, _>>()
            .map_err(ctx)?;
        let window = match window {
            Some(w) => parse_window(w).map_err(|e| format!("{id}: {e}"))?,
            None => ValidationWindow::until_now(),
        };
        let bins = bins.unwrap_or(DEFAULT_BINS);
        if bins == 0 {
            return Err(format!("{id}: bins must be positive"));
        }
        let similarity_domain = match similarity_domain {
            Some(s) => s.parse::<SimilarityDomain>().map_err(ctx)?,
            None => SimilarityDomain::default(),
        };
        Ok(Job {
            id: id.to_owned(),
            events,
            metrics,
            descriptors,
            min_events,
            window,
            options: BundleOptions {
                title,
                criteria,
                color_modes,
                bins,
                similarity_domain,
            },
        })
    }
}

#[derive(Debug)]
pub struct JobOutcome {
    pub id: String,
    pub path: PathBuf,
    pub report: ValidationReport,
    /// Artifacts surviving validation.
    pub validated: usize,
    pub kept: usize,
    pub unmatched_metrics: usize,
    pub bundle_bytes: usize,
}

impl JobOutcome {
    pub fn filtered(&self) -> usize {
        self.validated - self.kept
    }

    pub fn summary(&self) -> String {
        let r = &self.report;
        let mut s = format!(
            "{}: {} artifacts kept, {} filtered; {} of {} events kept ({} before window, {} after window, {} duplicates merged, {} relabelled)",
            self.id,
            self.kept,
            self.filtered(),
            r.kept_events,
            r.input_events,
            r.past_count,
            r.future_count,
            r.duplicate_events,
            r.relabelled_events,
        );
        if !r.dropped_artifacts.is_empty() {
            s.push_str(&format!(
                "; {} artifacts had no event inside the window",
                r.dropped_artifacts.len()
            ));
        }
        if self.unmatched_metrics > 0 {
            s.push_str(&format!("; {} metric records matched no event", self.unmatched_metrics));
        }
        s.push_str(&format!(
            "\n  wrote {} ({} bytes)",
            self.path.display(),
            self.bundle_bytes
        ));
        s
    }
}

fn read_file<T>(path: &Path, read: impl Fn(BufReader<File>) -> evoscat::Result<T>) -> Result<T, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))
}

/// Validates, filters and bundles one dataset into `<out>/<id>.evb`.
pub fn run(job: &Job, out: &Path) -> Result<JobOutcome, String> {
    let mut events = Vec::new();
    for p in &job.events {
        events.extend(read_file(p, read_events)?);
    }
    let mut unmatched_metrics = 0;
    for p in &job.metrics {
        unmatched_metrics += merge_metrics(&mut events, read_file(p, read_metrics)?);
    }
    let input_events = events.len();
    let (dataset, report) = match validate_events(&job.id, events, job.window, job.descriptors.clone()) {
        Ok(r) => r,
        Err(Error::EmptyDataset) => {
            let empty = Dataset::new(job.id.as_str(), vec![], job.descriptors.clone()).map_err(|e| e.to_string())?;
            log::warn!("{}: no event survived validation", job.id);
            let report = ValidationReport {
                input_events,
                ..Default::default()
            };
            (empty, report)
        }
        Err(e) => return Err(format!("{}: {e}", job.id)),
    };
    let kept = filter_min_events(&dataset, job.min_events);
    let bytes = build_bundle(&kept, &job.options).map_err(|e| format!("{}: {e}", job.id))?;
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let path = out.join(format!("{}.{FILE_EXTENSION}", job.id));
    fs::write(&path, &bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(JobOutcome {
        id: job.id.clone(),
        path,
        validated: dataset.len(),
        kept: kept.len(),
        report,
        unmatched_metrics,
        bundle_bytes: bytes.len(),
    })
}
