//! Deterministic synthetic event logs and datasets for tests and benchmarks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eventlog::EventRecord;
use crate::model::{ArtifactRecord, ChangeKind, Dataset, Event, MetricValues};

const EXTENSIONS: &[&str] = &["py", "c", "h", "rs", "md", "yml", "json", ""];
const AUTHORS: &[&str] = &["alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi"];

/// 2014-05-08T06:22:41Z
pub const BASE_TS: i64 = 1_399_530_161;

pub fn commit_hex(n: u64) -> String {
    // splitmix64 stretched to 160 bits
    let mut x = n.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut out = String::with_capacity(40);
    for _ in 0..3 {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        out.push_str(&format!("{z:016x}"));
    }
    out.truncate(40);
    out
}

fn event(ts: i64, commit: String, author: &str, kind: ChangeKind) -> Event {
    Event {
        artifact_id: 0,
        timestamp: ts,
        commit_id: commit.into(),
        author: author.into(),
        change_kind: kind,
        metrics: MetricValues::new(),
    }
}

/// One artifact per entry of `sizes`, each with that many daily events.
pub fn sized_histories(sizes: &[usize]) -> Dataset {
    let artifacts = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let events = (0..n)
                .map(|j| {
                    let kind = if j == 0 {
                        ChangeKind::Added
                    } else {
                        ChangeKind::Modified
                    };
                    event(
                        BASE_TS + (i as i64) * 3_600 + (j as i64) * 86_400,
                        commit_hex((i * 1000 + j) as u64),
                        AUTHORS[j % AUTHORS.len()],
                        kind,
                    )
                })
                .collect();
            ArtifactRecord::new(format!("file{i:03}.txt"), events)
        })
        .collect();
    Dataset::new("sizes", artifacts, vec![]).expect("fixture is valid")
}

/// Builds a dataset from `(path, timestamps)` pairs.
pub fn from_timestamps(id: &str, histories: &[(&str, Vec<i64>)]) -> Dataset {
    let mut counter = 0u64;
    let artifacts = histories
        .iter()
        .map(|(path, ts)| {
            let events = ts
                .iter()
                .enumerate()
                .map(|(j, &t)| {
                    counter += 1;
                    let kind = if j == 0 {
                        ChangeKind::Added
                    } else {
                        ChangeKind::Modified
                    };
                    event(t, commit_hex(counter), AUTHORS[j % AUTHORS.len()], kind)
                })
                .collect();
            ArtifactRecord::new(*path, events)
        })
        .collect();
    Dataset::new(id, artifacts, vec![]).expect("fixture is valid")
}

#[derive(Debug, Clone)]
pub struct RandomDatasetParams {
    pub artifacts: usize,
    pub max_events: usize,
    pub time_span_s: i64,
    /// Probability that an event carries the metric `m`.
    pub metric_rate: f64,
}

impl Default for RandomDatasetParams {
    fn default() -> Self {
        RandomDatasetParams {
            artifacts: 50,
            max_events: 12,
            time_span_s: 5 * 365 * 86_400,
            metric_rate: 0.7,
        }
    }
}

/// Random dataset with coarse timestamps so ties between artifacts are common.
pub fn random_dataset(seed: u64, params: &RandomDatasetParams) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counter = seed << 32;
    let mut artifacts = Vec::with_capacity(params.artifacts);
    for i in 0..params.artifacts {
        let n = rng.gen_range(1..=params.max_events.max(1));
        let ext = EXTENSIONS.choose(&mut rng).unwrap();
        let dir = rng.gen_range(0..4);
        let path = if ext.is_empty() {
            format!("d{dir}/f{i:04}")
        } else {
            format!("d{dir}/f{i:04}.{ext}")
        };
        let step = (params.time_span_s / 64).max(1);
        let mut ts: Vec<i64> = (0..n).map(|_| BASE_TS + rng.gen_range(0..64) * step).collect();
        ts.sort_unstable();
        let mut value: f64 = rng.gen_range(0..30) as f64;
        let mut stamps: Vec<(i64, String)> = ts
            .into_iter()
            .map(|t| {
                counter += 1;
                (t, commit_hex(counter))
            })
            .collect();
        // kinds follow the final (ts, commit) order
        stamps.sort();
        let events = stamps
            .into_iter()
            .enumerate()
            .map(|(j, (t, commit))| {
                let kind = match j {
                    0 => ChangeKind::Added,
                    _ if j + 1 == n && rng.gen_bool(0.2) => ChangeKind::Deleted,
                    _ => ChangeKind::Modified,
                };
                let mut e = event(t, commit, AUTHORS.choose(&mut rng).unwrap(), kind);
                if rng.gen_bool(params.metric_rate) {
                    value = (value + rng.gen_range(-5..=5) as f64).max(0.0);
                    e.metrics = MetricValues::from_pairs([("m", value)]);
                }
                e
            })
            .collect();
        artifacts.push(ArtifactRecord::new(path, events));
    }
    Dataset::new(format!("random{seed}"), artifacts, vec![]).expect("generator output is valid")
}

/// Event log in the NDJSON record form, shaped like a large multi-repository
/// dataset: `n_events` events over `n_artifacts` artifacts with a `size` metric.
pub fn event_log(seed: u64, n_events: usize, n_artifacts: usize) -> Vec<EventRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 3_865 * 86_400i64;
    let mut out = Vec::with_capacity(n_events);
    let n_artifacts = n_artifacts.max(1);
    let mut remaining = n_events;
    let mut commit_no = 0u64;
    for i in 0..n_artifacts {
        let left = n_artifacts - i;
        let n = if left == 1 {
            remaining
        } else {
            let mean = remaining / left;
            rng.gen_range(1..=(2 * mean).max(1))
                .min(remaining.saturating_sub(left - 1))
                .max(1)
        };
        if n == 0 || remaining == 0 {
            break;
        }
        remaining -= n;
        let repo = i / 3;
        let ext = ["yaml", "json", "yml"][i % 3];
        let path = format!("owner{}/repo{}:api/openapi-{}.{ext}", repo % 997, repo, i % 7);
        let start = BASE_TS + rng.gen_range(0..span);
        let life = rng.gen_range(0..=(BASE_TS + span - start));
        let mut ts: Vec<i64> = (0..n).map(|_| start + rng.gen_range(0..=life)).collect();
        ts.sort_unstable();
        ts[0] = start;
        let mut size = rng.gen_range(50..5_000) as f64;
        for (j, t) in ts.into_iter().enumerate() {
            commit_no += 1;
            let kind = match j {
                0 => ChangeKind::Added,
                _ if j + 1 == n && rng.gen_bool(0.1) => ChangeKind::Deleted,
                _ => ChangeKind::Modified,
            };
            size = (size + rng.gen_range(-40..60) as f64).max(0.0);
            let mut metrics = BTreeMap::new();
            metrics.insert("size".to_owned(), size);
            out.push(EventRecord {
                path: path.clone(),
                ts: t,
                commit: commit_hex(commit_no),
                author: format!("dev{}", rng.gen_range(0..5_000)),
                kind,
                metrics,
            });
        }
    }
    out
}
