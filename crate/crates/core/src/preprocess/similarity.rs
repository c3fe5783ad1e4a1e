//! Ordering that places artifacts with similar event-time distributions side by side.
//!
//! Each artifact is profiled as a `B`-bin histogram of its event positions on a
//! chosen time axis. Profiles are compared by L1 distance between the
//! frequency-normalized histograms, evaluated exactly in integer arithmetic.
//! The order is a greedy nearest-neighbour chain starting at the earliest
//! artifact. Artifacts with identical timestamp sequences are kept together as
//! one run, ordered by path.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::sort::{sort_artifacts, SortCriterion, SortField, SortKey};
use super::time::{transform_unchecked, Span, TimeMode, TimeScales};
use crate::error::{Error, Result};
use crate::model::Dataset;

pub const DEFAULT_BINS: usize = 64;

/// Above this many artifacts the median-time order is used instead.
pub const MAX_SIMILARITY_ARTIFACTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityDomain {
    Absolute,
    RelStart,
    #[default]
    Normalized,
}

impl SimilarityDomain {
    fn time_mode(self) -> TimeMode {
        match self {
            SimilarityDomain::Absolute => TimeMode::Absolute,
            SimilarityDomain::RelStart => TimeMode::RelStart,
            SimilarityDomain::Normalized => TimeMode::Normalized,
        }
    }
}

impl fmt::Display for SimilarityDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityDomain::Absolute => "absolute",
            SimilarityDomain::RelStart => "relstart",
            SimilarityDomain::Normalized => "normalized",
        })
    }
}

impl FromStr for SimilarityDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(SimilarityDomain::Absolute),
            "relstart" => Ok(SimilarityDomain::RelStart),
            "normalized" | "normtime" => Ok(SimilarityDomain::Normalized),
            _ => Err(Error::InvalidParam {
                key: "similarity-domain".into(),
                value: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub counts: Vec<u32>,
    pub total: u32,
}

/// L1 distance between two normalized profiles as an exact fraction.
#[derive(Debug, Clone, Copy)]
pub struct Distance {
    num: u128,
    den: u128,
}

impl Distance {
    pub fn between(a: &Profile, b: &Profile) -> Self {
        let (na, nb) = (u128::from(a.total), u128::from(b.total));
        let num = a
            .counts
            .iter()
            .zip(&b.counts)
            .map(|(&x, &y)| (u128::from(x) * nb).abs_diff(u128::from(y) * na))
            .sum();
        Distance { num, den: na * nb }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }
}

impl PartialEq for Distance {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Distance {}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Distance {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

pub fn profiles(dataset: &Dataset, bins: usize, domain: SimilarityDomain) -> Vec<Profile> {
    let bins = bins.max(1);
    let scales = TimeScales::from_dataset(dataset);
    let mode = domain.time_mode();
    dataset
        .artifacts()
        .iter()
        .zip(dataset.stats())
        .map(|(a, s)| {
            let span = Span::from(s);
            let mut counts = vec![0u32; bins];
            for e in &a.events {
                let y: f64 = transform_unchecked(e.timestamp, span, &scales, mode);
                let bin = ((y * bins as f64) as usize).min(bins - 1);
                counts[bin] += 1;
            }
            Profile {
                counts,
                total: a.events.len() as u32,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityOrder {
    pub permutation: Vec<u32>,
    /// Set when the artifact count exceeded the limit and the median-time
    /// order was returned instead.
    pub fallback: bool,
}

pub fn similarity_order(dataset: &Dataset, bins: usize, domain: SimilarityDomain) -> SimilarityOrder {
    if dataset.len() > MAX_SIMILARITY_ARTIFACTS {
        let perm = sort_artifacts(dataset, &SortCriterion::single(SortKey::asc(SortField::MedianTs)))
            .expect("median sort needs no metric");
        return SimilarityOrder {
            permutation: perm,
            fallback: true,
        };
    }
    SimilarityOrder {
        permutation: greedy_chain(dataset, &profiles(dataset, bins, domain)),
        fallback: false,
    }
}

struct Group {
    /// Members in path order.
    members: Vec<u32>,
    /// Path rank of the first member.
    key: u32,
}

fn greedy_chain(dataset: &Dataset, profiles: &[Profile]) -> Vec<u32> {
    let n = dataset.len();
    if n == 0 {
        return Vec::new();
    }
    let by_path = sort_artifacts(dataset, &SortCriterion::path()).expect("path sort needs no metric");

    let mut group_of: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for (rank, &a) in by_path.iter().enumerate() {
        let ts: Vec<i64> = dataset.artifacts()[a as usize]
            .events
            .iter()
            .map(|e| e.timestamp)
            .collect();
        let g = *group_of.entry(ts).or_insert_with(|| {
            groups.push(Group {
                members: Vec::new(),
                key: rank as u32,
            });
            groups.len() - 1
        });
        groups[g].members.push(a);
    }

    let stats = dataset.stats();
    let seed = (0..n as u32)
        .min_by(|&a, &b| {
            let (a, b) = (a as usize, b as usize);
            stats[a]
                .first_ts
                .cmp(&stats[b].first_ts)
                .then_with(|| dataset.artifacts()[a].path.cmp(&dataset.artifacts()[b].path))
        })
        .expect("non-empty");
    let seed_group = groups
        .iter()
        .position(|g| g.members.contains(&seed))
        .expect("every artifact has a group");

    let mut order = Vec::with_capacity(n);
    order.push(seed);
    order.extend(groups[seed_group].members.iter().copied().filter(|&a| a != seed));

    let mut remaining: Vec<usize> = (0..groups.len()).filter(|&g| g != seed_group).collect();
    let mut current = &profiles[groups[seed_group].members[0] as usize];
    while !remaining.is_empty() {
        let pick = remaining
            .par_iter()
            .enumerate()
            .map(|(slot, &g)| {
                let d = Distance::between(current, &profiles[groups[g].members[0] as usize]);
                (d, groups[g].key, slot)
            })
            .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("non-empty");
        let g = remaining.swap_remove(pick.2);
        order.extend_from_slice(&groups[g].members);
        current = &profiles[groups[g].members[0] as usize];
    }
    order
}

/// Sum of distances between consecutive artifacts of an ordering.
pub fn chain_length(profiles: &[Profile], order: &[u32]) -> f64 {
    order
        .windows(2)
        .map(|w| Distance::between(&profiles[w[0] as usize], &profiles[w[1] as usize]).to_f64())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn names(d: &Dataset, perm: &[u32]) -> Vec<String> {
        perm.iter().map(|&i| d.artifacts()[i as usize].path.clone()).collect()
    }

    #[test]
    fn identical_histories_are_adjacent() {
        let d = synth::from_timestamps(
            "d",
            &[
                ("a", vec![0, 50, 100]),
                ("m", vec![10, 11, 12, 500]),
                ("z", vec![0, 50, 100]),
            ],
        );
        let order = similarity_order(&d, DEFAULT_BINS, SimilarityDomain::Absolute);
        assert!(!order.fallback);
        assert_eq!(names(&d, &order.permutation), ["a", "z", "m"]);
    }

    #[test]
    fn outlier_ends_up_at_an_end() {
        let d = synth::from_timestamps(
            "d",
            &[
                ("b", vec![100, 200, 300]),
                ("c", vec![100, 200, 300]),
                ("a", vec![5, 900]),
            ],
        );
        let order = similarity_order(&d, 8, SimilarityDomain::Absolute).permutation;
        let pos = order
            .iter()
            .position(|&i| d.artifacts()[i as usize].path == "a")
            .unwrap();
        assert!(pos == 0 || pos == 2);
    }

    #[test]
    fn distance_is_exact_and_symmetric() {
        let a = Profile {
            counts: vec![1, 1, 0],
            total: 2,
        };
        let b = Profile {
            counts: vec![0, 0, 3],
            total: 3,
        };
        assert_eq!(Distance::between(&a, &b).to_f64(), 2.0);
        assert!(Distance::between(&a, &a).is_zero());
        assert_eq!(Distance::between(&a, &b), Distance::between(&b, &a));
    }

    #[test]
    fn single_instant_artifacts_bin_in_the_middle() {
        let d = synth::from_timestamps("d", &[("a", vec![7])]);
        let p = profiles(&d, 4, SimilarityDomain::Normalized);
        assert_eq!(p[0].counts, [0, 0, 1, 0]);
    }

    #[test]
    fn empty_dataset() {
        let d = synth::sized_histories(&[]);
        assert!(similarity_order(&d, 4, SimilarityDomain::Normalized)
            .permutation
            .is_empty());
    }
}
