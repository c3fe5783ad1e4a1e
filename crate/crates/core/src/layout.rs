//! Placement of events in unit layout space.

use crate::bundle::LayoutBundle;
use crate::error::{Error, Result};
use crate::preprocess::{ranks_of, transform_unchecked, TimeMode};
use crate::scalar::Scalar;

/// One dot: `x` from the artifact's rank, `y` from the time transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutPoint<T> {
    pub x: T,
    pub y: T,
    /// Event ordinal in the bundle's event columns.
    pub event: u32,
}

/// Horizontal center of the column at `rank` among `n` artifacts.
pub fn column_x<T: Scalar>(rank: usize, n: usize) -> T {
    (T::from_usize(rank) + T::half()) / T::from_usize(n)
}

/// One point per event, in ascending time order so later events draw on top.
pub fn layout_points<T: Scalar>(bundle: &LayoutBundle, mode: TimeMode, criterion: &str) -> Result<Vec<LayoutPoint<T>>> {
    let perm = bundle
        .permutation(criterion)
        .ok_or_else(|| Error::UnknownCriterion(criterion.to_owned()))?;
    let ranks = ranks_of(perm).ok_or_else(|| Error::corrupt("permutation is not a bijection"))?;
    let n = bundle.artifact_count();
    let xs: Vec<T> = ranks.iter().map(|&r| column_x(r as usize, n)).collect();
    let scales = bundle.time_scales();
    let ev = &bundle.events;
    Ok((0..ev.len())
        .map(|i| {
            let a = ev.artifact[i] as usize;
            LayoutPoint {
                x: xs[a],
                y: transform_unchecked(ev.ts[i], bundle.span(a), scales, mode),
                event: i as u32,
            }
        })
        .collect())
}
