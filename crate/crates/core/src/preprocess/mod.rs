//! Validation, filtering and layout precomputation.

mod filter;
mod histogram;
mod similarity;
mod sort;
mod time;
mod validate;

pub use filter::filter_min_events;
pub use histogram::{
    classify, compute_histogram, year_color, Classification, ColorMode, EventAttrs, HistogramClass, CATEGORICAL, GROW,
    NO_CLASS, SHRINK, STABLE,
};
pub use similarity::{
    chain_length, profiles, similarity_order, Distance, Profile, SimilarityDomain, SimilarityOrder, DEFAULT_BINS,
    MAX_SIMILARITY_ARTIFACTS,
};
pub use sort::{ranks_of, sort_artifacts, Direction, SortCriterion, SortField, SortKey};
pub use time::{time_transform, Span, TimeMode, TimeScales};
pub use validate::{validate_events, ValidationReport, ValidationWindow};

pub(crate) use time::transform_unchecked;
