//! Dense scatterplots of software evolution histories.
//!
//! Each event (an artifact being added, modified or deleted in a commit) becomes
//! one dot. Artifacts are laid out as columns ordered by a sort criterion, and
//! the vertical position comes from the event time under one of several time
//! transforms. Data flows through four stages:
//!
//! * [`miner`] turns a git repository into an event log,
//! * [`preprocess`] validates events and precomputes orderings and histograms,
//! * [`bundle`] packs the result into a compact file for clients,
//! * [`render`] rasterizes a [`view::ViewConfig`] to PNG.
//!
//! Layout and spatial code is generic over [`Scalar`] (`f32` or `f64`).

pub mod bundle;
pub mod error;
pub mod eventlog;
pub mod layout;
pub mod miner;
pub mod model;
pub mod preprocess;
pub mod render;
mod scalar;
pub mod spatial;
pub mod synth;
pub mod view;

pub use bundle::{build_bundle, load_bundle, BundleHeader, BundleOptions, LayoutBundle};
pub use error::{Error, Result};
pub use layout::{layout_points, LayoutPoint};
pub use model::{ArtifactRecord, ArtifactStats, ChangeKind, Dataset, Event, MetricDescriptor, Rgb};
pub use preprocess::{ColorMode, SortCriterion, TimeMode};
pub use render::{render, render_raster, RenderStats};
pub use scalar::Scalar;
pub use spatial::SpatialIndex;
pub use view::{parse_view_state, ViewConfig, ViewDefaults, Viewport};

pub type Point = LayoutPoint<f64>;
pub type PointF32 = LayoutPoint<f32>;
pub type SpatialIndexF64 = SpatialIndex<f64>;
pub type SpatialIndexF32 = SpatialIndex<f32>;
