use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use evoscat::bundle::{load_bundle, FILE_EXTENSION};
use evoscat::layout::layout_points;
use evoscat::preprocess::TimeMode;
use evoscat::view::ViewDefaults;
use evoscat::{LayoutBundle, SpatialIndexF64};
use serde::Serialize;

/// Environment variable naming the directory of `.evb` files.
pub const DATA_DIR_ENV: &str = "EVOSCAT_DATA_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Bundle { path: PathBuf, source: evoscat::Error },
    #[error("dataset id `{id}` is used by both {first} and {second}")]
    DuplicateId {
        id: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("{DATA_DIR_ENV} is not set")]
    NoDataDir,
}

/// One row of `GET /datasets`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetCatalogEntry {
    pub id: String,
    pub title: String,
    pub artifact_count: u64,
    pub event_count: u64,
    pub commit_count: u64,
    pub t_min: i64,
    pub t_max: i64,
    pub criteria: Vec<String>,
    pub color_modes: Vec<String>,
}

type IndexKey = (TimeMode, String);

pub struct Dataset {
    pub bundle: LayoutBundle,
    /// The file as read, served verbatim.
    pub bytes: Arc<[u8]>,
    pub source: PathBuf,
    pub defaults: ViewDefaults,
    indexes: Mutex<HashMap<IndexKey, Arc<OnceLock<Arc<SpatialIndexF64>>>>>,
}

impl Dataset {
    pub fn from_bytes(bytes: Vec<u8>, source: PathBuf) -> evoscat::Result<Self> {
        let bundle = load_bundle(&bytes)?;
        Ok(Dataset {
            defaults: ViewDefaults::from_bundle(&bundle),
            bundle,
            bytes: bytes.into(),
            source,
            indexes: Mutex::new(HashMap::new()),
        })
    }

    pub fn id(&self) -> &str {
        self.bundle.id()
    }

    /// Strong validator for the bundle bytes.
    pub fn etag(&self) -> String {
        format!("\"{}\"", self.bundle.header.checksum)
    }

    pub fn entry(&self) -> DatasetCatalogEntry {
        let h = &self.bundle.header;
        DatasetCatalogEntry {
            id: h.dataset_id.clone(),
            title: h.title.clone(),
            artifact_count: h.artifact_count,
            event_count: h.event_count,
            commit_count: h.commit_count,
            t_min: h.time.t_min,
            t_max: h.time.t_max,
            criteria: h.criterion_names().map(str::to_owned).collect(),
            color_modes: h.histograms.iter().map(|m| m.mode.clone()).collect(),
        }
    }

    /// Spatial index for one layout, built once per key even under concurrent requests.
    pub fn spatial_index(&self, mode: TimeMode, criterion: &str) -> evoscat::Result<Arc<SpatialIndexF64>> {
        let cell = {
            let mut map = self.indexes.lock().expect("index cache lock");
            map.entry((mode, criterion.to_owned())).or_default().clone()
        };
        if let Some(index) = cell.get() {
            return Ok(index.clone());
        }
        let points = layout_points::<f64>(&self.bundle, mode, criterion)?;
        Ok(cell.get_or_init(|| Arc::new(SpatialIndexF64::build(&points))).clone())
    }
}

/// Every dataset the service knows, keyed by id.
#[derive(Default)]
pub struct Catalog {
    datasets: BTreeMap<String, Arc<Dataset>>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, dataset: Dataset) -> Result<(), CatalogError> {
        if let Some(prev) = self.datasets.get(dataset.id()) {
            return Err(CatalogError::DuplicateId {
                id: dataset.id().to_owned(),
                first: prev.source.clone(),
                second: dataset.source,
            });
        }
        self.datasets.insert(dataset.id().to_owned(), Arc::new(dataset));
        Ok(())
    }

    /// Loads every `*.evb` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, CatalogError> {
        let io_err = |source| CatalogError::Io {
            path: dir.to_owned(),
            source,
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == FILE_EXTENSION))
            .collect();
        paths.sort();
        let mut catalog = Catalog::new();
        for path in paths {
            let bytes = fs::read(&path).map_err(|source| CatalogError::Io {
                path: path.clone(),
                source,
            })?;
            let dataset = Dataset::from_bytes(bytes, path.clone()).map_err(|source| CatalogError::Bundle {
                path: path.clone(),
                source,
            })?;
            log::info!(
                "loaded `{}` from {} ({} events)",
                dataset.id(),
                path.display(),
                dataset.bundle.event_count()
            );
            catalog.insert(dataset)?;
        }
        Ok(catalog)
    }

    /// Loads the directory named by `EVOSCAT_DATA_DIR`.
    pub fn from_env() -> Result<Self, CatalogError> {
        let dir = std::env::var_os(DATA_DIR_ENV).ok_or(CatalogError::NoDataDir)?;
        Self::load_dir(Path::new(&dir))
    }

    pub fn get(&self, id: &str) -> Option<&Arc<Dataset>> {
        self.datasets.get(id)
    }

    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    pub fn entries(&self) -> Vec<DatasetCatalogEntry> {
        self.datasets.values().map(|d| d.entry()).collect()
    }
}
