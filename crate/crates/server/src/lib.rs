//! Read-only HTTP access to preprocessed bundles.
//!
//! | route | response |
//! |---|---|
//! | `GET /datasets` | catalog JSON |
//! | `GET /datasets/{id}/bundle` | `.evb` bytes, `ETag` from the bundle checksum |
//! | `GET /datasets/{id}/render?<view keys>` | PNG |
//! | `GET /datasets/{id}/nearest?x=&y=&r=&<view keys>` | event JSON or `null` |
//! | `GET /datasets/{id}/view?<view keys>` | the resolved view and its canonical URL |
//!
//! View keys are those of the shareable URL fragment (`time`, `artifact`,
//! `color`, `w`, `h`, `vp`, `density`, `alpha`, `dot`, `pal`), passed as query
//! parameters because fragments never reach the server.

mod catalog;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, RawQuery, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use evoscat::bundle::EventDetails;
use evoscat::view::{url_pairs, view_from_pairs};
use evoscat::ViewConfig;
use serde::Serialize;
use serde_json::json;

pub use catalog::{Catalog, CatalogError, Dataset, DatasetCatalogEntry, DATA_DIR_ENV};

/// Search radius of `/nearest` in layout units when `r` is absent.
pub const DEFAULT_NEAREST_RADIUS: f64 = 0.01;

pub type AppState = Arc<Catalog>;

pub fn router(catalog: AppState) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets))
        .route("/datasets/{id}/bundle", get(get_bundle))
        .route("/datasets/{id}/render", get(get_render))
        .route("/datasets/{id}/nearest", get(get_nearest))
        .route("/datasets/{id}/view", get(get_view))
        .with_state(catalog)
}

/// Serves until interrupted.
pub async fn serve(catalog: Catalog, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!(
        "serving {} datasets on http://{}",
        catalog.len(),
        listener.local_addr()?
    );
    axum::serve(listener, router(Arc::new(catalog)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub struct ApiError(evoscat::Error);

impl From<evoscat::Error> for ApiError {
    fn from(e: evoscat::Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        use evoscat::Error as E;
        let status = match &self.0 {
            E::UnknownDataset(_) => StatusCode::NOT_FOUND,
            E::InvalidParam { .. }
            | E::InvalidView(_)
            | E::UnknownCriterion(_)
            | E::UnknownMetric(_)
            | E::InvalidColorMode(_)
            | E::InvalidCriterion { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.0.to_string() });
        if let E::InvalidParam { key, .. } = &self.0 {
            body["key"] = json!(key);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn dataset(catalog: &Catalog, id: &str) -> ApiResult<Arc<Dataset>> {
    catalog
        .get(id)
        .cloned()
        .ok_or_else(|| evoscat::Error::UnknownDataset(id.to_owned()).into())
}

fn query_pairs(query: Option<String>) -> Vec<(String, String)> {
    url_pairs(&format!("?{}", query.unwrap_or_default()))
}

fn resolve_view(catalog: &Catalog, id: &str, pairs: &[(String, String)]) -> ApiResult<ViewConfig> {
    Ok(view_from_pairs(pairs, Some(id), |id| {
        catalog.get(id).map(|d| d.defaults.clone())
    })?)
}

async fn list_datasets(State(catalog): State<AppState>) -> Json<Vec<DatasetCatalogEntry>> {
    Json(catalog.entries())
}

fn etag_matches(headers: &HeaderMap, etag: &str) -> bool {
    headers
        .get_all(header::IF_NONE_MATCH)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .map(str::trim)
        .any(|t| t == "*" || t.strip_prefix("W/").unwrap_or(t) == etag)
}

async fn get_bundle(
    State(catalog): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let d = dataset(&catalog, &id)?;
    let etag = d.etag();
    let etag_value = HeaderValue::from_str(&etag).expect("checksum is hex");
    let cache = HeaderValue::from_static("public, no-cache");
    if etag_matches(&headers, &etag) {
        return Ok((
            StatusCode::NOT_MODIFIED,
            [(header::ETAG, etag_value), (header::CACHE_CONTROL, cache)],
        )
            .into_response());
    }
    Ok((
        [
            (
                header::CONTENT_TYPE,
                HeaderValue::from_static("application/octet-stream"),
            ),
            (header::ETAG, etag_value),
            (header::CACHE_CONTROL, cache),
        ],
        d.bytes.to_vec(),
    )
        .into_response())
}

async fn get_render(
    State(catalog): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<Response> {
    let d = dataset(&catalog, &id)?;
    let view = resolve_view(&catalog, &id, &query_pairs(query))?;
    let png = tokio::task::spawn_blocking(move || evoscat::render(&d.bundle, &view))
        .await
        .map_err(|e| evoscat::Error::Image(e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Serialize)]
pub struct NearestHit {
    pub event: u32,
    #[serde(flatten)]
    pub details: EventDetails,
}

fn number(pairs: &[(String, String)], key: &str) -> ApiResult<Option<f64>> {
    match pairs.iter().rev().find(|(k, _)| k == key) {
        None => Ok(None),
        Some((_, v)) => match v.trim().parse::<f64>() {
            Ok(n) if n.is_finite() => Ok(Some(n)),
            _ => Err(evoscat::Error::InvalidParam {
                key: key.to_owned(),
                value: v.clone(),
            }
            .into()),
        },
    }
}

async fn get_nearest(
    State(catalog): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<Option<NearestHit>>> {
    let d = dataset(&catalog, &id)?;
    let pairs = query_pairs(query);
    let view = resolve_view(&catalog, &id, &pairs)?;
    let missing = |key: &str| evoscat::Error::InvalidParam {
        key: key.to_owned(),
        value: String::new(),
    };
    let x = number(&pairs, "x")?.ok_or_else(|| missing("x"))?;
    let y = number(&pairs, "y")?.ok_or_else(|| missing("y"))?;
    let radius = number(&pairs, "r")?.unwrap_or(DEFAULT_NEAREST_RADIUS);
    if radius <= 0.0 {
        return Err(evoscat::Error::InvalidParam {
            key: "r".into(),
            value: radius.to_string(),
        }
        .into());
    }
    let hit = tokio::task::spawn_blocking(move || -> evoscat::Result<Option<NearestHit>> {
        let index = d.spatial_index(view.time_mode, &view.criterion)?;
        Ok(index.nearest(x, y, radius).map(|event| NearestHit {
            event,
            details: d.bundle.event(event as usize).expect("indexed events exist"),
        }))
    })
    .await
    .map_err(|e| evoscat::Error::Image(e.to_string()))??;
    Ok(Json(hit))
}

/// JSON form of a resolved view.
pub fn view_json(view: &ViewConfig) -> serde_json::Value {
    let vp = view.viewport;
    json!({
        "dataset": view.dataset,
        "time": view.time_mode.to_string(),
        "artifact": view.criterion,
        "color": view.color_mode.to_string(),
        "width": view.width,
        "height": view.height,
        "viewport": [vp.x0, vp.x1, vp.y0, vp.y1],
        "density": view.density,
        "dot_alpha": view.dot_alpha,
        "dot_radius_px": view.dot_radius_px,
        "palette": view.palette.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect::<serde_json::Map<_, _>>(),
        "url": view.to_url(),
    })
}

async fn get_view(
    State(catalog): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<serde_json::Value>> {
    dataset(&catalog, &id)?;
    let view = resolve_view(&catalog, &id, &query_pairs(query))?;
    Ok(Json(view_json(&view)))
}
