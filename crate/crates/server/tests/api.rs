use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use evoscat::bundle::{build_bundle, load_bundle, BundleOptions};
use evoscat::layout::layout_points;
use evoscat::preprocess::TimeMode;
use evoscat::spatial::nearest_event;
use evoscat::synth::{self, RandomDatasetParams};
use evoscat::view::{ViewConfig, ViewDefaults};
use evoscat::{LayoutBundle, SpatialIndexF64};
use evoscat_server::{router, Catalog, CatalogError};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn options() -> BundleOptions {
    BundleOptions {
        criteria: ["first", "last", "-count"].iter().map(|s| s.parse().unwrap()).collect(),
        ..Default::default()
    }
}

fn write_fixtures(dir: &Path) {
    let small = synth::from_timestamps("small", &[("a", vec![100, 200]), ("b", vec![150])]);
    std::fs::write(dir.join("small.evb"), build_bundle(&small, &options()).unwrap()).unwrap();
    let random = synth::random_dataset(4, &RandomDatasetParams::default());
    std::fs::write(dir.join("random.evb"), build_bundle(&random, &options()).unwrap()).unwrap();
    std::fs::write(dir.join("notes.txt"), "ignored").unwrap();
}

struct Fixture {
    _dir: tempfile::TempDir,
    catalog: Arc<Catalog>,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(dir.path());
        let catalog = Arc::new(Catalog::load_dir(dir.path()).unwrap());
        Fixture { _dir: dir, catalog }
    }

    fn bundle(&self, id: &str) -> &LayoutBundle {
        &self.catalog.get(id).unwrap().bundle
    }

    async fn get(&self, uri: &str) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
        self.request(Request::get(uri).body(Body::empty()).unwrap()).await
    }

    async fn request(&self, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
        let resp = router(self.catalog.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, headers, body)
    }

    async fn json(&self, uri: &str) -> (StatusCode, Value) {
        let (status, _, body) = self.get(uri).await;
        (status, serde_json::from_slice(&body).unwrap())
    }
}

#[tokio::test]
async fn catalog_lists_both_datasets() {
    let f = Fixture::new();
    let (status, body) = f.json("/datasets").await;
    assert_eq!(status, StatusCode::OK);
    let entries = body.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    for e in entries {
        let h = &f.bundle(e["id"].as_str().unwrap()).header;
        assert_eq!(e["artifact_count"], h.artifact_count);
        assert_eq!(e["event_count"], h.event_count);
        assert_eq!(e["t_min"], h.time.t_min);
        assert_eq!(e["criteria"][0], "path");
    }
}

#[tokio::test]
async fn bundle_with_validators() {
    let f = Fixture::new();
    let (status, headers, body) = f.get("/datasets/small/bundle").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&load_bundle(&body).unwrap(), f.bundle("small"));
    let etag = headers[header::ETAG].to_str().unwrap().to_owned();
    assert_eq!(etag, format!("\"{}\"", f.bundle("small").header.checksum));

    let req = Request::get("/datasets/small/bundle")
        .header(header::IF_NONE_MATCH, &etag)
        .body(Body::empty())
        .unwrap();
    let (status, _, body) = f.request(req).await;
    assert_eq!(status, StatusCode::NOT_MODIFIED);
    assert!(body.is_empty());

    let req = Request::get("/datasets/small/bundle")
        .header(header::IF_NONE_MATCH, "\"other\"")
        .body(Body::empty())
        .unwrap();
    assert_eq!(f.request(req).await.0, StatusCode::OK);
    assert_eq!(f.get("/datasets/nope/bundle").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn render_matches_library() {
    let f = Fixture::new();
    let (status, headers, body) = f.get("/datasets/random4/render").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[header::CONTENT_TYPE], "image/png");
    let b = f.bundle("random4");
    let view = ViewConfig::new("random4", &ViewDefaults::from_bundle(b));
    assert_eq!(body, evoscat::render(b, &view).unwrap());

    let (_, _, again) = f.get("/datasets/random4/render").await;
    assert_eq!(again, body);

    let uri = "/datasets/random4/render?time=relend&artifact=-count&color=type&w=200&h=100&density=1&alpha=0.1";
    let (status, _, body) = f.get(uri).await;
    assert_eq!(status, StatusCode::OK);
    let mut view = ViewConfig::new("random4", &ViewDefaults::from_bundle(b));
    view.time_mode = TimeMode::RelEnd;
    view.criterion = "-count".into();
    view.color_mode = evoscat::ColorMode::Type;
    (view.width, view.height, view.density, view.dot_alpha) = (200, 100, true, 0.1);
    assert_eq!(body, evoscat::render(b, &view).unwrap());
}

#[tokio::test]
async fn errors_carry_status_and_key() {
    let f = Fixture::new();
    let (status, body) = f.json("/datasets/random4/render?time=sideways").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["key"], "time");
    let (status, body) = f.json("/datasets/random4/render?artifact=nope").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["key"], "artifact");
    let (status, _) = f.json("/datasets/random4/render?vp=1,0,0,1").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = f.json("/datasets/missing/render").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, body) = f.json("/datasets/small/nearest?y=0.5").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["key"], "x");
    let (status, body) = f.json("/datasets/small/nearest?x=0.5&y=0.5&r=-1").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["key"], "r");
}

#[tokio::test]
async fn nearest_returns_the_known_dot() {
    let f = Fixture::new();
    // under the path order, b@150 sits at x = 0.75 and halfway up the absolute time axis
    let (status, body) = f.json("/datasets/small/nearest?x=0.75&y=0.5&r=0.01").await;
    assert_eq!(status, StatusCode::OK);
    let b = f.bundle("small");
    let expected = b.event(1).unwrap();
    assert_eq!((expected.path.as_str(), expected.ts), ("b", 150));
    assert_eq!(body["commit"], expected.commit.as_str());
    assert_eq!(body["path"], "b");
    assert_eq!(body["ts"], 150);
    assert_eq!(body["event"], 1);
    assert!(body["author"].is_string() && body["metrics"].is_object());

    let (_, body) = f.json("/datasets/small/nearest?x=0.25&y=0.5&r=0.01").await;
    assert!(body.is_null());
}

#[tokio::test]
async fn nearest_agrees_with_in_process_index() {
    let f = Fixture::new();
    let b = f.bundle("random4");
    let points = layout_points::<f64>(b, TimeMode::RelStart, "last").unwrap();
    let index = SpatialIndexF64::build(&points);
    for i in 0..40 {
        let (x, y, r) = (
            (i * 37 % 100) as f64 / 100.0,
            (i * 61 % 100) as f64 / 100.0,
            0.002 * (i % 7 + 1) as f64,
        );
        let uri = format!("/datasets/random4/nearest?x={x}&y={y}&r={r}&time=relstart&artifact=last");
        let (status, body) = f.json(&uri).await;
        assert_eq!(status, StatusCode::OK);
        let want = nearest_event(&index, x, y, r);
        assert_eq!(body["event"].as_u64().map(|e| e as u32), want, "{uri}");
    }
}

#[tokio::test]
async fn view_endpoint_resolves_defaults() {
    let f = Fixture::new();
    let (status, body) = f.json("/datasets/small/view?time=normage&color=%23000").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["time"], "normtime");
    assert_eq!(body["color"], "#000000");
    assert_eq!(body["artifact"], "first");
    assert!(body["url"].as_str().unwrap().starts_with("?dataset=small#"));
}

#[test]
fn duplicate_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = synth::from_timestamps("same", &[("a", vec![1])]);
    let bytes = build_bundle(&d, &BundleOptions::default()).unwrap();
    std::fs::write(dir.path().join("one.evb"), &bytes).unwrap();
    std::fs::write(dir.path().join("two.evb"), &bytes).unwrap();
    assert!(matches!(
        Catalog::load_dir(dir.path()),
        Err(CatalogError::DuplicateId { .. })
    ));
    std::fs::write(dir.path().join("two.evb"), b"EVOSCAT1 broken").unwrap();
    assert!(matches!(
        Catalog::load_dir(dir.path()),
        Err(CatalogError::Bundle { .. })
    ));
}
