use std::collections::BTreeMap;

use evoscat::bundle::{assemble_bundle, build_bundle, load_bundle, BundleOptions, LayoutBundle};
use evoscat::layout::layout_points;
use evoscat::model::{Dataset, Rgb};
use evoscat::preprocess::{ColorMode, TimeMode, CATEGORICAL, GROW, SHRINK, STABLE};
use evoscat::render::{render, render_raster};
use evoscat::synth::{self, RandomDatasetParams};
use evoscat::view::{ViewConfig, ViewDefaults, Viewport};
use evoscat::{Error, SpatialIndexF64};

fn bundle(seed: u64) -> LayoutBundle {
    let d = synth::random_dataset(seed, &RandomDatasetParams::default());
    let opts = BundleOptions {
        criteria: ["first", "last", "-count", "similarity"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect(),
        ..Default::default()
    };
    assemble_bundle(&d, &opts).unwrap()
}

fn view(b: &LayoutBundle) -> ViewConfig {
    let mut v = ViewConfig::new(b.id(), &ViewDefaults::from_bundle(b));
    v.width = 64;
    v.height = 48;
    v
}

#[test]
fn rendering_is_deterministic() {
    let b = bundle(1);
    let mut v = view(&b);
    v.density = true;
    let first = render(&b, &v).unwrap();
    let reloaded = load_bundle(
        &build_bundle(
            &synth::random_dataset(1, &Default::default()),
            &BundleOptions {
                criteria: ["first", "last", "-count", "similarity"]
                    .iter()
                    .map(|s| s.parse().unwrap())
                    .collect(),
                ..Default::default()
            },
        )
        .unwrap(),
    )
    .unwrap();
    assert_eq!(render(&reloaded, &v).unwrap(), first);
}

#[test]
fn empty_dataset_renders_white() {
    let d = Dataset::new("empty", vec![], vec![]).unwrap();
    let b = assemble_bundle(&d, &BundleOptions::default()).unwrap();
    let v = view(&b);
    let (raster, stats) = render_raster(&b, &v).unwrap();
    assert_eq!(stats.dots_drawn, 0);
    assert!(raster.to_rgba8().iter().all(|&c| c == 255));
}

#[test]
fn invalid_views_are_rejected() {
    let b = bundle(2);
    let mut v = view(&b);
    v.viewport = Viewport {
        x0: 0.5,
        x1: 0.5,
        y0: 0.0,
        y1: 1.0,
    };
    assert!(matches!(render(&b, &v), Err(Error::InvalidView(_))));
    let mut v = view(&b);
    v.width = 16_385;
    assert!(matches!(render(&b, &v), Err(Error::InvalidView(_))));
    let mut v = view(&b);
    v.criterion = "missing".into();
    assert!(matches!(render(&b, &v), Err(Error::UnknownCriterion(_))));
}

#[test]
fn criterion_change_permutes_columns_only() {
    let b = bundle(3);
    let column_counts = |criterion: &str| {
        let pts = layout_points::<f64>(&b, TimeMode::Absolute, criterion).unwrap();
        let mut per_x: BTreeMap<u64, usize> = BTreeMap::new();
        for p in &pts {
            *per_x.entry(p.x.to_bits()).or_default() += 1;
        }
        let mut counts: Vec<usize> = per_x.into_values().collect();
        counts.sort();
        let mut ys: Vec<u64> = pts.iter().map(|p| p.y.to_bits()).collect();
        ys.sort();
        (counts, ys)
    };
    let base = column_counts("path");
    for c in ["first", "last", "-count", "similarity"] {
        assert_eq!(column_counts(c), base, "{c}");
    }
}

#[test]
fn palette_defaults_and_overrides() {
    let d = synth::from_timestamps("d", &[("a.py", vec![synth::BASE_TS])]);
    let b = assemble_bundle(&d, &BundleOptions::default()).unwrap();
    let mut v = view(&b);
    v.width = 3;
    v.height = 3;
    let pixel = |v: &ViewConfig| {
        let (r, _) = render_raster(&b, v).unwrap();
        let [red, green, blue] = r.pixel(1, 1).map(|c| (c * 255.0).round() as u8);
        Rgb(red, green, blue)
    };
    assert_eq!(pixel(&v), CATEGORICAL[0]);
    assert_eq!(CATEGORICAL[0], Rgb::from_hex("#FF4A46").unwrap());
    v.palette.insert("2014".into(), Rgb(1, 2, 3));
    assert_eq!(pixel(&v), Rgb(1, 2, 3));
    assert_eq!(
        (SHRINK, STABLE, GROW),
        (
            Rgb::from_hex("#FF4A46").unwrap(),
            Rgb::from_hex("#00AEFF").unwrap(),
            Rgb::from_hex("#1fcb23").unwrap(),
        )
    );
    v.color_mode = ColorMode::Solid(Rgb(9, 9, 9));
    v.palette.clear();
    assert_eq!(pixel(&v), Rgb(9, 9, 9));
}

#[test]
fn nearest_finds_known_dot() {
    let d = synth::from_timestamps("d", &[("a", vec![100, 200]), ("b", vec![150])]);
    let b = assemble_bundle(&d, &BundleOptions::default()).unwrap();
    let pts = layout_points::<f64>(&b, TimeMode::Absolute, "path").unwrap();
    let index = SpatialIndexF64::build(&pts);
    // b@150 sits at x = 0.75, y = 0.5
    let e = index.nearest(0.75, 0.5, 0.01).unwrap() as usize;
    let details = b.event(e).unwrap();
    assert_eq!((details.path.as_str(), details.ts), ("b", 150));
    assert_eq!(index.nearest(0.25, 0.75, 0.01), None);
}
