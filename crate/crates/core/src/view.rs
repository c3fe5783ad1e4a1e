//! Visualization state and its shareable URL form.
//!
//! `?dataset=<id>#time=<mode>&artifact=<criterion>&color=<mode>` plus optional
//! `w`, `h`, `vp=x0,x1,y0,y1`, `density`, `alpha`, `dot` (radius in pixels) and repeated
//! `pal=<class label>:<rrggbb>` keys. Fragment keys may also be given in the
//! query string; the fragment wins when both are present.

use std::collections::BTreeMap;

use url::form_urlencoded;

use crate::bundle::{BundleHeader, LayoutBundle};
use crate::error::{Error, Result};
use crate::model::Rgb;
use crate::preprocess::{ColorMode, TimeMode};

pub const DEFAULT_WIDTH: u32 = 1024;
pub const DEFAULT_HEIGHT: u32 = 768;
pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_RADIUS: u32 = 1;
pub const MAX_SIDE: u32 = 16_384;
pub const MAX_RADIUS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }
}

impl Viewport {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewConfig {
    pub dataset: String,
    pub time_mode: TimeMode,
    pub criterion: String,
    pub color_mode: ColorMode,
    pub width: u32,
    pub height: u32,
    pub viewport: Viewport,
    pub density: bool,
    pub dot_alpha: f64,
    pub dot_radius_px: u32,
    pub palette: BTreeMap<String, Rgb>,
}

/// Per-dataset values used for keys missing from a URL.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDefaults {
    pub criterion: String,
    pub color_mode: ColorMode,
    pub default_metric: Option<String>,
    pub criteria: Vec<String>,
    pub metrics: Vec<String>,
}

impl ViewDefaults {
    pub fn from_header(header: &BundleHeader) -> Self {
        let criteria: Vec<String> = header.criterion_names().map(str::to_owned).collect();
        ViewDefaults {
            // the first criterion is always the implicit path order; prefer a requested one
            criterion: criteria
                .get(1)
                .or(criteria.first())
                .cloned()
                .unwrap_or_else(|| "path".into()),
            color_mode: ColorMode::Year,
            default_metric: header.metrics.first().map(|m| m.name.clone()),
            criteria,
            metrics: header.metrics.iter().map(|m| m.name.clone()).collect(),
        }
    }

    pub fn from_bundle(bundle: &LayoutBundle) -> Self {
        Self::from_header(&bundle.header)
    }
}

impl ViewConfig {
    pub fn new(dataset: impl Into<String>, defaults: &ViewDefaults) -> Self {
        ViewConfig {
            dataset: dataset.into(),
            time_mode: TimeMode::Absolute,
            criterion: defaults.criterion.clone(),
            color_mode: defaults.color_mode.clone(),
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            viewport: Viewport::default(),
            density: false,
            dot_alpha: DEFAULT_ALPHA,
            dot_radius_px: DEFAULT_RADIUS,
            palette: BTreeMap::new(),
        }
    }

    /// Checks geometry and drawing parameters.
    pub fn validate(&self) -> Result<()> {
        let vp = self.viewport;
        let finite = [vp.x0, vp.x1, vp.y0, vp.y1].iter().all(|v| v.is_finite());
        if !finite || vp.x0 >= vp.x1 || vp.y0 >= vp.y1 {
            return Err(Error::InvalidView(format!(
                "viewport ({}, {}, {}, {}) has no area",
                vp.x0, vp.x1, vp.y0, vp.y1
            )));
        }
        if self.width == 0 || self.height == 0 || self.width > MAX_SIDE || self.height > MAX_SIDE {
            return Err(Error::InvalidView(format!(
                "image size {}x{} outside 1..={MAX_SIDE}",
                self.width, self.height
            )));
        }
        if !(self.dot_alpha > 0.0 && self.dot_alpha <= 1.0) {
            return Err(Error::InvalidView(format!(
                "dot alpha {} outside (0, 1]",
                self.dot_alpha
            )));
        }
        if self.dot_radius_px == 0 || self.dot_radius_px > MAX_RADIUS {
            return Err(Error::InvalidView(format!(
                "dot radius {} outside 1..={MAX_RADIUS}",
                self.dot_radius_px
            )));
        }
        Ok(())
    }

    /// Fragment-style key/value pairs, omitting values equal to the defaults.
    pub fn params(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("time", self.time_mode.to_string()),
            ("artifact", self.criterion.clone()),
            ("color", self.color_mode.to_string()),
        ];
        if self.width != DEFAULT_WIDTH {
            out.push(("w", self.width.to_string()));
        }
        if self.height != DEFAULT_HEIGHT {
            out.push(("h", self.height.to_string()));
        }
        if self.viewport != Viewport::default() {
            let vp = self.viewport;
            out.push(("vp", format!("{},{},{},{}", vp.x0, vp.x1, vp.y0, vp.y1)));
        }
        if self.density {
            out.push(("density", "1".into()));
        }
        if self.dot_alpha != DEFAULT_ALPHA {
            out.push(("alpha", self.dot_alpha.to_string()));
        }
        if self.dot_radius_px != DEFAULT_RADIUS {
            out.push(("dot", self.dot_radius_px.to_string()));
        }
        for (label, color) in &self.palette {
            out.push(("pal", format!("{label}:{}", &color.to_string()[1..])));
        }
        out
    }

    /// `?dataset=<id>#<fragment>`.
    pub fn to_url(&self) -> String {
        let query = form_urlencoded::Serializer::new(String::new())
            .append_pair("dataset", &self.dataset)
            .finish();
        let mut fragment = form_urlencoded::Serializer::new(String::new());
        for (k, v) in self.params() {
            fragment.append_pair(k, &v);
        }
        format!("?{query}#{}", fragment.finish())
    }

    /// All keys as one query string, for server requests.
    pub fn to_query(&self) -> String {
        let mut q = form_urlencoded::Serializer::new(String::new());
        q.append_pair("dataset", &self.dataset);
        for (k, v) in self.params() {
            q.append_pair(k, &v);
        }
        q.finish()
    }
}

fn invalid(key: &str, value: &str) -> Error {
    Error::InvalidParam {
        key: key.to_owned(),
        value: value.to_owned(),
    }
}

fn parse_num<N: std::str::FromStr>(key: &str, value: &str) -> Result<N> {
    value.trim().parse().map_err(|_| invalid(key, value))
}

/// Splits a URL (absolute, `?query#fragment`, or bare query) into key/value pairs,
/// query pairs first so that fragment pairs override them.
pub fn url_pairs(url: &str) -> Vec<(String, String)> {
    let (before, fragment) = match url.split_once('#') {
        Some((b, f)) => (b, f),
        None => (url, ""),
    };
    let query = match before.split_once('?') {
        Some((_, q)) => q,
        None if before.contains('=') => before,
        None => "",
    };
    form_urlencoded::parse(query.as_bytes())
        .chain(form_urlencoded::parse(fragment.as_bytes()))
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect()
}

/// Builds a view from key/value pairs; later pairs override earlier ones.
///
/// `lookup` resolves the dataset id to its defaults, `None` meaning unknown.
pub fn view_from_pairs<F>(pairs: &[(String, String)], dataset: Option<&str>, lookup: F) -> Result<ViewConfig>
where
    F: FnOnce(&str) -> Option<ViewDefaults>,
{
    let last = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let id = dataset
        .or_else(|| last("dataset"))
        .ok_or_else(|| invalid("dataset", ""))?;
    let defaults = lookup(id).ok_or_else(|| Error::UnknownDataset(id.to_owned()))?;
    let mut view = ViewConfig::new(id, &defaults);

    let mut palette_reset = false;
    for (key, value) in pairs {
        match key.as_str() {
            "time" => view.time_mode = value.parse().map_err(|_| invalid("time", value))?,
            "artifact" => {
                if !defaults.criteria.iter().any(|c| c == value) {
                    return Err(invalid("artifact", value));
                }
                view.criterion = value.clone();
            }
            "color" => {
                let mode = ColorMode::parse_with_default(value, defaults.default_metric.as_deref())
                    .map_err(|_| invalid("color", value))?;
                if let Some(m) = mode.metric() {
                    if !defaults.metrics.iter().any(|n| n == m) {
                        return Err(invalid("color", value));
                    }
                }
                view.color_mode = mode;
            }
            "w" => view.width = parse_num(key, value)?,
            "h" => view.height = parse_num(key, value)?,
            "size" => {
                let (w, h) = parse_size(value)?;
                view.width = w;
                view.height = h;
            }
            "vp" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|p| parse_num::<f64>("vp", p))
                    .collect::<Result<_>>()?;
                let [x0, x1, y0, y1] = parts[..] else {
                    return Err(invalid("vp", value));
                };
                view.viewport = Viewport { x0, x1, y0, y1 };
            }
            "density" => {
                view.density = match value.as_str() {
                    "1" | "true" | "on" | "" => true,
                    "0" | "false" | "off" => false,
                    _ => return Err(invalid("density", value)),
                }
            }
            "alpha" => view.dot_alpha = parse_num(key, value)?,
            "dot" => view.dot_radius_px = parse_num(key, value)?,
            "pal" => {
                if !palette_reset {
                    view.palette.clear();
                    palette_reset = true;
                }
                let (label, hex) = value.rsplit_once(':').ok_or_else(|| invalid("pal", value))?;
                let color = Rgb::from_hex(hex).ok_or_else(|| invalid("pal", value))?;
                view.palette.insert(label.to_owned(), color);
            }
            _ => {}
        }
    }
    view.validate().map_err(|e| match e {
        Error::InvalidView(msg) => Error::InvalidParam {
            key: "view".into(),
            value: msg,
        },
        other => other,
    })?;
    Ok(view)
}

/// Parses a shareable view URL.
pub fn parse_view_state<F>(url: &str, lookup: F) -> Result<ViewConfig>
where
    F: FnOnce(&str) -> Option<ViewDefaults>,
{
    view_from_pairs(&url_pairs(url), None, lookup)
}

/// `WxH`, e.g. `1920x1080`.
pub fn parse_size(s: &str) -> Result<(u32, u32)> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| invalid("size", s))?;
    Ok((parse_num("size", w)?, parse_num("size", h)?))
}
