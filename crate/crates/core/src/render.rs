//! Server-side rasterization of a view.

use crate::bundle::LayoutBundle;
use crate::error::{Error, Result};
use crate::layout::{layout_points, LayoutPoint};
use crate::model::Rgb;
use crate::view::ViewConfig;

/// Linear RGB accumulation buffer, composited over white.
#[derive(Debug, Clone)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    data: Vec<[f32; 3]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderStats {
    /// Dots whose center falls inside the viewport.
    pub dots_drawn: u64,
}

impl Raster {
    pub fn new(width: u32, height: u32) -> Self {
        Raster {
            width,
            height,
            data: vec![[1.0; 3]; width as usize * height as usize],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Source-over of `color` at opacity `alpha` onto one pixel.
    pub fn blend(&mut self, x: u32, y: u32, color: Rgb, alpha: f32) {
        let px = &mut self.data[y as usize * self.width as usize + x as usize];
        let src = [color.0, color.1, color.2];
        for (dst, s) in px.iter_mut().zip(src) {
            *dst = f32::from(s) / 255.0 * alpha + *dst * (1.0 - alpha);
        }
    }

    /// 8-bit RGBA, row-major from the top.
    pub fn to_rgba8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() * 4);
        for px in &self.data {
            for c in px {
                out.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
            out.push(255);
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut buf, self.width, self.height);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().map_err(|e| Error::Image(e.to_string()))?;
            writer
                .write_image_data(&self.to_rgba8())
                .map_err(|e| Error::Image(e.to_string()))?;
        }
        Ok(buf)
    }
}

/// Pixel holding layout point (`x`, `y`), `None` outside the viewport.
pub fn project(view: &ViewConfig, x: f64, y: f64) -> Option<(u32, u32)> {
    let vp = view.viewport;
    if !vp.contains(x, y) {
        return None;
    }
    let fx = (x - vp.x0) / (vp.x1 - vp.x0) * f64::from(view.width);
    // layout y grows upward, image rows grow downward
    let fy = (vp.y1 - y) / (vp.y1 - vp.y0) * f64::from(view.height);
    let px = (fx.floor() as i64).clamp(0, i64::from(view.width) - 1) as u32;
    let py = (fy.floor() as i64).clamp(0, i64::from(view.height) - 1) as u32;
    Some((px, py))
}

/// Pixel offsets covered by a dot of radius `r`.
pub fn disk_offsets(r: u32) -> Vec<(i32, i32)> {
    let r = r as i32;
    let mut out = Vec::new();
    for dy in -r + 1..r {
        for dx in -r + 1..r {
            if dx * dx + dy * dy < r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Draws the view into a fresh raster.
pub fn render_raster(bundle: &LayoutBundle, view: &ViewConfig) -> Result<(Raster, RenderStats)> {
    view.validate()?;
    let points: Vec<LayoutPoint<f64>> = layout_points(bundle, view.time_mode, &view.criterion)?;
    let classes = bundle.classify(&view.color_mode)?;
    let class_colors: Vec<Rgb> = classes
        .classes
        .iter()
        .map(|c| view.palette.get(&c.label).copied().unwrap_or(c.color))
        .collect();
    let alpha = if view.density { view.dot_alpha as f32 } else { 1.0 };
    let disk = disk_offsets(view.dot_radius_px);
    let (w, h) = (view.width as i64, view.height as i64);

    let mut raster = Raster::new(view.width, view.height);
    let mut stats = RenderStats::default();
    for p in &points {
        let Some((px, py)) = project(view, p.x, p.y) else {
            continue;
        };
        stats.dots_drawn += 1;
        let color = classes.event_class[p.event as usize]
            .map(|c| class_colors[c as usize])
            .unwrap_or(crate::preprocess::NO_CLASS);
        for &(dx, dy) in &disk {
            let (x, y) = (i64::from(px) + i64::from(dx), i64::from(py) + i64::from(dy));
            if (0..w).contains(&x) && (0..h).contains(&y) {
                raster.blend(x as u32, y as u32, color, alpha);
            }
        }
    }
    Ok((raster, stats))
}

/// PNG bytes for the view.
pub fn render(bundle: &LayoutBundle, view: &ViewConfig) -> Result<Vec<u8>> {
    render_raster(bundle, view)?.0.to_png()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{assemble_bundle, BundleOptions};
    use crate::preprocess::ColorMode;
    use crate::synth;
    use crate::view::{ViewDefaults, Viewport};

    fn view_for(b: &LayoutBundle, w: u32, h: u32) -> ViewConfig {
        let mut v = ViewConfig::new(b.id(), &ViewDefaults::from_bundle(b));
        v.criterion = "path".into();
        v.width = w;
        v.height = h;
        v
    }

    #[test]
    fn disks() {
        assert_eq!(disk_offsets(1), [(0, 0)]);
        assert_eq!(disk_offsets(2).len(), 9);
    }

    #[test]
    fn projection_corners() {
        let d = synth::from_timestamps("d", &[("a", vec![1])]);
        let b = assemble_bundle(&d, &BundleOptions::default()).unwrap();
        let v = view_for(&b, 10, 10);
        assert_eq!(project(&v, 0.0, 1.0), Some((0, 0)));
        assert_eq!(project(&v, 1.0, 0.0), Some((9, 9)));
        assert_eq!(project(&v, 0.5, 0.5), Some((5, 5)));
        assert_eq!(project(&v, 1.1, 0.5), None);
    }

    #[test]
    fn solid_single_dot() {
        let d = synth::from_timestamps("d", &[("a", vec![1])]);
        let b = assemble_bundle(&d, &BundleOptions::default()).unwrap();
        let mut v = view_for(&b, 4, 4);
        v.color_mode = ColorMode::Solid(Rgb::BLACK);
        let (r, stats) = render_raster(&b, &v).unwrap();
        assert_eq!(stats.dots_drawn, 1);
        assert_eq!(r.pixel(2, 2), [0.0; 3]);
        assert_eq!(r.pixel(0, 0), [1.0; 3]);
        let png = render(&b, &v).unwrap();
        assert_eq!(&png[1..4], b"PNG");
    }

    #[test]
    fn zoomed_viewport_skips_points() {
        let d = synth::from_timestamps("d", &[("a", vec![1]), ("b", vec![2])]);
        let b = assemble_bundle(&d, &BundleOptions::default()).unwrap();
        let mut v = view_for(&b, 8, 8);
        v.viewport = Viewport {
            x0: 0.0,
            x1: 0.5,
            y0: 0.0,
            y1: 1.0,
        };
        assert_eq!(render_raster(&b, &v).unwrap().1.dots_drawn, 1);
    }
}
