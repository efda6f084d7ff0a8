//! PNG significance maps and SVG streamline overlays.

use std::fmt::Write as _;

use base64::Engine as _;
use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder};
use sss_core::{Category, CurvatureResult, ImageGrid, InteriorRegion, SlopeResult, Streamline};

use crate::error::{CliError, CliResult};

pub type Rgb = [u8; 3];

/// Category colours. `None` is never painted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderPalette {
    pub peak: Rgb,
    pub hole: Rgb,
    pub saddle: Rgb,
    pub ridge: Rgb,
    pub valley: Rgb,
    /// Streamlines and significant-gradient pixels.
    pub streamline: Rgb,
}

impl Default for RenderPalette {
    fn default() -> Self {
        RenderPalette {
            peak: [0, 0, 255],
            hole: [255, 255, 0],
            saddle: [255, 0, 0],
            ridge: [128, 0, 128],
            valley: [255, 165, 0],
            streamline: [0, 200, 0],
        }
    }
}

impl RenderPalette {
    pub fn color(&self, c: Category) -> Option<Rgb> {
        match c {
            Category::None => None,
            Category::Peak => Some(self.peak),
            Category::Hole => Some(self.hole),
            Category::Saddle => Some(self.saddle),
            Category::Ridge => Some(self.ridge),
            Category::Valley => Some(self.valley),
        }
    }

    fn hex(c: Rgb) -> String {
        format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
    }
}

/// What gets painted over the background.
#[derive(Debug, Clone, Copy)]
pub enum MapLayer<'a> {
    Curvature(&'a CurvatureResult),
    /// Pixels with a significant gradient.
    Slope(&'a SlopeResult),
}

impl MapLayer<'_> {
    fn region(&self) -> &InteriorRegion {
        match self {
            MapLayer::Curvature(r) => &r.region,
            MapLayer::Slope(r) => &r.region,
        }
    }

    fn color(&self, palette: &RenderPalette, i: usize, j: usize) -> Option<Rgb> {
        match self {
            MapLayer::Curvature(r) => palette.color(r.category[[i, j]]),
            MapLayer::Slope(r) => r.significant[[i, j]].then_some(palette.streamline),
        }
    }
}

/// Background rescaled to 0–255 over its own range; flat images map to
/// mid-grey.
fn grey_levels(bg: &ImageGrid) -> Vec<u8> {
    let v = bg.values();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = hi - lo;
    v.iter().map(|&x| if span > 0.0 { ((x - lo) / span * 255.0).round() as u8 } else { 128 }).collect()
}

fn encode_png(data: &[u8], width: usize, height: usize, color: ExtendedColorType) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(data, width as u32, height as u32, color)
        .map_err(|e| CliError::Encode(e.to_string()))?;
    Ok(out)
}

/// Greyscale background with the layer painted over the interior.
pub fn render_map(layer: MapLayer<'_>, palette: &RenderPalette, background: &ImageGrid) -> CliResult<Vec<u8>> {
    let region = layer.region();
    if (region.rows, region.cols) != (background.rows(), background.cols()) {
        return Err(CliError::usage(format!(
            "result computed on a {}x{} image cannot be drawn on a {}x{} background",
            region.rows,
            region.cols,
            background.rows(),
            background.cols()
        )));
    }
    let cols = background.cols();
    let mut rgb: Vec<u8> = grey_levels(background).into_iter().flat_map(|g| [g, g, g]).collect();
    let (gr, gc) = region.dim();
    for i in 0..gr {
        for j in 0..gc {
            if let Some(c) = layer.color(palette, i, j) {
                let (r, cc) = region.to_image(i, j);
                let k = 3 * (r * cols + cc);
                rgb[k..k + 3].copy_from_slice(&c);
            }
        }
    }
    encode_png(&rgb, cols, background.rows(), ExtendedColorType::Rgb8)
}

/// Streamlines as SVG paths over the embedded greyscale background.
/// Pixel `(r, c)` covers `[c, c+1] × [r, r+1]` in SVG user units.
pub fn render_streamlines(lines: &[Streamline], palette: &RenderPalette, background: &ImageGrid) -> CliResult<Vec<u8>> {
    let (rows, cols) = (background.rows(), background.cols());
    let png = encode_png(&grey_levels(background), cols, rows, ExtendedColorType::L8)?;
    let b64 = base64::engine::general_purpose::STANDARD.encode(png);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{cols}" height="{rows}" viewBox="0 0 {cols} {rows}">"#
    );
    let _ = writeln!(
        svg,
        r#"<image x="0" y="0" width="{cols}" height="{rows}" style="image-rendering:pixelated" href="data:image/png;base64,{b64}"/>"#
    );
    let stroke = RenderPalette::hex(palette.streamline);
    for line in lines.iter().filter(|l| l.points.len() >= 2) {
        let mut d = String::new();
        for (k, &(r, c)) in line.points.iter().enumerate() {
            let x = (c + 0.5).clamp(0.0, cols as f64);
            let y = (r + 0.5).clamp(0.0, rows as f64);
            let _ = write!(d, "{}{x:.3},{y:.3}", if k == 0 { "M" } else { " L" });
        }
        let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="0.5"/>"#);
    }
    svg.push_str("</svg>\n");
    Ok(svg.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, Array3};
    use sss_core::evt::Sidedness;
    use sss_core::grid::Order;
    use sss_core::{Termination, ThresholdSpec};

    fn background(rows: usize, cols: usize) -> ImageGrid {
        ImageGrid::new(Array2::from_shape_fn((rows, cols), |(i, j)| (i * cols + j) as f64)).unwrap()
    }

    fn curvature(region: InteriorRegion, category: Array2<Category>) -> CurvatureResult {
        let (r, c) = region.dim();
        CurvatureResult {
            region,
            angles: vec![0.0],
            stats: vec![Array2::zeros((r, c))],
            signs: Array3::zeros((r, c, 1)),
            category,
            threshold: ThresholdSpec::resolve(0.05, 1, Order::Curvature, 10, 2.0, Sidedness::TwoSided).unwrap(),
            sigma_used: 1.0,
        }
    }

    fn decode(png: &[u8]) -> image::RgbImage {
        image::load_from_memory(png).unwrap().to_rgb8()
    }

    #[test]
    fn all_none_is_grey_only() {
        let region = InteriorRegion::with_margin(12, 10, 2).unwrap();
        let res = curvature(region, Array2::from_elem((8, 6), Category::None));
        let img =
            decode(&render_map(MapLayer::Curvature(&res), &RenderPalette::default(), &background(12, 10)).unwrap());
        assert!(img.pixels().all(|p| p[0] == p[1] && p[1] == p[2]));
    }

    #[test]
    fn one_peak_is_one_blue_pixel() {
        let region = InteriorRegion::with_margin(12, 10, 2).unwrap();
        let mut cat = Array2::from_elem((8, 6), Category::None);
        cat[[3, 4]] = Category::Peak;
        let res = curvature(region, cat);
        let palette = RenderPalette::default();
        let png = render_map(MapLayer::Curvature(&res), &palette, &background(12, 10)).unwrap();
        let img = decode(&png);
        let blue: Vec<_> =
            img.enumerate_pixels().filter(|(_, _, p)| p.0 == palette.peak).map(|(x, y, _)| (y, x)).collect();
        assert_eq!(blue, vec![(5, 6)]);
        // fixed encoder settings → identical bytes
        assert_eq!(png, render_map(MapLayer::Curvature(&res), &palette, &background(12, 10)).unwrap());
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let res = curvature(InteriorRegion::with_margin(12, 10, 2).unwrap(), Array2::from_elem((8, 6), Category::None));
        assert!(render_map(MapLayer::Curvature(&res), &RenderPalette::default(), &background(10, 10)).is_err());
    }

    #[test]
    fn palette_is_injective() {
        let p = RenderPalette::default();
        let mut colors: Vec<Rgb> = Category::ALL.iter().filter_map(|&c| p.color(c)).collect();
        colors.push(p.streamline);
        let n = colors.len();
        colors.sort();
        colors.dedup();
        assert_eq!(colors.len(), n);
        assert_eq!(p.color(Category::None), None);
    }

    #[test]
    fn svg_paths() {
        let bg = background(20, 30);
        let empty = String::from_utf8(render_streamlines(&[], &RenderPalette::default(), &bg).unwrap()).unwrap();
        assert!(empty.contains("<image") && !empty.contains("<path"));

        let line =
            Streamline { points: vec![(1.0, 2.0), (2.0, 3.0), (3.5, 4.25)], terminated_by: Termination::MaxSteps };
        let svg = String::from_utf8(render_streamlines(&[line], &RenderPalette::default(), &bg).unwrap()).unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains(r#"d="M2.500,1.500 L3.500,2.500 L4.750,4.000""#), "{svg}");
        assert!(svg.contains("#00c800"));
    }
}
