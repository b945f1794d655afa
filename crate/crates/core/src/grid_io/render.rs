//! Heatmap rendering of square and hexagonal rasters to SVG or binary PPM.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{HexRasterFile, RectRaster};
use crate::hexgrid::CellId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Svg,
    Ppm,
}

impl FromStr for ImageFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Ok(Self::Svg),
            "ppm" => Ok(Self::Ppm),
            other => Err(format!("unknown image format {other:?} (expected svg or ppm)")),
        }
    }
}

/// Linear color ramp through evenly spaced RGB stops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    stops: Vec<[u8; 3]>,
}

impl Palette {
    pub fn new(stops: Vec<[u8; 3]>) -> Option<Self> {
        (!stops.is_empty()).then_some(Self { stops })
    }

    pub fn gray() -> Self {
        Self { stops: vec![[0, 0, 0], [255, 255, 255]] }
    }

    pub fn terrain() -> Self {
        Self {
            stops: vec![
                [51, 102, 153],
                [0, 153, 102],
                [153, 204, 102],
                [230, 217, 140],
                [153, 102, 51],
                [255, 255, 255],
            ],
        }
    }

    pub fn blues() -> Self {
        Self { stops: vec![[247, 251, 255], [107, 174, 214], [8, 48, 107]] }
    }

    /// Color for `t` in `[0, 1]`; values outside are clamped.
    pub fn color(&self, t: f64) -> [u8; 3] {
        if self.stops.len() == 1 {
            return self.stops[0];
        }
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        let span = (self.stops.len() - 1) as f64;
        let pos = t * span;
        let k = (pos.floor() as usize).min(self.stops.len() - 2);
        let f = pos - k as f64;
        let (a, b) = (self.stops[k], self.stops[k + 1]);
        let mut out = [0u8; 3];
        for c in 0..3 {
            out[c] = (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8;
        }
        out
    }
}

impl FromStr for Palette {
    type Err = String;

    /// `gray`, `terrain`, `blues`, or a comma-separated list of `#rrggbb` stops.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gray" | "grey" => return Ok(Self::gray()),
            "terrain" => return Ok(Self::terrain()),
            "blues" => return Ok(Self::blues()),
            _ => {}
        }
        let stops = s
            .split(',')
            .map(|tok| parse_hex_color(tok.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(stops).ok_or_else(|| "empty palette".to_string())
    }
}

fn parse_hex_color(tok: &str) -> Result<[u8; 3], String> {
    let hex = tok.strip_prefix('#').unwrap_or(tok);
    if hex.len() != 6 {
        return Err(format!("bad color {tok:?}, expected #rrggbb"));
    }
    let mut out = [0u8; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        *slot = u8::from_str_radix(&hex[2 * c..2 * c + 2], 16)
            .map_err(|_| format!("bad color {tok:?}, expected #rrggbb"))?;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub palette: Palette,
    pub format: ImageFormat,
    /// Explicit value range; defaults to the data min/max.
    pub range: Option<(f64, f64)>,
    /// Color of NODATA cells.
    pub gap_color: [u8; 3],
    /// Pixels per square cell (PPM of square rasters).
    pub pixels_per_cell: usize,
    /// Image width in pixels (SVG and hexagonal PPM).
    pub width_px: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            palette: Palette::terrain(),
            format: ImageFormat::Svg,
            range: None,
            gap_color: [255, 0, 255],
            pixels_per_cell: 8,
            width_px: 800,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rendered {
    pub bytes: Vec<u8>,
    /// Set when the value range was degenerate and a single color was used.
    pub warning: Option<String>,
}

struct ColorMap<'a> {
    palette: &'a Palette,
    lo: f64,
    hi: f64,
}

impl ColorMap<'_> {
    fn color(&self, v: f64) -> [u8; 3] {
        if self.hi > self.lo {
            self.palette.color((v - self.lo) / (self.hi - self.lo))
        } else {
            self.palette.color(0.5)
        }
    }
}

fn color_map<'a>(
    opts: &'a RenderOptions,
    data: impl Iterator<Item = f64>,
) -> (ColorMap<'a>, Option<String>) {
    let (lo, hi) = match opts.range {
        Some(range) => range,
        None => data.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v))),
    };
    let warning = if !(lo < hi) {
        log::warn!("degenerate value range [{lo}, {hi}], rendering a single color");
        Some(format!("degenerate value range [{lo}, {hi}]"))
    } else {
        None
    };
    (ColorMap { palette: &opts.palette, lo, hi }, warning)
}

fn svg_color(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn ppm(width: usize, height: usize, pixels: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(pixels.len() * 3);
    for p in pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn render_rect(raster: &RectRaster, opts: &RenderOptions) -> Rendered {
    let data = raster.values.iter().copied().filter(|&v| !raster.is_nodata(v));
    let (cmap, warning) = color_map(opts, data);
    let cell_color = |col: usize, row: usize| match raster.data(col, row) {
        Some(v) => cmap.color(v),
        None => opts.gap_color,
    };

    let bytes = match opts.format {
        ImageFormat::Svg => {
            let px = opts.width_px as f64 / raster.ncols as f64;
            let (w, h) = (opts.width_px as f64, px * raster.nrows as f64);
            let mut svg = String::new();
            let _ = writeln!(
                svg,
                r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
            );
            for row in 0..raster.nrows {
                for col in 0..raster.ncols {
                    let (x0, y0) = (col as f64 * px, row as f64 * px);
                    let (x1, y1) = (x0 + px, y0 + px);
                    let _ = writeln!(
                        svg,
                        r#"<polygon points="{x0},{y0} {x1},{y0} {x1},{y1} {x0},{y1}" fill="{}"/>"#,
                        svg_color(cell_color(col, row))
                    );
                }
            }
            svg.push_str("</svg>\n");
            svg.into_bytes()
        }
        ImageFormat::Ppm => {
            let s = opts.pixels_per_cell.max(1);
            let (w, h) = (raster.ncols * s, raster.nrows * s);
            let mut pixels = Vec::with_capacity(w * h);
            for py in 0..h {
                for px in 0..w {
                    pixels.push(cell_color(px / s, py / s));
                }
            }
            ppm(w, h, &pixels)
        }
    };
    Rendered { bytes, warning }
}

pub fn render_hex(hex: &HexRasterFile, opts: &RenderOptions) -> Rendered {
    let grid = hex.grid();
    let data = hex.values.iter().copied().filter(|&v| !hex.is_nodata(v));
    let (cmap, warning) = color_map(opts, data);
    let cell_color = |id: CellId| {
        let v = hex.values[grid.index(id)];
        if hex.is_nodata(v) {
            opts.gap_color
        } else {
            cmap.color(v)
        }
    };

    // world extent of the tessellation
    let half_w = 0.5 * grid.cell_width();
    let even_shift = if grid.nrows() > 1 { half_w } else { 0.0 };
    let xmin = grid.x0() - half_w - even_shift;
    let xmax = grid.x0() + (grid.ncols() - 1) as f64 * grid.cell_width() + half_w;
    let ymax = grid.y0() + grid.radius();
    let ymin = grid.y0() - (grid.nrows() - 1) as f64 * grid.row_pitch() - grid.radius();
    let scale = opts.width_px as f64 / (xmax - xmin);
    let (w, h) = (opts.width_px as f64, ((ymax - ymin) * scale).ceil());

    let bytes = match opts.format {
        ImageFormat::Svg => {
            let mut svg = String::new();
            let _ = writeln!(
                svg,
                r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
            );
            for id in grid.cells() {
                let verts = grid.vertices(id).expect("cell in range");
                let points: Vec<String> = verts
                    .iter()
                    .map(|&(x, y)| format!("{:.3},{:.3}", (x - xmin) * scale, (ymax - y) * scale))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polygon points="{}" fill="{}"/>"#,
                    points.join(" "),
                    svg_color(cell_color(id))
                );
            }
            svg.push_str("</svg>\n");
            svg.into_bytes()
        }
        ImageFormat::Ppm => {
            let (wp, hp) = (opts.width_px.max(1), (h as usize).max(1));
            let mut pixels = Vec::with_capacity(wp * hp);
            for py in 0..hp {
                let y = ymax - (py as f64 + 0.5) / scale;
                for px in 0..wp {
                    let x = xmin + (px as f64 + 0.5) / scale;
                    pixels.push(match grid.locate(x, y) {
                        Some(id) => cell_color(id),
                        None => [255, 255, 255],
                    });
                }
            }
            ppm(wp, hp, &pixels)
        }
    };
    Rendered { bytes, warning }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex1(v: f64) -> HexRasterFile {
        HexRasterFile { ncols: 1, nrows: 1, x0: 0.0, y0: 0.0, radius: 1.0, nodata: -9999.0, values: vec![v] }
    }

    #[test]
    fn single_hex_is_one_hexagon() {
        let out = render_hex(&hex1(7.0), &RenderOptions::default());
        let svg = String::from_utf8(out.bytes).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 1);
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split_whitespace().count(), 6);
    }

    #[test]
    fn rect_ppm_has_four_blocks() {
        let r = RectRaster::new(2, 2, 0.0, 0.0, 1.0, -9999.0, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let opts = RenderOptions {
            format: ImageFormat::Ppm,
            palette: Palette::gray(),
            pixels_per_cell: 3,
            ..Default::default()
        };
        let out = render_rect(&r, &opts);
        let header = b"P6\n6 6\n255\n";
        assert_eq!(&out.bytes[..header.len()], header);
        let body = &out.bytes[header.len()..];
        assert_eq!(body.len(), 6 * 6 * 3);
        let px = |x: usize, y: usize| &body[(y * 6 + x) * 3..(y * 6 + x) * 3 + 3];
        let mut colors: Vec<&[u8]> = vec![px(0, 0), px(3, 0), px(0, 3), px(3, 3)];
        assert_eq!(px(0, 0), [0, 0, 0]);
        assert_eq!(px(5, 5), [255, 255, 255]);
        assert_eq!(px(2, 2), px(0, 0));
        colors.dedup();
        assert_eq!(colors.len(), 4);
    }

    #[test]
    fn constant_raster_is_uniform_with_warning() {
        let r = RectRaster::new(3, 2, 0.0, 0.0, 1.0, -9999.0, vec![4.0; 6]).unwrap();
        let out = render_rect(&r, &RenderOptions { format: ImageFormat::Ppm, ..Default::default() });
        assert!(out.warning.is_some());
        let body = &out.bytes[out.bytes.len() - 24 * 16 * 3..];
        assert!(body.chunks(3).all(|c| c == &body[..3]));
    }

    #[test]
    fn nodata_uses_gap_color_and_counts_cells() {
        let r = RectRaster::new(2, 1, 0.0, 0.0, 1.0, -9999.0, vec![-9999.0, 1.0]).unwrap();
        let svg = String::from_utf8(render_rect(&r, &RenderOptions::default()).bytes).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert!(svg.contains("#ff00ff"));

        let hex = HexRasterFile {
            ncols: 4,
            nrows: 3,
            x0: 0.0,
            y0: 0.0,
            radius: 2.0,
            nodata: -1.0,
            values: (0..12).map(|k| if k == 5 { -1.0 } else { k as f64 }).collect(),
        };
        let svg = String::from_utf8(render_hex(&hex, &RenderOptions::default()).bytes).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 12);
        assert_eq!(svg.matches("#ff00ff").count(), 1);
    }

    #[test]
    fn palette_parsing() {
        let p: Palette = "#000000,#ff0000".parse().unwrap();
        assert_eq!(p.color(1.0), [255, 0, 0]);
        assert_eq!(p.color(0.5), [128, 0, 0]);
        assert!("#12345".parse::<Palette>().is_err());
        assert_eq!("Gray".parse::<Palette>().unwrap(), Palette::gray());
    }
}
