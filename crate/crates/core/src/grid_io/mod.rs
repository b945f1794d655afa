//! Raster containers and their on-disk formats.
//!
//! Two raster kinds live here: [`RectRaster`], the square-cell raster read
//! from ESRI ASCII grids, and [`HexRasterFile`], the hexagonal raster with its
//! own ESRI-like text format. Both serialize numbers with the shortest decimal
//! string that parses back to the same `f64`, so write/parse round trips are
//! bit-exact.

mod esri;
mod hexfile;
mod render;

pub use esri::{parse_esri_ascii, write_esri_ascii};
pub use hexfile::{read_hex_raster, write_hex_raster};
pub use render::{render_hex, render_rect, ImageFormat, Palette, RenderOptions, Rendered};

use crate::error::{Error, Result};
use crate::hexgrid::HexGrid;

/// NODATA sentinel used when a grid file does not declare one.
pub const DEFAULT_NODATA: f64 = -9999.0;

/// Axis-aligned rectangle in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let all_finite = [xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite());
        if !all_finite || xmax <= xmin || ymax <= ymin {
            return Err(Error::EmptyDomain(format!(
                "bounds ({xmin}, {ymin}, {xmax}, {ymax}) do not enclose a positive area"
            )));
        }
        Ok(Self { xmin, ymin, xmax, ymax })
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }
}

/// Square-cell raster with row-major values, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct RectRaster {
    pub ncols: usize,
    pub nrows: usize,
    /// x of the lower-left corner.
    pub xll: f64,
    /// y of the lower-left corner.
    pub yll: f64,
    pub cellsize: f64,
    pub nodata: f64,
    pub values: Vec<f64>,
}

impl RectRaster {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let raster = Self { ncols, nrows, xll, yll, cellsize, nodata, values };
        raster.validate()?;
        Ok(raster)
    }

    /// Builds a raster by evaluating `f` at every cell center.
    pub fn from_fn(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(ncols * nrows);
        for row in 0..nrows {
            let y = yll + (nrows - row) as f64 * cellsize - 0.5 * cellsize;
            for col in 0..ncols {
                let x = xll + (col as f64 + 0.5) * cellsize;
                values.push(f(x, y));
            }
        }
        Self::new(ncols, nrows, xll, yll, cellsize, DEFAULT_NODATA, values)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ncols == 0 || self.nrows == 0 {
            return Err(Error::InvalidRaster("ncols and nrows must be at least 1".into()));
        }
        if !(self.cellsize > 0.0 && self.cellsize.is_finite()) {
            return Err(Error::InvalidRaster(format!("cellsize {} must be positive", self.cellsize)));
        }
        if !self.xll.is_finite() || !self.yll.is_finite() || !self.nodata.is_finite() {
            return Err(Error::InvalidRaster("origin and nodata must be finite".into()));
        }
        let expected = self.ncols * self.nrows;
        if self.values.len() != expected {
            return Err(Error::CountMismatch { expected, found: self.values.len() });
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!("non-finite cell value {v}")));
        }
        Ok(())
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata
    }

    /// Value at 0-based `(col, row)`, row 0 being the top row.
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    /// Value at `(col, row)`, or `None` for NODATA cells.
    pub fn data(&self, col: usize, row: usize) -> Option<f64> {
        let v = self.get(col, row);
        (!self.is_nodata(v)).then_some(v)
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        let x = self.xll + (col as f64 + 0.5) * self.cellsize;
        let y = self.yll + (self.nrows - row) as f64 * self.cellsize - 0.5 * self.cellsize;
        (x, y)
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            xmin: self.xll,
            ymin: self.yll,
            xmax: self.xll + self.ncols as f64 * self.cellsize,
            ymax: self.yll + self.nrows as f64 * self.cellsize,
        }
    }

    /// 0-based `(col, row)` of the cell containing `(x, y)`. Points on the
    /// outer boundary belong to the adjacent edge cell.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !self.bounds().contains(x, y) {
            return None;
        }
        let ymax = self.yll + self.nrows as f64 * self.cellsize;
        let col = ((x - self.xll) / self.cellsize).floor() as usize;
        let row = ((ymax - y) / self.cellsize).floor() as usize;
        Some((col.min(self.ncols - 1), row.min(self.nrows - 1)))
    }

    pub fn same_geometry(&self, other: &RectRaster) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && self.xll == other.xll
            && self.yll == other.yll
            && self.cellsize == other.cellsize
    }
}

/// Hexagonal raster: tessellation parameters plus one value per cell,
/// row-major with row 1 (the top row) first.
#[derive(Debug, Clone, PartialEq)]
pub struct HexRasterFile {
    /// Cells per row (N).
    pub ncols: usize,
    /// Rows (M).
    pub nrows: usize,
    /// Center of the upper-left cell.
    pub x0: f64,
    pub y0: f64,
    /// Circumradius.
    pub radius: f64,
    pub nodata: f64,
    pub values: Vec<f64>,
}

impl HexRasterFile {
    pub fn new(grid: &HexGrid, nodata: f64, values: Vec<f64>) -> Result<Self> {
        let hex = Self {
            ncols: grid.ncols(),
            nrows: grid.nrows(),
            x0: grid.x0(),
            y0: grid.y0(),
            radius: grid.radius(),
            nodata,
            values,
        };
        hex.validate()?;
        Ok(hex)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ncols == 0 || self.nrows == 0 {
            return Err(Error::InvalidRaster("ncols and nrows must be at least 1".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidRaster(format!("radius {} must be positive", self.radius)));
        }
        if !self.x0.is_finite() || !self.y0.is_finite() || !self.nodata.is_finite() {
            return Err(Error::InvalidRaster("origin and nodata must be finite".into()));
        }
        let expected = self.ncols * self.nrows;
        if self.values.len() != expected {
            return Err(Error::CountMismatch { expected, found: self.values.len() });
        }
        Ok(())
    }

    pub fn grid(&self) -> HexGrid {
        HexGrid::new(self.ncols, self.nrows, self.radius, self.x0, self.y0)
            .expect("validated hex raster has a valid grid")
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata
    }
}

/// Shortest decimal representation that parses back to the same `f64`.
pub(crate) fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Splits a grid file into `(key, value)` header pairs and the body tokens.
/// The header ends at the first line whose leading token is numeric.
pub(crate) fn split_header(text: &str) -> (Vec<(String, String, usize)>, Vec<&str>) {
    let mut header = Vec::new();
    let mut body = Vec::new();
    let mut in_header = true;
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_ascii_whitespace().peekable();
        let Some(first) = tokens.peek().copied() else {
            continue;
        };
        if in_header && first.parse::<f64>().is_err() {
            let key = first.to_ascii_lowercase();
            tokens.next();
            let rest: Vec<&str> = tokens.collect();
            header.push((key, rest.join(" "), lineno + 1));
            continue;
        }
        in_header = false;
        body.extend(tokens);
    }
    (header, body)
}

pub(crate) fn parse_body(tokens: &[&str], expected: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(expected);
    for (position, token) in tokens.iter().enumerate() {
        let v = token.parse::<f64>().map_err(|_| Error::NonNumericToken {
            token: token.to_string(),
            position,
        })?;
        values.push(v);
    }
    if values.len() != expected {
        return Err(Error::CountMismatch { expected, found: values.len() });
    }
    Ok(values)
}

pub(crate) fn header_number<T: std::str::FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| Error::MalformedHeader(format!("line {line}: cannot parse {key} value {raw:?}")))
}

pub(crate) fn write_rows(out: &mut String, values: &[f64], ncols: usize) {
    for row in values.chunks(ncols) {
        let line: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}
