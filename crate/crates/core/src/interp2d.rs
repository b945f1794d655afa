//! Two-dimensional extension on row-like grids.
//!
//! A row-like grid is a stack of horizontal knot lines, each with its own set
//! of abscissae. The bicubic extension is the composition `l_y ∘ l_x`: the
//! 1D method runs along every row in the y-neighborhood of the target point,
//! then once more across those row values in y.
//!
//! Catmull-Rom (regular grids only) and the identity extension (the raster
//! itself) are provided as baselines.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid_io::RectRaster;
use crate::interp1d::{extend_raw, Knots1D, Method};

/// One knot line `y = y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub y: f64,
    pub knots: Knots1D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowLikeGrid {
    rows: Vec<GridRow>,
    ys: Vec<f64>,
    /// Raster rows (0-based, top first) discarded for having < 2 knots.
    dropped_rows: Vec<usize>,
}

impl RowLikeGrid {
    /// Rows must be given with strictly increasing `y`.
    pub fn new(rows: Vec<GridRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooSparse(format!("{} usable rows, 2 required", rows.len())));
        }
        if let Some(w) = rows.windows(2).find(|w| w[1].y <= w[0].y) {
            return Err(Error::InvalidKnots(format!(
                "row ordinates not increasing at {} -> {}",
                w[0].y, w[1].y
            )));
        }
        if let Some(r) = rows.iter().find(|r| !r.y.is_finite()) {
            return Err(Error::InvalidKnots(format!("non-finite row ordinate {}", r.y)));
        }
        let ys = rows.iter().map(|r| r.y).collect();
        Ok(Self { rows, ys, dropped_rows: Vec::new() })
    }

    pub fn rows(&self) -> &[GridRow] {
        &self.rows
    }

    pub fn dropped_rows(&self) -> &[usize] {
        &self.dropped_rows
    }

    /// Rows with fewer than four knots, where the x-pass falls back to a
    /// quadratic or a line.
    pub fn short_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.knots.len() < 4).count()
    }

    pub fn knot_count(&self) -> usize {
        self.rows.iter().map(|r| r.knots.len()).sum()
    }

    fn row_value(&self, m: usize, x: f64, method: Method) -> f64 {
        let k = &self.rows[m].knots;
        extend_raw(k.xs(), k.fs(), x, method)
    }

    /// Value of the 2D extension at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64, method: Method) -> f64 {
        let ys = &self.ys;
        let m = ys.len();
        let (lo, hi) = if m < 4 {
            (0, m - 1)
        } else if y < ys[0] {
            (0, 3)
        } else if y > ys[m - 1] {
            (m - 4, m - 1)
        } else {
            match ys.binary_search_by(|v| v.total_cmp(&y)) {
                Ok(j) if method == Method::Eno => return self.row_value(j, x, method),
                // both one-sided limits need S_{j-1} ∪ S_j
                Ok(j) => (j.saturating_sub(3), (j + 3).min(m - 1)),
                Err(pos) => {
                    let k = pos - 1;
                    (k.saturating_sub(2), (k + 3).min(m - 1))
                }
            }
        };
        let mut fvals = [0.0; 7];
        for (slot, row) in (lo..=hi).enumerate() {
            fvals[slot] = self.row_value(row, x, method);
        }
        extend_raw(&ys[lo..=hi], &fvals[..=hi - lo], y, method)
    }
}

/// Knots at the centers of all non-NODATA cells, one grid row per raster
/// row. Rows left with fewer than two knots are dropped.
pub fn build_row_like_grid(raster: &RectRaster) -> Result<RowLikeGrid> {
    let mut rows = Vec::with_capacity(raster.nrows);
    let mut dropped = Vec::new();
    for row in (0..raster.nrows).rev() {
        let mut xs = Vec::with_capacity(raster.ncols);
        let mut fs = Vec::with_capacity(raster.ncols);
        for col in 0..raster.ncols {
            if let Some(v) = raster.data(col, row) {
                xs.push(raster.cell_center(col, row).0);
                fs.push(v);
            }
        }
        if xs.len() < 2 {
            if !xs.is_empty() {
                log::warn!("raster row {row} has a single valid cell and is dropped");
            }
            dropped.push(row);
            continue;
        }
        let y = raster.cell_center(0, row).1;
        rows.push(GridRow { y, knots: Knots1D::new(xs, fs)? });
    }
    dropped.reverse();
    let mut grid = RowLikeGrid::new(rows).map_err(|e| match e {
        Error::TooSparse(msg) => Error::TooSparse(format!("raster has {msg}")),
        other => other,
    })?;
    grid.dropped_rows = dropped;
    Ok(grid)
}

/// Evaluates the bicubic ENO or OF extension at `(x, y)`.
pub fn extend_2d(grid: &RowLikeGrid, x: f64, y: f64, method: Method) -> f64 {
    grid.eval(x, y, method)
}

/// Separable Catmull-Rom spline on a regular rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrsSurface {
    x0: f64,
    dx: f64,
    nx: usize,
    y0: f64,
    dy: f64,
    ny: usize,
    /// Row-major, y ascending.
    values: Vec<f64>,
}

fn uniform_step(v: &[f64], axis: &str) -> Result<f64> {
    let step = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    for (a, w) in v.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs() {
            return Err(Error::IrregularGrid(format!("{axis} spacing not uniform at knot {a}")));
        }
    }
    Ok(step)
}

impl CrsSurface {
    pub fn new(grid: &RowLikeGrid) -> Result<Self> {
        let first = grid.rows[0].knots.xs();
        for (j, row) in grid.rows.iter().enumerate() {
            if row.knots.xs() != first {
                return Err(Error::IrregularGrid(format!("row {j} has a different knot set")));
            }
        }
        let dx = uniform_step(first, "x")?;
        let dy = uniform_step(&grid.ys, "y")?;
        let values = grid.rows.iter().flat_map(|r| r.knots.fs().iter().copied()).collect();
        Ok(Self {
            x0: first[0],
            dx,
            nx: first.len(),
            y0: grid.ys[0],
            dy,
            ny: grid.ys.len(),
            values,
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (ky, ty) = segment((y - self.y0) / self.dy, self.ny);
        let mut col = [0.0; 4];
        let rows = stencil_range(ky, self.ny);
        for (slot, j) in rows.clone().enumerate() {
            let row = &self.values[j * self.nx..(j + 1) * self.nx];
            let (kx, tx) = segment((x - self.x0) / self.dx, self.nx);
            col[slot] = hermite(row, kx, tx);
        }
        let local = &col[..rows.len()];
        hermite(local, ky - rows.start, ty)
    }
}

/// Segment index and local parameter for a grid coordinate `u`; outside
/// the knot range the boundary segment is extended.
fn segment(u: f64, n: usize) -> (usize, f64) {
    let k = (u.floor().max(0.0) as usize).min(n - 2);
    (k, u - k as f64)
}

fn stencil_range(k: usize, n: usize) -> std::ops::Range<usize> {
    k.saturating_sub(1)..(k + 3).min(n)
}

/// Cubic Hermite on segment `k` of `f` with Catmull-Rom tangents and
/// one-sided tangents at the ends.
fn hermite(f: &[f64], k: usize, t: f64) -> f64 {
    let n = f.len();
    let tangent = |i: usize| {
        if i == 0 {
            f[1] - f[0]
        } else if i == n - 1 {
            f[n - 1] - f[n - 2]
        } else {
            0.5 * (f[i + 1] - f[i - 1])
        }
    };
    let (p0, p1) = (f[k], f[k + 1]);
    let (m0, m1) = (tangent(k), tangent(k + 1));
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * m1
}

/// Catmull-Rom value at `(x, y)`; fails on irregular grids.
pub fn extend_crs(grid: &RowLikeGrid, x: f64, y: f64) -> Result<f64> {
    Ok(CrsSurface::new(grid)?.eval(x, y))
}

/// Value of the raster cell containing `(x, y)` (may be the NODATA sentinel).
pub fn extend_id(raster: &RectRaster, x: f64, y: f64) -> Result<f64> {
    raster
        .cell_at(x, y)
        .map(|(col, row)| raster.get(col, row))
        .ok_or(Error::OutOfBounds { x, y })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtensionMethod {
    Eno,
    Of,
    Crs,
    Id,
}

impl ExtensionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Eno => "eno",
            Self::Of => "of",
            Self::Crs => "crs",
            Self::Id => "id",
        }
    }
}

impl FromStr for ExtensionMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eno" => Ok(Self::Eno),
            "of" => Ok(Self::Of),
            "crs" => Ok(Self::Crs),
            "id" => Ok(Self::Id),
            other => Err(format!("unknown method {other:?} (expected eno, of, crs or id)")),
        }
    }
}

/// An everywhere-defined extension built from a square raster.
#[derive(Debug, Clone)]
pub enum Surface {
    Cubic { grid: RowLikeGrid, method: Method },
    CatmullRom(CrsSurface),
    Identity(RectRaster),
}

impl Surface {
    pub fn build(raster: &RectRaster, method: ExtensionMethod) -> Result<Self> {
        Ok(match method {
            ExtensionMethod::Eno => Self::Cubic { grid: build_row_like_grid(raster)?, method: Method::Eno },
            ExtensionMethod::Of => Self::Cubic { grid: build_row_like_grid(raster)?, method: Method::Of },
            ExtensionMethod::Crs => Self::CatmullRom(CrsSurface::new(&build_row_like_grid(raster)?)?),
            ExtensionMethod::Id => Self::Identity(raster.clone()),
        })
    }

    /// Extension value, or `None` where it is undefined (identity outside
    /// the raster or on NODATA cells).
    pub fn value(&self, x: f64, y: f64) -> Option<f64> {
        match self {
            Self::Cubic { grid, method } => Some(grid.eval(x, y, *method)),
            Self::CatmullRom(crs) => Some(crs.eval(x, y)),
            Self::Identity(r) => r.cell_at(x, y).and_then(|(c, row)| r.data(c, row)),
        }
    }

    pub fn row_like_grid(&self) -> Option<&RowLikeGrid> {
        match self {
            Self::Cubic { grid, .. } => Some(grid),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn raster(ncols: usize, nrows: usize, values: Vec<f64>) -> RectRaster {
        RectRaster::new(ncols, nrows, 0.0, 0.0, 1.0, -9999.0, values).unwrap()
    }

    #[test]
    fn centers_of_two_by_two() {
        let g = build_row_like_grid(&raster(2, 2, vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(g.rows().len(), 2);
        assert_eq!(g.rows()[0].y, 0.5);
        assert_eq!(g.rows()[1].y, 1.5);
        assert_eq!(g.rows()[0].knots.xs(), &[0.5, 1.5]);
        // bottom raster row comes first
        assert_eq!(g.rows()[0].knots.fs(), &[3.0, 4.0]);
    }

    #[test]
    fn holes_are_removed() {
        let mut v = vec![1.0; 9];
        v[4] = -9999.0;
        let g = build_row_like_grid(&raster(3, 3, v)).unwrap();
        assert_eq!(g.rows()[1].knots.xs(), &[0.5, 2.5]);

        let mut v = vec![1.0; 9];
        v[3..6].fill(-9999.0);
        let g = build_row_like_grid(&raster(3, 3, v)).unwrap();
        assert_eq!(g.rows().len(), 2);
        assert_eq!(g.dropped_rows(), &[1]);

        let mut v = vec![-9999.0; 9];
        v[0] = 1.0;
        v[1] = 1.0;
        assert!(matches!(build_row_like_grid(&raster(3, 3, v)), Err(Error::TooSparse(_))));
    }

    #[test]
    fn reproduces_bicubic_monomial() {
        let r = RectRaster::from_fn(10, 10, -2.0, -1.5, 0.37, |x, y| x.powi(3) * y.powi(3)).unwrap();
        let g = build_row_like_grid(&r).unwrap();
        let b = r.bounds();
        for a in 0..17 {
            for c in 0..13 {
                let x = b.xmin - 0.3 + a as f64 * 0.27;
                let y = b.ymin - 0.2 + c as f64 * 0.33;
                let want = x.powi(3) * y.powi(3);
                for m in [Method::Eno, Method::Of] {
                    let got = extend_2d(&g, x, y, m);
                    assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{m:?} at ({x},{y}): {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn eno_hits_every_knot() {
        let r = RectRaster::from_fn(7, 6, 0.0, 0.0, 1.0, |x, y| (x * 1.3).sin() + (y * y * 0.2).cos()).unwrap();
        let g = build_row_like_grid(&r).unwrap();
        for row in g.rows() {
            for (&x, &f) in row.knots.xs().iter().zip(row.knots.fs()) {
                assert_eq!(extend_2d(&g, x, row.y, Method::Eno), f);
            }
        }
    }

    #[test]
    fn crs_constant_and_knots() {
        let r = RectRaster::from_fn(5, 4, 0.0, 0.0, 2.0, |_, _| 3.5).unwrap();
        let crs = CrsSurface::new(&build_row_like_grid(&r).unwrap()).unwrap();
        for (x, y) in [(0.1, 0.1), (5.3, 7.9), (-1.0, 9.0), (3.0, 3.0)] {
            assert_relative_eq!(crs.eval(x, y), 3.5, max_relative = 1e-14);
        }
        let r = RectRaster::from_fn(6, 5, 0.0, 0.0, 1.0, |x, y| (x * y).sin() + x).unwrap();
        let g = build_row_like_grid(&r).unwrap();
        let crs = CrsSurface::new(&g).unwrap();
        for row in g.rows() {
            for (&x, &f) in row.knots.xs().iter().zip(row.knots.fs()) {
                assert_relative_eq!(crs.eval(x, row.y), f, max_relative = 1e-14, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn crs_rejects_holes() {
        let mut v = vec![1.0; 16];
        v[5] = -9999.0;
        let g = build_row_like_grid(&raster(4, 4, v)).unwrap();
        assert!(matches!(CrsSurface::new(&g), Err(Error::IrregularGrid(_))));
    }

    #[test]
    fn identity_lookup() {
        let r = raster(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(extend_id(&r, 0.5, 1.5).unwrap(), 1.0);
        assert_eq!(extend_id(&r, 2.5, 0.5).unwrap(), 6.0);
        assert_eq!(extend_id(&r, 1.0 + 1e-12, 0.5).unwrap(), 5.0);
        assert_eq!(extend_id(&r, 1.0 - 1e-12, 0.5).unwrap(), 4.0);
        assert!(matches!(extend_id(&r, 3.5, 0.5), Err(Error::OutOfBounds { .. })));
        // linear data is not reproduced off-center
        let lin = RectRaster::from_fn(3, 1, 0.0, 0.0, 1.0, |x, _| x).unwrap();
        assert_ne!(extend_id(&lin, 0.9, 0.5).unwrap(), 0.9);
    }
}
