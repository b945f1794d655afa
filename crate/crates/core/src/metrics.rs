//! Error measures and synthetic test data.
//!
//! Relative L1 errors are normalized by the integral of |g^r| over the same
//! region. Square/hexagon comparisons split the overlap exactly into
//! intersection polygons; extension errors split every square cell into a
//! `quad x quad` subgrid with 2x2 Gauss-Legendre nodes per subcell.

use std::fmt;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid_io::{Bounds, HexRasterFile, RectRaster, DEFAULT_NODATA};
use crate::hexgrid::{CellId, HexGrid};
use crate::interp2d::{ExtensionMethod, Surface};
use crate::porting::{hex_grid_for, port_onto, HexSizing};

pub const DEFAULT_QUAD: usize = 8;

/// A closed-form field G(x, y).
#[derive(Clone)]
pub struct AnalyticField {
    pub name: String,
    pub params: Vec<(String, f64)>,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl AnalyticField {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), params: Vec::new(), f: Arc::new(f) }
    }

    /// G(x, y; a) = a / ((1 + x^2)(1 + y^2)).
    pub fn runge(a: f64) -> Self {
        Self {
            name: "runge".into(),
            params: vec![("a".into(), a)],
            f: Arc::new(move |x, y| a / ((1.0 + x * x) * (1.0 + y * y))),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticField").field("name", &self.name).field("params", &self.params).finish()
    }
}

/// Square raster over `bounds` with `G(.; a)` sampled at cell centers.
/// The bounds must admit square cells.
pub fn runge_raster(bounds: &Bounds, ncols: usize, nrows: usize, a: f64) -> Result<RectRaster> {
    field_raster(bounds, ncols, nrows, &AnalyticField::runge(a))
}

pub fn field_raster(bounds: &Bounds, ncols: usize, nrows: usize, field: &AnalyticField) -> Result<RectRaster> {
    if ncols == 0 || nrows == 0 {
        return Err(Error::InvalidRaster("ncols and nrows must be at least 1".into()));
    }
    let dx = bounds.width() / ncols as f64;
    let dy = bounds.height() / nrows as f64;
    if (dx - dy).abs() > 1e-9 * dx.max(dy) {
        return Err(Error::InvalidRaster(format!(
            "bounds {}x{} do not give square cells for {ncols}x{nrows}",
            bounds.width(),
            bounds.height()
        )));
    }
    RectRaster::from_fn(ncols, nrows, bounds.xmin, bounds.ymin, dx, |x, y| field.eval(x, y))
}

/// Raster whose cell centers are the `(ncols + 1) x (nrows + 1)` vertices of
/// the regular `ncols x nrows` partition of `bounds`, holding `field` there.
/// The raster extends half a cell beyond `bounds` on every side.
pub fn field_raster_on_nodes(bounds: &Bounds, ncols: usize, nrows: usize, field: &AnalyticField) -> Result<RectRaster> {
    if ncols == 0 || nrows == 0 {
        return Err(Error::InvalidRaster("ncols and nrows must be at least 1".into()));
    }
    let dx = bounds.width() / ncols as f64;
    let dy = bounds.height() / nrows as f64;
    if (dx - dy).abs() > 1e-9 * dx.max(dy) {
        return Err(Error::InvalidRaster(format!(
            "bounds {}x{} do not give square cells for {ncols}x{nrows}",
            bounds.width(),
            bounds.height()
        )));
    }
    let mut values = Vec::with_capacity((ncols + 1) * (nrows + 1));
    for row in 0..=nrows {
        let y = bounds.ymax - row as f64 * dy;
        for col in 0..=ncols {
            values.push(field.eval(bounds.xmin + col as f64 * dx, y));
        }
    }
    RectRaster::new(ncols + 1, nrows + 1, bounds.xmin - 0.5 * dx, bounds.ymin - 0.5 * dx, dx, DEFAULT_NODATA, values)
}

/// Per-axis nodes (offsets from the cell center, in cell widths) and
/// weights (summing to 1) of the square-cell rule: `quad` equal
/// subintervals with two Gauss-Legendre nodes each.
fn cell_rule(quad: usize) -> Vec<(f64, f64)> {
    let q = quad.max(1);
    let gl = GaussLegendre::new(2.try_into().expect("two nodes"));
    let half = 0.5 / q as f64;
    let mut rule = Vec::with_capacity(2 * q);
    for k in 0..q {
        let center = -0.5 + (2 * k + 1) as f64 * half;
        for (t, w) in gl.iter() {
            rule.push((center + half * t, half * w));
        }
    }
    rule
}

/// Integrates the terms returned by `f(x, y, value)` over every data cell
/// of `raster`. Rows are summed in parallel and combined in a fixed order.
/// Returns the sums and the number of nodes where `f` returned a value.
fn integrate<const K: usize>(
    raster: &RectRaster,
    quad: usize,
    f: impl Fn(f64, f64, f64) -> Option<[f64; K]> + Sync,
) -> ([f64; K], usize) {
    let rule = cell_rule(quad);
    let cs = raster.cellsize;
    let area = cs * cs;
    let per_row: Vec<([f64; K], usize)> = (0..raster.nrows)
        .into_par_iter()
        .map(|row| {
            let mut acc = [0.0; K];
            let mut count = 0;
            for col in 0..raster.ncols {
                let Some(v) = raster.data(col, row) else { continue };
                let (cx, cy) = raster.cell_center(col, row);
                for &(ty, wy) in &rule {
                    for &(tx, wx) in &rule {
                        if let Some(terms) = f(cx + tx * cs, cy + ty * cs, v) {
                            let w = area * wx * wy;
                            for (a, t) in acc.iter_mut().zip(terms) {
                                *a += w * t;
                            }
                            count += 1;
                        }
                    }
                }
            }
            (acc, count)
        })
        .collect();
    let mut total = [0.0; K];
    let mut count = 0;
    for (acc, c) in per_row {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
        count += c;
    }
    (total, count)
}

type Point = (f64, f64);

/// Sutherland-Hodgman clip of a convex polygon to an axis-aligned box.
fn clip_to_box(poly: &[Point], xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Vec<Point> {
    let mut out: Vec<Point> = poly.to_vec();
    let edges: [(fn(Point) -> f64, f64); 4] =
        [(|p| p.0, xmin), (|p| -p.0, -xmax), (|p| p.1, ymin), (|p| -p.1, -ymax)];
    for (coord, bound) in edges {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        for k in 0..input.len() {
            let p = input[k];
            let q = input[(k + 1) % input.len()];
            let (dp, dq) = (coord(p) - bound, coord(q) - bound);
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            }
        }
    }
    out
}

fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let twice: f64 = (0..n).map(|k| {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        p.0 * q.1 - q.0 * p.1
    }).sum();
    0.5 * twice
}

/// Degree-5 seven-point rule on a triangle: barycentric nodes and weights.
const TRIANGLE_RULE: [(f64, f64, f64, f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225),
        (A1, B1, B1, W1),
        (B1, A1, B1, W1),
        (B1, B1, A1, W1),
        (A2, B2, B2, W2),
        (B2, A2, B2, W2),
        (B2, B2, A2, W2),
    ]
};

/// Integral of `f` over a convex polygon, fan-triangulated, each triangle
/// split into `s * s` congruent pieces with `s` chosen so that piece edges
/// do not exceed `h`.
fn integrate_polygon(poly: &[Point], h: f64, f: &impl Fn(f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    let a = poly[0];
    for k in 1..poly.len() - 1 {
        let (b, c) = (poly[k], poly[k + 1]);
        let edge = |p: Point, q: Point| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
        let longest = edge(a, b).max(edge(b, c)).max(edge(c, a));
        let s = ((longest / h).ceil() as usize).max(1);
        let at = |i: usize, j: usize| -> Point {
            let (u, v) = (i as f64 / s as f64, j as f64 / s as f64);
            (a.0 + u * (b.0 - a.0) + v * (c.0 - a.0), a.1 + u * (b.1 - a.1) + v * (c.1 - a.1))
        };
        let area = 0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs() / (s * s) as f64;
        let mut tri = |p: Point, q: Point, r: Point| {
            let sum: f64 = TRIANGLE_RULE
                .iter()
                .map(|&(l0, l1, l2, w)| w * f(l0 * p.0 + l1 * q.0 + l2 * r.0, l0 * p.1 + l1 * q.1 + l2 * r.1))
                .sum();
            total += area * sum;
        };
        for i in 0..s {
            for j in 0..s - i {
                tri(at(i, j), at(i + 1, j), at(i, j + 1));
                if i + j + 1 < s {
                    tri(at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
                }
            }
        }
    }
    total
}

/// Relative L1 errors between a square raster, its hexagonal port and
/// (optionally) the analytic field they sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Errors {
    pub eps_hr: f64,
    pub eps_ha: Option<f64>,
    pub eps_ra: Option<f64>,
    /// Integral of |g^r| over the overlap.
    pub gamma: f64,
    /// Area of the overlap.
    pub area: f64,
}

/// Both rasters are piecewise constant, so the overlap is split exactly into
/// square-hexagon intersection polygons. Terms involving the field are
/// integrated on each polygon with a triangle rule refined to edge length
/// `cellsize / quad`.
pub fn l1_errors(gr: &RectRaster, gh: &HexRasterFile, field: Option<&AnalyticField>, quad: usize) -> Result<L1Errors> {
    gr.validate()?;
    gh.validate()?;
    let grid = gh.grid();
    let cs = gr.cellsize;
    let h = cs / quad.max(1) as f64;
    let (r, w, pitch) = (grid.radius(), grid.cell_width(), grid.row_pitch());
    let per_row: Vec<[f64; 5]> = (0..gr.nrows)
        .into_par_iter()
        .map(|row| {
            let mut acc = [0.0; 5];
            for col in 0..gr.ncols {
                let Some(v) = gr.data(col, row) else { continue };
                let (cx, cy) = gr.cell_center(col, row);
                let (x0, x1, y0, y1) = (cx - 0.5 * cs, cx + 0.5 * cs, cy - 0.5 * cs, cy + 0.5 * cs);
                let j_lo = (((grid.y0() - r - y1) / pitch).floor() as i64 + 1).max(1);
                let j_hi = (((grid.y0() + r - y0) / pitch).ceil() as i64 + 1).min(grid.nrows() as i64);
                for j in j_lo..=j_hi {
                    let shift = if (j - 1) % 2 == 1 { 0.5 * w } else { 0.0 };
                    let i_lo = (((x0 - 0.5 * w - grid.x0() + shift) / w).floor() as i64 + 1).max(1);
                    let i_hi = (((x1 + 0.5 * w - grid.x0() + shift) / w).ceil() as i64 + 1).min(grid.ncols() as i64);
                    for i in i_lo..=i_hi {
                        let id = CellId::new(i as usize, j as usize);
                        let hv = gh.values[grid.index(id)];
                        if gh.is_nodata(hv) {
                            continue;
                        }
                        let hexagon = grid.vertices(id).expect("cell in range");
                        let piece = clip_to_box(&hexagon, x0, y0, x1, y1);
                        if piece.len() < 3 {
                            continue;
                        }
                        let a = polygon_area(&piece);
                        if a <= 0.0 {
                            continue;
                        }
                        acc[0] += a;
                        acc[1] += a * v.abs();
                        acc[2] += a * (v - hv).abs();
                        if let Some(g) = field {
                            acc[3] += integrate_polygon(&piece, h, &|x, y| (g.eval(x, y) - hv).abs());
                            acc[4] += integrate_polygon(&piece, h, &|x, y| (g.eval(x, y) - v).abs());
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut t = [0.0; 5];
    for acc in per_row {
        for (a, b) in t.iter_mut().zip(acc) {
            *a += b;
        }
    }
    let [area, gamma, hr, ha, ra] = t;
    if area <= 0.0 {
        return Err(Error::EmptyOverlap);
    }
    let rel = |v: f64| if gamma > 0.0 { v / gamma } else if v == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(L1Errors {
        eps_hr: rel(hr),
        eps_ha: field.map(|_| rel(ha)),
        eps_ra: field.map(|_| rel(ra)),
        gamma,
        area,
    })
}

/// Relative L1 errors of an extension against the field and the raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionErrors {
    pub eps_ea: f64,
    pub eps_er: f64,
    pub gamma: f64,
}

/// Errors of the extension of `gr` over the raster domain, or over its
/// intersection with `domain` when given.
pub fn extension_l1_errors(
    gr: &RectRaster,
    method: ExtensionMethod,
    field: &AnalyticField,
    quad: usize,
    domain: Option<&Bounds>,
) -> Result<ExtensionErrors> {
    let surface = Surface::build(gr, method)?;
    let ([gamma, ea, er], samples) = integrate::<3>(gr, quad, |x, y, r| {
        if domain.is_some_and(|d| !d.contains(x, y)) {
            return None;
        }
        let e = surface.value(x, y)?;
        Some([r.abs(), (e - field.eval(x, y)).abs(), (e - r).abs()])
    });
    if samples == 0 {
        return Err(Error::EmptyOverlap);
    }
    let rel = |v: f64| if gamma > 0.0 { v / gamma } else if v == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(ExtensionErrors { eps_ea: rel(ea), eps_er: rel(er), gamma })
}

/// Elimination parameters: retained rows are at most `m` cells apart,
/// retained cells within a row at most `n` cells apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegradeParams {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

/// `(m, n)` for degradation level `alpha` in 1..=5.
pub fn alpha_params(alpha: usize) -> Option<(usize, usize)> {
    match alpha {
        1 => Some((3, 3)),
        2 => Some((4, 3)),
        3 => Some((5, 3)),
        4 => Some((5, 4)),
        5 => Some((5, 5)),
        _ => None,
    }
}

/// Keep mask for `len` positions: both ends kept, every gap between kept
/// positions at most `max_gap`, interior positions kept with probability
/// 1/2 unless the gap bound forces them.
fn keep_scan(len: usize, max_gap: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let mut keep = vec![false; len];
    if len == 0 {
        return keep;
    }
    keep[0] = true;
    keep[len - 1] = true;
    let mut last = 0;
    for (k, slot) in keep.iter_mut().enumerate().take(len - 1).skip(1) {
        let coin = rng.random_bool(0.5);
        if k - last >= max_gap || coin {
            *slot = true;
            last = k;
        }
    }
    keep
}

/// Randomly eliminates rows, then cells within the surviving rows, by
/// setting them to NODATA. The top and bottom rows and the first and last
/// cell of every surviving row are kept.
pub fn degrade_raster(basis: &RectRaster, p: &DegradeParams) -> Result<RectRaster> {
    if p.m < 1 || p.n < 1 {
        return Err(Error::ConstraintInfeasible(format!("gap multipliers must be at least 1, got m={} n={}", p.m, p.n)));
    }
    basis.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let rows = keep_scan(basis.nrows, p.m, &mut rng);
    let mut out = basis.clone();
    for (row, &kept) in rows.iter().enumerate() {
        let cells = if kept { keep_scan(basis.ncols, p.n, &mut rng) } else { vec![false; basis.ncols] };
        for (col, &k) in cells.iter().enumerate() {
            if !k {
                out.values[row * basis.ncols + col] = basis.nodata;
            }
        }
    }
    Ok(out)
}

/// Pointwise recovery errors at eliminated knots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryErrors {
    pub rmse: f64,
    pub max_abs: f64,
    /// Number of compared knots.
    pub nu: usize,
}

fn summarize(diffs: impl Iterator<Item = f64>) -> RecoveryErrors {
    let (mut sq, mut max, mut nu) = (0.0, 0.0f64, 0usize);
    for d in diffs {
        sq += d * d;
        max = max.max(d.abs());
        nu += 1;
    }
    if nu == 0 {
        return RecoveryErrors { rmse: 0.0, max_abs: 0.0, nu: 0 };
    }
    RecoveryErrors { rmse: (sq / nu as f64).sqrt(), max_abs: max, nu }
}

/// Extension of `degraded` evaluated at the knots it lost, compared with
/// the basis values there.
pub fn recovery_errors(basis: &RectRaster, degraded: &RectRaster, method: ExtensionMethod) -> Result<RecoveryErrors> {
    if !basis.same_geometry(degraded) {
        return Err(Error::GeometryMismatch("degraded raster differs from basis in shape or georeference".into()));
    }
    let eliminated: Vec<(usize, usize)> = (0..basis.nrows)
        .flat_map(|row| (0..basis.ncols).map(move |col| (col, row)))
        .filter(|&(col, row)| basis.data(col, row).is_some() && degraded.data(col, row).is_none())
        .collect();
    if eliminated.is_empty() {
        return Ok(summarize(std::iter::empty()));
    }
    let surface = Surface::build(degraded, method)?;
    let diffs = eliminated
        .par_iter()
        .map(|&(col, row)| {
            let (x, y) = degraded.cell_center(col, row);
            surface.value(x, y).map(|v| v - basis.get(col, row))
        })
        .collect::<Vec<_>>();
    let missing = diffs.iter().filter(|d| d.is_none()).count();
    if missing > 0 {
        log::warn!("{missing} eliminated knots have no {} value and are skipped", method.name());
    }
    Ok(summarize(diffs.into_iter().flatten()))
}

/// Hexagonal analog: ports basis and degraded rasters onto the same hex
/// grid (filling holes) and compares cell values.
pub fn hex_recovery_errors(
    basis: &RectRaster,
    degraded: &RectRaster,
    method: ExtensionMethod,
    sizing: HexSizing,
) -> Result<RecoveryErrors> {
    if !basis.same_geometry(degraded) {
        return Err(Error::GeometryMismatch("degraded raster differs from basis in shape or georeference".into()));
    }
    let grid: HexGrid = hex_grid_for(basis, sizing)?;
    let hb = port_onto(basis, &Surface::build(basis, method)?, &grid, false)?;
    let hd = port_onto(degraded, &Surface::build(degraded, method)?, &grid, false)?;
    Ok(summarize(
        hb.values
            .iter()
            .zip(&hd.values)
            .filter(|(a, b)| !hb.is_nodata(**a) && !hd.is_nodata(**b))
            .map(|(a, b)| b - a),
    ))
}

/// Everything the `errors` command reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub raster: String,
    pub hex: Option<String>,
    pub field: Option<String>,
    pub runge_a: Option<f64>,
    pub quad: usize,
    pub seed: u64,
    pub method: Option<String>,
    pub l1: Option<L1Errors>,
    pub extension: Option<ExtensionErrors>,
}

impl ErrorReport {
    /// Flat `key=value` lines; absent values are omitted.
    pub fn to_text(&self) -> String {
        let mut lines = vec![format!("raster={}", self.raster)];
        if let Some(h) = &self.hex {
            lines.push(format!("hex={h}"));
        }
        if let Some(f) = &self.field {
            lines.push(format!("field={f}"));
        }
        if let Some(a) = self.runge_a {
            lines.push(format!("runge_a={a}"));
        }
        lines.push(format!("quad={}", self.quad));
        lines.push(format!("seed={}", self.seed));
        if let Some(m) = &self.method {
            lines.push(format!("method={m}"));
        }
        if let Some(l1) = &self.l1 {
            lines.push(format!("eps_hr={}", l1.eps_hr));
            if let Some(v) = l1.eps_ha {
                lines.push(format!("eps_ha={v}"));
            }
            if let Some(v) = l1.eps_ra {
                lines.push(format!("eps_ra={v}"));
            }
            lines.push(format!("gamma={}", l1.gamma));
            lines.push(format!("area={}", l1.area));
        }
        if let Some(e) = &self.extension {
            lines.push(format!("eps_ea={}", e.eps_ea));
            lines.push(format!("eps_er={}", e.eps_er));
            if self.l1.is_none() {
                lines.push(format!("gamma={}", e.gamma));
            }
        }
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields serialize")
    }
}
