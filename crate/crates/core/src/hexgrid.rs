//! Regular pointy-top hexagonal tessellation.
//!
//! Cells are addressed by 1-based `(i, j)`: column `i` in `1..=N`, row `j` in
//! `1..=M`, with row 1 on top. The world frame is y-up, so row centers step
//! downward by `3r/2`, and even rows are shifted left by half a cell width:
//!
//! ```text
//! x = x0 + (i-1)·r√3 − ((j-1) mod 2)·r√3/2
//! y = y0 − (j-1)·3r/2
//! ```
//!
//! Faces are numbered 1..=6 counterclockwise starting from the face whose
//! outward normal points along +x, so face `f` has normal at angle
//! `(f-1)·60°`. Opposite faces differ by 3.

use crate::error::{Error, Result};
use crate::grid_io::Bounds;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Outward unit normals of faces 1..=6 (index 0 is face 1).
pub const FACE_NORMALS: [(f64, f64); 6] = [
    (1.0, 0.0),
    (0.5, 0.866_025_403_784_438_6),
    (-0.5, 0.866_025_403_784_438_6),
    (-1.0, 0.0),
    (-0.5, -0.866_025_403_784_438_6),
    (0.5, -0.866_025_403_784_438_6),
];

/// Per-face step in doubled half-width units along x, and in rows.
const FACE_STEPS: [(i64, i64); 6] = [(2, 0), (1, -1), (-1, -1), (-2, 0), (-1, 1), (1, 1)];

/// The face across from `face` (both 1-based).
pub fn opposite_face(face: usize) -> usize {
    (face + 2) % 6 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId {
    pub i: usize,
    pub j: usize,
}

impl CellId {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub cell: CellId,
    /// Face of the central cell shared with `cell`, 1..=6.
    pub face: usize,
    pub normal: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexGrid {
    ncols: usize,
    nrows: usize,
    radius: f64,
    x0: f64,
    y0: f64,
}

impl HexGrid {
    pub fn new(ncols: usize, nrows: usize, radius: f64, x0: f64, y0: f64) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::InvalidRaster("hex grid needs at least one row and column".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) || !x0.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidRaster(format!("invalid hex geometry r={radius}")));
        }
        Ok(Self { ncols, nrows, radius, x0, y0 })
    }

    /// Tessellation with `cells_across` hexagons spanning the width of
    /// `bounds` and enough rows to reach the bottom edge.
    pub fn cover_domain(bounds: &Bounds, cells_across: usize) -> Result<Self> {
        if cells_across == 0 {
            return Err(Error::EmptyDomain("cells_across must be at least 1".into()));
        }
        let bounds = Bounds::new(bounds.xmin, bounds.ymin, bounds.xmax, bounds.ymax)?;
        let radius = bounds.width() / (cells_across as f64 * SQRT3);
        Self::place(&bounds, cells_across, radius)
    }

    /// Tessellation with an explicit circumradius; the column count is the
    /// smallest one whose total width reaches the domain width.
    pub fn cover_domain_with_radius(bounds: &Bounds, radius: f64) -> Result<Self> {
        let bounds = Bounds::new(bounds.xmin, bounds.ymin, bounds.xmax, bounds.ymax)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::EmptyDomain(format!("radius {radius} must be positive")));
        }
        let cells = (bounds.width() / (radius * SQRT3)).ceil().max(1.0) as usize;
        Self::place(&bounds, cells, radius)
    }

    fn place(bounds: &Bounds, ncols: usize, radius: f64) -> Result<Self> {
        let pitch = 1.5 * radius;
        let mut nrows = ((bounds.height() - 0.5 * radius) / pitch).ceil().max(1.0) as usize;
        while nrows > 1 && (nrows - 1) as f64 * pitch + 0.5 * radius >= bounds.height() {
            nrows -= 1;
        }
        while (nrows as f64) * pitch + 0.5 * radius < bounds.height() {
            nrows += 1;
        }
        let x0 = bounds.xmin + 0.5 * radius * SQRT3;
        let y0 = bounds.ymax - radius;
        Self::new(ncols, nrows, radius, x0, y0)
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-to-flat width, also the distance between adjacent centers.
    pub fn cell_width(&self) -> f64 {
        self.radius * SQRT3
    }

    pub fn row_pitch(&self) -> f64 {
        1.5 * self.radius
    }

    pub fn cell_area(&self) -> f64 {
        1.5 * SQRT3 * self.radius * self.radius
    }

    /// Side length of a hexagon (equal to the circumradius).
    pub fn side(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, id: CellId) -> bool {
        (1..=self.ncols).contains(&id.i) && (1..=self.nrows).contains(&id.j)
    }

    fn check(&self, id: CellId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::OutOfRange { i: id.i, j: id.j, n: self.ncols, m: self.nrows })
        }
    }

    /// Row-major storage index of `id`.
    pub fn index(&self, id: CellId) -> usize {
        (id.j - 1) * self.ncols + (id.i - 1)
    }

    pub fn cell_of_index(&self, index: usize) -> CellId {
        CellId { i: index % self.ncols + 1, j: index / self.ncols + 1 }
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.len()).map(|k| self.cell_of_index(k))
    }

    pub fn cell_center(&self, id: CellId) -> Result<(f64, f64)> {
        self.check(id)?;
        Ok(self.center_unchecked(id.i as i64, id.j as i64))
    }

    pub(crate) fn center_of_index(&self, index: usize) -> (f64, f64) {
        let id = self.cell_of_index(index);
        self.center_unchecked(id.i as i64, id.j as i64)
    }

    fn center_unchecked(&self, i: i64, j: i64) -> (f64, f64) {
        let w = self.cell_width();
        let shift = if (j - 1).rem_euclid(2) == 1 { 0.5 * w } else { 0.0 };
        let x = self.x0 + (i - 1) as f64 * w - shift;
        let y = self.y0 - (j - 1) as f64 * self.row_pitch();
        (x, y)
    }

    /// Vertices of the hexagon, counterclockwise from the upper-right one.
    pub fn vertices(&self, id: CellId) -> Result<[(f64, f64); 6]> {
        let (cx, cy) = self.cell_center(id)?;
        let r = self.radius;
        let h = 0.5 * self.cell_width();
        Ok([
            (cx + h, cy + 0.5 * r),
            (cx, cy + r),
            (cx - h, cy + 0.5 * r),
            (cx - h, cy - 0.5 * r),
            (cx, cy - r),
            (cx + h, cy - 0.5 * r),
        ])
    }

    /// Lattice cell across `face` (1..=6), whether or not it is in range.
    fn lattice_step(i: i64, j: i64, face: usize) -> (i64, i64) {
        let (dx2, dj) = FACE_STEPS[face - 1];
        let x2 = 2 * (i - 1) - (j - 1).rem_euclid(2);
        let nj = j + dj;
        let nx2 = x2 + dx2;
        let ni = (nx2 + (nj - 1).rem_euclid(2)) / 2 + 1;
        (ni, nj)
    }

    /// Cell sharing `face` with `id`, if it exists.
    pub fn neighbor(&self, id: CellId, face: usize) -> Option<CellId> {
        let (ni, nj) = Self::lattice_step(id.i as i64, id.j as i64, face);
        if ni >= 1 && nj >= 1 && ni as usize <= self.ncols && nj as usize <= self.nrows {
            Some(CellId { i: ni as usize, j: nj as usize })
        } else {
            None
        }
    }

    pub fn neighbors(&self, id: CellId) -> Result<Vec<Neighbor>> {
        self.check(id)?;
        Ok((1..=6)
            .filter_map(|face| {
                self.neighbor(id, face)
                    .map(|cell| Neighbor { cell, face, normal: FACE_NORMALS[face - 1] })
            })
            .collect())
    }

    /// Cell whose hexagon contains `(x, y)`, or `None` outside the
    /// tessellated region. Points on a shared edge go to the smaller `(j, i)`.
    pub fn locate(&self, x: f64, y: f64) -> Option<CellId> {
        if !x.is_finite() || !y.is_finite() {
            return None;
        }
        let w = self.cell_width();
        let t = (self.y0 - y) / self.row_pitch();
        if !(-2.0..self.nrows as f64 + 2.0).contains(&t) {
            return None;
        }
        let row0 = t.floor() as i64;
        let tie = 1e-12 * self.radius * self.radius;
        let mut best: Option<(f64, bool, i64, i64)> = None;
        for jj in row0..=row0 + 1 {
            let j = jj + 1;
            let shift = if (j - 1).rem_euclid(2) == 1 { 0.5 * w } else { 0.0 };
            let u = (x - self.x0 + shift) / w;
            if !(-2.0..self.ncols as f64 + 2.0).contains(&u) {
                continue;
            }
            let col0 = u.round() as i64;
            for ii in col0 - 1..=col0 + 1 {
                let i = ii + 1;
                let (cx, cy) = self.center_unchecked(i, j);
                let d = (x - cx).powi(2) + (y - cy).powi(2);
                let inside = i >= 1 && j >= 1 && i as usize <= self.ncols && j as usize <= self.nrows;
                let better = match best {
                    None => true,
                    Some((bd, binside, bj, bi)) => {
                        if d < bd - tie {
                            true
                        } else if d <= bd + tie {
                            (!inside, j, i) < (!binside, bj, bi)
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((d, inside, j, i));
                }
            }
        }
        match best {
            Some((_, true, j, i)) => Some(CellId { i: i as usize, j: j as usize }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit(n: usize, m: usize) -> HexGrid {
        HexGrid::new(n, m, 1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn centers() {
        let g = unit(3, 3);
        let (x, y) = g.cell_center(CellId::new(2, 1)).unwrap();
        assert_abs_diff_eq!(x, SQRT3, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 0.0);
        let (x, y) = g.cell_center(CellId::new(1, 2)).unwrap();
        assert_abs_diff_eq!(x, -SQRT3 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y, -1.5);
        assert_eq!(g.cell_center(CellId::new(1, 1)).unwrap(), (0.0, 0.0));
        assert!(matches!(g.cell_center(CellId::new(4, 1)), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn interior_has_six_balanced_neighbors() {
        let g = unit(5, 5);
        let nb = g.neighbors(CellId::new(3, 3)).unwrap();
        assert_eq!(nb.len(), 6);
        let sx: f64 = nb.iter().map(|n| n.normal.0).sum();
        let sy: f64 = nb.iter().map(|n| n.normal.1).sum();
        assert_abs_diff_eq!(sx, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sy, 0.0, epsilon = 1e-15);
    }

    /// Neighbor sets by brute force: every in-range center at distance r√3.
    fn brute_neighbors(g: &HexGrid, id: CellId) -> Vec<(CellId, usize)> {
        let (cx, cy) = g.cell_center(id).unwrap();
        let mut out = Vec::new();
        for other in g.cells() {
            let (ox, oy) = g.cell_center(other).unwrap();
            let (dx, dy) = (ox - cx, oy - cy);
            let d = (dx * dx + dy * dy).sqrt();
            if (d - g.cell_width()).abs() < 1e-9 {
                let angle = dy.atan2(dx).to_degrees().rem_euclid(360.0);
                let face = (angle / 60.0).round() as usize % 6 + 1;
                out.push((other, face));
            }
        }
        out.sort_by_key(|&(_, f)| f);
        out
    }

    #[test]
    fn corner_neighbors_match_distance_enumeration() {
        let g = unit(3, 3);
        for id in [CellId::new(1, 1), CellId::new(1, 2), CellId::new(3, 3), CellId::new(3, 2)] {
            let got: Vec<(CellId, usize)> =
                g.neighbors(id).unwrap().iter().map(|n| (n.cell, n.face)).collect();
            assert_eq!(got, brute_neighbors(&g, id), "cell {id:?}");
        }
        assert_eq!(g.neighbors(CellId::new(1, 1)).unwrap().len(), 3);
        assert_eq!(g.neighbors(CellId::new(1, 2)).unwrap().len(), 3);
        assert_eq!(g.neighbors(CellId::new(1, 3)).unwrap().len(), 3);
        assert_eq!(g.neighbors(CellId::new(3, 1)).unwrap().len(), 2);
        assert_eq!(g.neighbors(CellId::new(3, 2)).unwrap().len(), 5);
    }

    #[test]
    fn neighbors_match_brute_force_everywhere() {
        let g = HexGrid::new(6, 5, 0.7, 3.0, -2.0).unwrap();
        for id in g.cells() {
            let got: Vec<(CellId, usize)> =
                g.neighbors(id).unwrap().iter().map(|n| (n.cell, n.face)).collect();
            assert_eq!(got, brute_neighbors(&g, id));
        }
    }

    #[test]
    fn reciprocity_over_grid() {
        let g = unit(10, 10);
        let mut violations = 0;
        for id in g.cells() {
            for nb in g.neighbors(id).unwrap() {
                if g.neighbor(nb.cell, opposite_face(nb.face)) != Some(id) {
                    violations += 1;
                }
            }
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn locate_centers_and_ties() {
        let g = unit(4, 4);
        for id in g.cells() {
            let (x, y) = g.cell_center(id).unwrap();
            assert_eq!(g.locate(x, y), Some(id));
        }
        // midpoint of (1,1) and (2,1)
        assert_eq!(g.locate(SQRT3 / 2.0, 0.0), Some(CellId::new(1, 1)));
        // midpoint of (2,1) and its lower-left neighbor (2,2)
        let (ax, ay) = g.cell_center(CellId::new(2, 1)).unwrap();
        let (bx, by) = g.cell_center(CellId::new(2, 2)).unwrap();
        assert_eq!(g.locate(0.5 * (ax + bx), 0.5 * (ay + by)), Some(CellId::new(2, 1)));
        assert_eq!(g.locate(0.0, -3.0 * 1.5 - 1.01), None);
        assert_eq!(g.locate(-1.0, 0.0), None);
    }

    #[test]
    fn cover_domain_sizes() {
        let b = Bounds::new(0.0, 0.0, 1000.0, 1000.0).unwrap();
        let g = HexGrid::cover_domain(&b, 10).unwrap();
        assert_abs_diff_eq!(g.radius(), 57.735, epsilon = 5e-4);
        let g = HexGrid::cover_domain(&Bounds::new(0.0, 0.0, 100.0, 100.0).unwrap(), 10).unwrap();
        assert_abs_diff_eq!(g.radius(), 5.7735, epsilon = 5e-5);
        let g = HexGrid::cover_domain(&Bounds::new(0.0, 0.0, 1.0, 1.0).unwrap(), 1).unwrap();
        assert_eq!(g.ncols(), 1);
        let r = g.radius();
        assert!(g.nrows() as f64 * 1.5 * r + 0.5 * r >= 1.0);
        assert!((g.nrows() - 1) as f64 * 1.5 * r + 0.5 * r < 1.0);
        assert!(matches!(HexGrid::cover_domain(&b, 0), Err(Error::EmptyDomain(_))));
    }

    #[test]
    fn cover_with_radius() {
        let b = Bounds::new(0.0, 0.0, 100.0, 50.0).unwrap();
        let g = HexGrid::cover_domain_with_radius(&b, 10.418).unwrap();
        assert_eq!(g.radius(), 10.418);
        assert!(g.ncols() as f64 * g.cell_width() >= 100.0);
        assert!((g.ncols() - 1) as f64 * g.cell_width() < 100.0);
    }

    proptest! {
        #[test]
        fn adjacent_centers_are_r_sqrt3_apart(
            n in 1usize..8, m in 1usize..8, r in 0.01..100.0f64,
            x0 in -1e3..1e3f64, y0 in -1e3..1e3f64,
        ) {
            let g = HexGrid::new(n, m, r, x0, y0).unwrap();
            for id in g.cells() {
                let (cx, cy) = g.cell_center(id).unwrap();
                for nb in g.neighbors(id).unwrap() {
                    let (x, y) = g.cell_center(nb.cell).unwrap();
                    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    prop_assert!((d - r * SQRT3).abs() <= 1e-12 * (1.0 + x0.abs().max(y0.abs()) + r));
                    let (dx, dy) = ((x - cx) / d, (y - cy) / d);
                    prop_assert!((dx - nb.normal.0).abs() < 1e-9 && (dy - nb.normal.1).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn locate_agrees_with_brute_nearest(
            x in -1.5..9.0f64, y in -8.0..1.5f64,
        ) {
            let g = unit(5, 5);
            let got = g.locate(x, y);
            if let Some(id) = got {
                let (cx, cy) = g.cell_center(id).unwrap();
                let d = (x - cx).powi(2) + (y - cy).powi(2);
                for other in g.cells() {
                    let (ox, oy) = g.cell_center(other).unwrap();
                    prop_assert!(d <= (x - ox).powi(2) + (y - oy).powi(2) + 1e-9);
                }
                prop_assert!(d.sqrt() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn covered_inset_maps_to_cells(
            w in 1.0..500.0f64, h in 1.0..500.0f64, n in 1usize..40,
            fx in 0.0..1.0f64, fy in 0.0..1.0f64,
        ) {
            let b = Bounds::new(-w / 3.0, 10.0, 2.0 * w / 3.0, 10.0 + h).unwrap();
            let g = HexGrid::cover_domain(&b, n).unwrap();
            let r = g.radius();
            // the right half-cell strip of even rows and the half-radius
            // bands at top and bottom are outside the tessellation
            let (xl, xr) = (b.xmin, b.xmax - 0.5 * g.cell_width());
            let (yb, yt) = (b.ymin + 0.5 * r, b.ymax - 0.5 * r);
            prop_assume!(xr > xl && yt > yb);
            let x = xl + fx * (xr - xl);
            let y = yb + fy * (yt - yb);
            prop_assert!(g.locate(x, y).is_some(), "({x}, {y}) uncovered");
        }
    }
}
