//! Square raster to hexagonal raster porting: g^r -> extension -> g^h.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid_io::{HexRasterFile, RectRaster};
use crate::hexgrid::HexGrid;
use crate::interp2d::{ExtensionMethod, Surface};

/// Hexagon size, given either as a count across the raster width or as an
/// explicit circumradius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HexSizing {
    CellsAcross(usize),
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortingConfig {
    pub method: ExtensionMethod,
    pub sizing: HexSizing,
    /// Hex centers that fall on a NODATA raster cell become NODATA.
    pub mask_nodata: bool,
}

impl PortingConfig {
    pub fn new(method: ExtensionMethod, sizing: HexSizing) -> Self {
        Self { method, sizing, mask_nodata: true }
    }
}

/// Hex grid covering the raster's bounding box for `sizing`.
pub fn hex_grid_for(raster: &RectRaster, sizing: HexSizing) -> Result<HexGrid> {
    let bounds = raster.bounds();
    match sizing {
        HexSizing::CellsAcross(n) => HexGrid::cover_domain(&bounds, n),
        HexSizing::Radius(r) => HexGrid::cover_domain_with_radius(&bounds, r),
    }
}

/// Ports `raster` onto the hex grid selected by `cfg`.
pub fn port(raster: &RectRaster, cfg: &PortingConfig) -> Result<HexRasterFile> {
    raster.validate()?;
    let grid = hex_grid_for(raster, cfg.sizing)?;
    let surface = Surface::build(raster, cfg.method)?;
    port_onto(raster, &surface, &grid, cfg.mask_nodata)
}

/// Samples an already built extension at every center of `grid`.
pub fn port_onto(raster: &RectRaster, surface: &Surface, grid: &HexGrid, mask_nodata: bool) -> Result<HexRasterFile> {
    let nodata = raster.nodata;
    let samples: Vec<(f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (x, y) = grid.center_of_index(k);
            if mask_nodata && raster.cell_at(x, y).is_some_and(|(c, r)| raster.is_nodata(raster.get(c, r))) {
                return (nodata, false);
            }
            match surface.value(x, y) {
                Some(v) if v.is_finite() => (v, v == nodata),
                _ => (nodata, !matches!(surface, Surface::Identity(_))),
            }
        })
        .collect();
    let odd = samples.iter().filter(|s| s.1).count();
    if odd > 0 {
        log::warn!("{odd} hex cells evaluated to NaN or to the NODATA sentinel {nodata}");
    }
    HexRasterFile::new(grid, nodata, samples.into_iter().map(|s| s.0).collect())
}

/// Ports with `Id` but fails instead of writing NODATA when a center lies
/// outside the raster.
pub fn port_strict_id(raster: &RectRaster, grid: &HexGrid) -> Result<HexRasterFile> {
    let values = (0..grid.len())
        .map(|k| {
            let (x, y) = grid.center_of_index(k);
            crate::interp2d::extend_id(raster, x, y)
        })
        .collect::<Result<Vec<f64>>>()?;
    HexRasterFile::new(grid, raster.nodata, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::grid_io::DEFAULT_NODATA;
    use crate::hexgrid::CellId;
    use approx::assert_relative_eq;

    fn constant(v: f64) -> RectRaster {
        RectRaster::from_fn(12, 9, 100.0, 200.0, 10.0, |_, _| v).unwrap()
    }

    #[test]
    fn constant_raster_ports_to_constant() {
        let r = constant(5.0);
        for method in [ExtensionMethod::Eno, ExtensionMethod::Of, ExtensionMethod::Crs] {
            let hex = port(&r, &PortingConfig::new(method, HexSizing::CellsAcross(17))).unwrap();
            for &v in &hex.values {
                assert_relative_eq!(v, 5.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bicubic_member_reproduced_at_centers() {
        let r = RectRaster::from_fn(10, 8, -5.0, -4.0, 1.0, |x, y| x * x * y).unwrap();
        for method in [ExtensionMethod::Eno, ExtensionMethod::Of] {
            let hex = port(&r, &PortingConfig::new(method, HexSizing::CellsAcross(23))).unwrap();
            let grid = hex.grid();
            for id in grid.cells() {
                let (x, y) = grid.cell_center(id).unwrap();
                let v = hex.values[grid.index(id)];
                assert!((v - x * x * y).abs() <= 1e-9 * (1.0 + (x * x * y).abs()), "{id:?}");
            }
        }
    }

    #[test]
    fn id_matches_direct_lookup_inside_raster() {
        let r = RectRaster::from_fn(7, 6, 0.0, 0.0, 2.0, |x, y| x + 10.0 * y).unwrap();
        let hex = port(&r, &PortingConfig::new(ExtensionMethod::Id, HexSizing::CellsAcross(9))).unwrap();
        let grid = hex.grid();
        for id in grid.cells() {
            let (x, y) = grid.cell_center(id).unwrap();
            let expected = match r.cell_at(x, y) {
                Some((c, row)) => r.get(c, row),
                None => DEFAULT_NODATA,
            };
            assert_eq!(hex.values[grid.index(id)], expected);
        }
    }

    #[test]
    fn strict_id_rejects_centers_outside() {
        let r = constant(1.0);
        let inside = HexGrid::new(2, 2, 1.0, 110.0, 280.0).unwrap();
        assert!(port_strict_id(&r, &inside).is_ok());
        let outside = HexGrid::new(2, 2, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(port_strict_id(&r, &outside), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn nodata_cells_masked_unless_disabled() {
        let mut r = RectRaster::from_fn(8, 8, 0.0, 0.0, 1.0, |x, _| x).unwrap();
        r.values[3 * 8 + 4] = r.nodata;
        let grid = HexGrid::new(1, 1, 0.1, 4.5, 4.5).unwrap();
        let masked = port_onto(&r, &Surface::build(&r, ExtensionMethod::Eno).unwrap(), &grid, true).unwrap();
        assert_eq!(masked.values, vec![r.nodata]);
        let filled = port_onto(&r, &Surface::build(&r, ExtensionMethod::Eno).unwrap(), &grid, false).unwrap();
        assert_relative_eq!(filled.values[0], 4.5, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_output() {
        let r = RectRaster::from_fn(9, 9, 0.0, 0.0, 1.0, |x, y| (x * 0.7).sin() * (y * 0.3).cos()).unwrap();
        let cfg = PortingConfig::new(ExtensionMethod::Of, HexSizing::Radius(0.37));
        let a = crate::grid_io::write_hex_raster(&port(&r, &cfg).unwrap());
        let b = crate::grid_io::write_hex_raster(&port(&r, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn grid_follows_sizing() {
        let r = constant(0.0);
        let hex = port(&r, &PortingConfig::new(ExtensionMethod::Eno, HexSizing::CellsAcross(12))).unwrap();
        assert_eq!(hex.ncols, 12);
        assert_relative_eq!(hex.radius, 120.0 / (12.0 * 3f64.sqrt()), max_relative = 1e-12);
        let g = hex.grid();
        assert!(g.contains(CellId::new(12, hex.nrows)));
    }
}
