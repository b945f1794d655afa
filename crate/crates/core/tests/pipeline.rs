use hexport::grid_io::{parse_esri_ascii, read_hex_raster, write_esri_ascii, write_hex_raster, Bounds};
use hexport::interp2d::ExtensionMethod;
use hexport::metrics::{degrade_raster, l1_errors, runge_raster, AnalyticField, DegradeParams};
use hexport::porting::{port, HexSizing, PortingConfig};

fn sr1() -> hexport::grid_io::RectRaster {
    runge_raster(&Bounds::new(-20.0, -20.0, 20.0, 20.0).unwrap(), 41, 41, 1.0).unwrap()
}

#[test]
fn errors_survive_a_file_round_trip() {
    let r = parse_esri_ascii(&write_esri_ascii(&sr1())).unwrap();
    let hex = port(&r, &PortingConfig::new(ExtensionMethod::Of, HexSizing::CellsAcross(90))).unwrap();
    let back = read_hex_raster(&write_hex_raster(&hex)).unwrap();
    assert_eq!(hex, back);
    let field = AnalyticField::runge(1.0);
    assert_eq!(l1_errors(&r, &hex, Some(&field), 8).unwrap(), l1_errors(&r, &back, Some(&field), 8).unwrap());
}

#[test]
fn quadrature_refinement_converges() {
    let r = sr1();
    let field = AnalyticField::runge(1.0);
    let hex = port(&r, &PortingConfig::new(ExtensionMethod::Eno, HexSizing::CellsAcross(120))).unwrap();
    let coarse = l1_errors(&r, &hex, Some(&field), 8).unwrap();
    let fine = l1_errors(&r, &hex, Some(&field), 16).unwrap();
    // raster-hexagon terms are integrated exactly
    assert_eq!(coarse.eps_hr, fine.eps_hr);
    for (a, b) in [(coarse.eps_ha, fine.eps_ha), (coarse.eps_ra, fine.eps_ra)] {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!((a - b).abs() <= 1e-3 * b, "{a} vs {b}");
    }
}

#[test]
fn holes_stay_holes_unless_filled() {
    let r = sr1();
    let d = degrade_raster(&r, &DegradeParams { m: 3, n: 3, seed: 5 }).unwrap();
    let sizing = HexSizing::CellsAcross(60);
    let masked = port(&d, &PortingConfig::new(ExtensionMethod::Eno, sizing)).unwrap();
    let mut cfg = PortingConfig::new(ExtensionMethod::Eno, sizing);
    cfg.mask_nodata = false;
    let filled = port(&d, &cfg).unwrap();
    let grid = masked.grid();
    let mut holes = 0;
    for id in grid.cells() {
        let k = grid.index(id);
        let (x, y) = grid.cell_center(id).unwrap();
        let on_hole = d.cell_at(x, y).is_some_and(|(c, row)| d.data(c, row).is_none());
        assert_eq!(masked.is_nodata(masked.values[k]), on_hole);
        assert!(!filled.is_nodata(filled.values[k]));
        holes += on_hole as usize;
    }
    assert!(holes > 0);
}
