use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;

use hexport::grid_io::HexRasterFile;
use hexport::hexgrid::{CellId, HexGrid};
use hexport::hydroflow::{run, Boundary, FlowParams, FlowState};

const NODATA: f64 = -9999.0;

fn terrain(grid: &HexGrid, f: impl Fn(f64, f64) -> f64) -> HexRasterFile {
    let values = grid.cells().map(|id| {
        let (x, y) = grid.cell_center(id).unwrap();
        f(x, y)
    });
    HexRasterFile::new(grid, NODATA, values.collect()).unwrap()
}

fn masked(mask: &HexRasterFile, grid: &HexGrid) -> Vec<CellId> {
    grid.cells().filter(|&id| mask.values[grid.index(id)] == 1.0).collect()
}

fn connected(cells: &[CellId], grid: &HexGrid) -> bool {
    let set: HashSet<CellId> = cells.iter().copied().collect();
    let Some(&start) = cells.first() else { return true };
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for f in 1..=6 {
            if let Some(n) = grid.neighbor(c, f) {
                if set.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    seen.len() == set.len()
}

#[test]
fn bowl_mask_matches_pond_and_shrinks_with_steepness() {
    let grid = HexGrid::new(41, 41, 1.0, 0.0, 0.0).unwrap();
    let pit = CellId::new(21, 21);
    let (cx, cy) = grid.cell_center(pit).unwrap();
    let h0 = 0.05;
    let mut sizes = Vec::new();
    for k in [0.001, 0.01, 0.1] {
        let t = terrain(&grid, |x, y| k * ((x - cx).powi(2) + (y - cy).powi(2)));
        let mut st =
            FlowState::new(&t, h0, FlowParams { manning: 0.05, dt: Some(0.05), boundary: Boundary::Closed }).unwrap();
        let out = run(&mut st, 3000, 0.0, NODATA).unwrap();
        assert!(out.summary.relative_drift.abs() < 1e-9);
        let cells = masked(&out.mask, &grid);
        assert!(cells.contains(&pit), "k={k}");
        assert!(connected(&cells, &grid), "k={k}");
        if out.summary.capping_events == 0 {
            // still water in z = kρ² holds V = πL²/(2k) below level L and
            // stands above h0 on a disc of area π(L - h0)/k
            let volume = out.summary.initial_volume;
            let level = (2.0 * k * volume / PI).sqrt();
            let expected = PI * (level - h0) / k / grid.cell_area();
            let got = cells.len() as f64;
            assert!((got - expected).abs() < 0.15 * expected, "k={k}: {got} cells vs pond {expected}");
        }
        sizes.push(cells.len());
    }
    assert!(sizes[0] > sizes[1] && sizes[1] > sizes[2], "{sizes:?}");
}

#[test]
fn valley_mask_follows_the_axis() {
    // pointy-top rows are straight lines, so the valley axis runs along row 16
    let grid = HexGrid::new(40, 31, 1.0, 0.0, 0.0).unwrap();
    let axis_row = 16;
    let (_, axis) = grid.cell_center(CellId::new(1, axis_row)).unwrap();
    // V-shaped cross-section, falling toward the left edge
    let t = terrain(&grid, |x, y| 0.3 * (y - axis).abs() + 0.02 * x);
    let mut st = FlowState::new(&t, 0.02, FlowParams { manning: 0.05, dt: None, boundary: Boundary::Open }).unwrap();
    let out = run(&mut st, 200, 0.0, NODATA).unwrap();
    assert!(out.summary.relative_drift.abs() < 1e-9);
    let cells = masked(&out.mask, &grid);
    assert!(!cells.is_empty());
    assert!(connected(&cells, &grid));
    assert!(cells.iter().all(|c| c.j.abs_diff(axis_row) <= 1), "{cells:?}");
    let cols: HashSet<usize> = cells.iter().map(|c| c.i).collect();
    assert!(cols.len() >= 15, "mask spans only {} columns", cols.len());
}

#[test]
fn depth_output_round_trips_through_text() {
    let grid = HexGrid::new(6, 5, 2.0, 10.0, 20.0).unwrap();
    let t = terrain(&grid, |x, y| 0.1 * x + 0.05 * y);
    let mut st = FlowState::new(&t, 0.1, FlowParams { manning: 0.03, dt: None, boundary: Boundary::Closed }).unwrap();
    let out = run(&mut st, 10, 0.0, NODATA).unwrap();
    let text = hexport::grid_io::write_hex_raster(&out.depth);
    assert_eq!(hexport::grid_io::read_hex_raster(&text).unwrap(), out.depth);
}
