//! Hexagonal cellular-automaton water routing.
//!
//! Each step fits a plane to the water potential ψ = z + h of a cell and its
//! neighbors, derives the slope and the steepest descent direction, and
//! moves water through the faces leading to lower neighbors with a Manning
//! velocity. Transfers are computed from the frozen state, then applied, so
//! every volume leaving a cell arrives unchanged in its receptor.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid_io::HexRasterFile;
use crate::hexgrid::{opposite_face, CellId, HexGrid, FACE_NORMALS};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// What lies across a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Cell(usize),
    /// A NODATA cell: closed wall.
    Wall,
    /// Outside the grid.
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Water reaching the grid edge leaves the domain.
    Open,
    /// The grid edge is a wall.
    Closed,
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(Self::Open),
            "closed" => Ok(Self::Closed),
            other => Err(format!("unknown boundary {other:?} (expected open or closed)")),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Open => "open",
            Self::Closed => "closed",
        })
    }
}

/// Gradient of the least-squares plane through the center `(0, 0, ψ0)` and
/// the six neighbors at distance `r√3` across faces 1..=6, in the y-up frame.
pub fn fit_plane_interior(psi: &[f64; 6], radius: f64) -> (f64, f64) {
    let [p1, p2, p3, p4, p5, p6] = *psi;
    let a = (2.0 * (p1 - p4) + p2 - p5 + p6 - p3) / (6.0 * SQRT3 * radius);
    let b = (p2 + p3 - p5 - p6) / (6.0 * radius);
    (a, b)
}

/// Gradient of the least-squares plane `ψ = c + a·dx + b·dy` through
/// `(dx, dy, ψ)` points; `None` when the points do not determine a plane.
pub fn fit_plane_ls(points: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let (mx, my, mp) = points.iter().fold((0.0, 0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
    let (mx, my, mp) = (mx / n, my / n, mp / n);
    let (mut sxx, mut sxy, mut syy, mut sxp, mut syp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, p) in points {
        let (x, y, p) = (x - mx, y - my, p - mp);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxp += x * p;
        syp += y * p;
    }
    let det = sxx * syy - sxy * sxy;
    if !(det > 1e-12 * (sxx + syy).powi(2)) {
        return None;
    }
    Some(((syy * sxp - sxy * syp) / det, (sxx * syp - sxy * sxp) / det))
}

/// Slope `s = √((a²+b²)/(1+a²+b²))` and unit descent direction `-(a,b)/|(a,b)|`
/// (absent on a flat plane).
pub fn slope_descent(a: f64, b: f64) -> (f64, Option<(f64, f64)>) {
    let g2 = a * a + b * b;
    if g2 == 0.0 {
        return (0.0, None);
    }
    let s = (g2 / (1.0 + g2)).sqrt();
    let g = g2.sqrt();
    (s, Some((-a / g, -b / g)))
}

/// Manning velocity vector `h^{2/3} s^{1/2} / n_M · τ`.
pub fn velocity(h: f64, s: f64, manning: f64, tau: (f64, f64)) -> (f64, f64) {
    if h <= 0.0 || s <= 0.0 {
        return (0.0, 0.0);
    }
    let v = h.powf(2.0 / 3.0) * s.sqrt() / manning;
    (v * tau.0, v * tau.1)
}

/// Flow quantities of one cell in the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFlow {
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub tau: Option<(f64, f64)>,
    /// Faces (1..=6) leading to receptor cells.
    pub receptors: Vec<usize>,
    /// Faces (1..=6) draining off the grid (open boundary only).
    pub outlets: Vec<usize>,
    pub w: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub manning: f64,
    /// Time step; derived from the initial state when absent.
    pub dt: Option<f64>,
    pub boundary: Boundary,
}

/// Courant-like bound `Δt · l · v_max / A_cell` used for the default step.
pub const DEFAULT_COURANT: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct FlowState {
    grid: HexGrid,
    z: Vec<f64>,
    active: Vec<bool>,
    h: Vec<f64>,
    h_init: Vec<f64>,
    sides: Vec<[Side; 6]>,
    manning: f64,
    dt: f64,
    boundary: Boundary,
    steps: usize,
    outflow: f64,
    capping_events: usize,
}

impl FlowState {
    /// Uniform water depth `h0` over the non-NODATA cells of `terrain`.
    pub fn new(terrain: &HexRasterFile, h0: f64, params: FlowParams) -> Result<Self> {
        if !(h0 >= 0.0 && h0.is_finite()) {
            return Err(Error::InvalidFlowParameter(format!("initial depth {h0} must be finite and >= 0")));
        }
        let depths = terrain.values.iter().map(|&v| if terrain.is_nodata(v) { 0.0 } else { h0 }).collect();
        Self::with_depths(terrain, depths, params)
    }

    pub fn with_depths(terrain: &HexRasterFile, h: Vec<f64>, params: FlowParams) -> Result<Self> {
        terrain.validate()?;
        if !(params.manning > 0.0 && params.manning.is_finite()) {
            return Err(Error::InvalidFlowParameter(format!("Manning coefficient {} must be positive", params.manning)));
        }
        if let Some(dt) = params.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidFlowParameter(format!("time step {dt} must be positive")));
            }
        }
        if h.len() != terrain.values.len() {
            return Err(Error::CountMismatch { expected: terrain.values.len(), found: h.len() });
        }
        if let Some(bad) = h.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidFlowParameter(format!("depth {bad} must be finite and >= 0")));
        }
        let grid = terrain.grid();
        let active: Vec<bool> = terrain.values.iter().map(|&v| !terrain.is_nodata(v) && v.is_finite()).collect();
        let h: Vec<f64> = h.iter().zip(&active).map(|(&d, &a)| if a { d } else { 0.0 }).collect();
        let sides = (0..grid.len())
            .map(|k| {
                let id = grid.cell_of_index(k);
                std::array::from_fn(|f| match grid.neighbor(id, f + 1) {
                    Some(nb) if active[grid.index(nb)] => Side::Cell(grid.index(nb)),
                    Some(_) => Side::Wall,
                    None => Side::Edge,
                })
            })
            .collect();
        let mut state = Self {
            grid,
            z: terrain.values.clone(),
            active,
            h_init: h.clone(),
            h,
            sides,
            manning: params.manning,
            dt: 1.0,
            boundary: params.boundary,
            steps: 0,
            outflow: 0.0,
            capping_events: 0,
        };
        state.dt = match params.dt {
            Some(dt) => dt,
            None => state.courant_dt(DEFAULT_COURANT),
        };
        Ok(state)
    }

    /// Largest step keeping `Δt · l · v_max / A_cell` at `courant` for the
    /// current state; 1 when nothing moves.
    pub fn courant_dt(&self, courant: f64) -> f64 {
        let vmax = (0..self.grid.len())
            .filter_map(|k| self.cell_flow_at(k))
            .map(|f| f.w.0.hypot(f.w.1))
            .fold(0.0, f64::max);
        if vmax > 0.0 {
            courant * self.grid.cell_area() / (self.grid.side() * vmax)
        } else {
            1.0
        }
    }

    pub fn grid(&self) -> &HexGrid {
        &self.grid
    }

    pub fn depths(&self) -> &[f64] {
        &self.h
    }

    pub fn initial_depths(&self) -> &[f64] {
        &self.h_init
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn steps_done(&self) -> usize {
        self.steps
    }

    /// Cumulative volume drained through the open boundary.
    pub fn outflow_volume(&self) -> f64 {
        self.outflow
    }

    /// Steps in which at least one donor had its outflow scaled down.
    pub fn capping_events(&self) -> usize {
        self.capping_events
    }

    pub fn total_volume(&self) -> f64 {
        self.h.iter().sum::<f64>() * self.grid.cell_area()
    }

    fn psi(&self, k: usize) -> f64 {
        self.z[k] + self.h[k]
    }

    /// Plane-fit gradient of the potential at `cell`, or `None` for NODATA
    /// cells and boundary cells whose neighbors do not determine a plane.
    pub fn fit_plane(&self, cell: CellId) -> Option<(f64, f64)> {
        self.fit_plane_at(self.checked_index(cell)?)
    }

    fn checked_index(&self, cell: CellId) -> Option<usize> {
        self.grid.contains(cell).then(|| self.grid.index(cell))
    }

    fn fit_plane_at(&self, k: usize) -> Option<(f64, f64)> {
        if !self.active[k] {
            return None;
        }
        let sides = &self.sides[k];
        let r = self.grid.radius();
        if sides.iter().all(|s| matches!(s, Side::Cell(_))) {
            let psi = std::array::from_fn(|f| match sides[f] {
                Side::Cell(n) => self.psi(n),
                _ => unreachable!(),
            });
            return Some(fit_plane_interior(&psi, r));
        }
        let d = SQRT3 * r;
        let mut points = vec![(0.0, 0.0, self.psi(k))];
        for (f, side) in sides.iter().enumerate() {
            if let Side::Cell(n) = *side {
                let (nx, ny) = FACE_NORMALS[f];
                points.push((d * nx, d * ny, self.psi(n)));
            }
        }
        if points.len() < 3 {
            return None;
        }
        fit_plane_ls(&points)
    }

    /// Receptor faces of `cell` for descent direction `tau`.
    pub fn classify(&self, cell: CellId, tau: (f64, f64)) -> Vec<usize> {
        match self.checked_index(cell) {
            Some(k) if self.active[k] => self.receptors_at(k, tau),
            _ => Vec::new(),
        }
    }

    fn receptors_at(&self, k: usize, tau: (f64, f64)) -> Vec<usize> {
        let psi0 = self.psi(k);
        (0..6)
            .filter(|&f| match self.sides[k][f] {
                Side::Cell(n) => self.psi(n) < psi0 && dot(tau, FACE_NORMALS[f]) > 0.0,
                _ => false,
            })
            .map(|f| f + 1)
            .collect()
    }

    fn outlets_at(&self, k: usize, tau: (f64, f64)) -> Vec<usize> {
        if self.boundary == Boundary::Closed {
            return Vec::new();
        }
        (0..6)
            .filter(|&f| self.sides[k][f] == Side::Edge && dot(tau, FACE_NORMALS[f]) > 0.0)
            .map(|f| f + 1)
            .collect()
    }

    pub fn cell_flow(&self, cell: CellId) -> Option<CellFlow> {
        self.cell_flow_at(self.checked_index(cell)?)
    }

    fn cell_flow_at(&self, k: usize) -> Option<CellFlow> {
        let (a, b) = self.fit_plane_at(k)?;
        let (s, tau) = slope_descent(a, b);
        let (receptors, outlets, w) = match tau {
            Some(t) => (self.receptors_at(k, t), self.outlets_at(k, t), velocity(self.h[k], s, self.manning, t)),
            None => (Vec::new(), Vec::new(), (0.0, 0.0)),
        };
        Some(CellFlow { a, b, s, tau, receptors, outlets, w })
    }

    /// Cells currently shedding water into `cell`.
    pub fn donors_into(&self, cell: CellId) -> Vec<CellId> {
        let Some(k) = self.checked_index(cell) else { return Vec::new() };
        (0..6)
            .filter_map(|f| match self.sides[k][f] {
                Side::Cell(n) => {
                    let flow = self.cell_flow_at(n)?;
                    flow.receptors.contains(&opposite_face(f + 1)).then(|| self.grid.cell_of_index(n))
                }
                _ => None,
            })
            .collect()
    }

    /// Outgoing face volumes of cell `k` (index `f - 1` for face `f`), with
    /// the capping flag.
    fn transfers_at(&self, k: usize) -> ([f64; 6], bool) {
        let mut out = [0.0; 6];
        let h = self.h[k];
        if h <= 0.0 {
            return (out, false);
        }
        let Some(flow) = self.cell_flow_at(k) else { return (out, false) };
        let scale = self.dt * self.grid.side() * h;
        for &f in flow.receptors.iter().chain(&flow.outlets) {
            out[f - 1] = scale * dot(FACE_NORMALS[f - 1], flow.w);
        }
        let total: f64 = out.iter().sum();
        let available = h * self.grid.cell_area();
        if total > available {
            let factor = available / total;
            for v in &mut out {
                *v *= factor;
            }
            return (out, true);
        }
        (out, false)
    }

    /// One explicit update.
    pub fn step(&mut self) -> Result<()> {
        let transfers: Vec<([f64; 6], bool)> = (0..self.grid.len()).into_par_iter().map(|k| self.transfers_at(k)).collect();
        let area = self.grid.cell_area();
        let sides = &self.sides;
        let h_new: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|k| {
                if !self.active[k] {
                    return 0.0;
                }
                let (out, capped) = &transfers[k];
                let mut h = if *capped { 0.0 } else { self.h[k] - out.iter().sum::<f64>() / area };
                for f in 0..6 {
                    if let Side::Cell(n) = sides[k][f] {
                        h += transfers[n].0[opposite_face(f + 1) - 1] / area;
                    }
                }
                h.max(0.0)
            })
            .collect();
        let mut drained = 0.0;
        let mut capped = false;
        for (k, (out, c)) in transfers.iter().enumerate() {
            capped |= *c;
            for f in 0..6 {
                if sides[k][f] == Side::Edge {
                    drained += out[f];
                }
            }
        }
        self.steps += 1;
        if let Some(k) = h_new.iter().position(|v| !v.is_finite()) {
            let id = self.grid.cell_of_index(k);
            return Err(Error::NonFiniteState { i: id.i, j: id.j, step: self.steps });
        }
        self.h = h_new;
        self.outflow += drained;
        if capped {
            self.capping_events += 1;
        }
        Ok(())
    }

    /// Depth raster; NODATA terrain cells stay NODATA.
    pub fn depth_raster(&self, nodata: f64) -> HexRasterFile {
        let values = self.h.iter().zip(&self.active).map(|(&h, &a)| if a { h } else { nodata }).collect();
        HexRasterFile::new(&self.grid, nodata, values).expect("state matches its grid")
    }

    /// 1 where the depth exceeds the initial depth by more than the relative
    /// `margin`, else 0.
    pub fn accumulation_mask(&self, margin: f64, nodata: f64) -> HexRasterFile {
        let values = (0..self.h.len())
            .map(|k| {
                if !self.active[k] {
                    nodata
                } else if self.h[k] > self.h_init[k] * (1.0 + margin) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        HexRasterFile::new(&self.grid, nodata, values).expect("state matches its grid")
    }
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    pub manning: f64,
    pub boundary: Boundary,
    pub initial_volume: f64,
    pub final_volume: f64,
    pub outflow_volume: f64,
    /// `(initial - final - outflow) / initial`.
    pub relative_drift: f64,
    pub capping_events: usize,
    pub masked_cells: usize,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        format!(
            "steps={}\ndt={}\nmanning={}\nboundary={}\ninitial_volume={}\nfinal_volume={}\noutflow_volume={}\nrelative_drift={}\ncapping_events={}\nmasked_cells={}\n",
            self.steps,
            self.dt,
            self.manning,
            self.boundary,
            self.initial_volume,
            self.final_volume,
            self.outflow_volume,
            self.relative_drift,
            self.capping_events,
            self.masked_cells
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub depth: HexRasterFile,
    pub mask: HexRasterFile,
}

/// Advances `state` by `steps` and extracts the accumulation mask.
pub fn run(state: &mut FlowState, steps: usize, margin: f64, nodata: f64) -> Result<RunOutput> {
    let initial = state.total_volume();
    let outflow0 = state.outflow_volume();
    for _ in 0..steps {
        state.step()?;
    }
    let final_volume = state.total_volume();
    let outflow = state.outflow_volume() - outflow0;
    let mask = state.accumulation_mask(margin, nodata);
    let masked_cells = mask.values.iter().filter(|&&v| v == 1.0).count();
    let relative_drift = if initial > 0.0 { (initial - final_volume - outflow) / initial } else { 0.0 };
    Ok(RunOutput {
        summary: RunSummary {
            steps,
            dt: state.dt(),
            manning: state.manning,
            boundary: state.boundary(),
            initial_volume: initial,
            final_volume,
            outflow_volume: outflow,
            relative_drift,
            capping_events: state.capping_events(),
            masked_cells,
        },
        depth: state.depth_raster(nodata),
        mask,
    })
}
