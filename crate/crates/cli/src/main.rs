//! `hexport`: port square rasters to hexagonal rasters, measure the porting
//! error, degrade rasters, route water on hexagonal terrain and render maps.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use log::info;

use hexport::grid_io::{
    parse_esri_ascii, read_hex_raster, render_hex, render_rect, write_esri_ascii, write_hex_raster, Bounds,
    HexRasterFile, ImageFormat, Palette, RectRaster, RenderOptions,
};
use hexport::hydroflow::{self, Boundary, FlowParams, FlowState};
use hexport::interp2d::ExtensionMethod;
use hexport::metrics::{
    alpha_params, degrade_raster, extension_l1_errors, field_raster, field_raster_on_nodes, l1_errors,
    AnalyticField, DegradeParams, ErrorReport,
};
use hexport::porting::{port, HexSizing, PortingConfig};

#[derive(Parser, Debug)]
#[command(name = "hexport", version, about = "Square to hexagonal raster porting toolkit")]
struct Cli {
    /// Worker threads (0 = available parallelism)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Port an ESRI ASCII raster onto a hexagonal grid
    Port(PortArgs),
    /// Randomly eliminate rows and cells of a raster
    Degrade(DegradeArgs),
    /// Relative L1 errors between a raster, its hexagonal port and an analytic field
    Errors(ErrorsArgs),
    /// Route water over hexagonal terrain
    Flow(FlowArgs),
    /// Render a square or hexagonal raster as SVG or PPM
    Render(RenderArgs),
    /// Generate a Runge-function raster
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("sizing").required(true).args(["cells_across", "radius"])))]
struct PortArgs {
    /// Input ESRI ASCII raster
    #[arg(long = "in")]
    input: PathBuf,
    /// Output hexagonal raster
    #[arg(long)]
    out: PathBuf,
    /// Extension method: eno, of, crs or id
    #[arg(long, default_value = "eno")]
    method: ExtensionMethod,
    /// Number of hexagons across the raster width
    #[arg(long)]
    cells_across: Option<usize>,
    /// Hexagon circumradius in map units
    #[arg(long)]
    radius: Option<f64>,
    /// Evaluate the extension at hexagons over NODATA cells instead of writing NODATA
    #[arg(long)]
    fill_holes: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("level").required(true).args(["m", "alpha"])))]
struct DegradeArgs {
    /// Input ESRI ASCII raster
    #[arg(long = "in")]
    input: PathBuf,
    /// Output ESRI ASCII raster
    #[arg(long)]
    out: PathBuf,
    /// Maximum gap between retained rows, in cells
    #[arg(long, requires = "n")]
    m: Option<usize>,
    /// Maximum gap between retained cells within a row
    #[arg(long, requires = "m")]
    n: Option<usize>,
    /// Degradation level 1..=5, shorthand for (m, n)
    #[arg(long, conflicts_with_all = ["m", "n"])]
    alpha: Option<usize>,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("target").required(true).multiple(true).args(["hex", "method"])))]
struct ErrorsArgs {
    /// Square ESRI ASCII raster g^r
    #[arg(long)]
    raster: PathBuf,
    /// Hexagonal port g^h of the raster
    #[arg(long)]
    hex: Option<PathBuf>,
    /// Also measure this extension of the raster against the field (needs --runge)
    #[arg(long, requires = "runge")]
    method: Option<ExtensionMethod>,
    /// Runge parameter a of the analytic field a/((1+x^2)(1+y^2))
    #[arg(long, allow_hyphen_values = true)]
    runge: Option<f64>,
    /// Quadrature refinement per square cell
    #[arg(long, default_value_t = hexport::metrics::DEFAULT_QUAD)]
    quad: usize,
    /// Restrict extension errors to xmin,ymin,xmax,ymax
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    domain: Option<Bounds>,
    /// Text report path (stdout when absent)
    #[arg(long)]
    report: Option<PathBuf>,
    /// JSON report path
    #[arg(long)]
    json: Option<PathBuf>,
    /// Seed echoed in the report
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct FlowArgs {
    /// Hexagonal terrain raster
    #[arg(long)]
    hex: PathBuf,
    /// Initial uniform water depth
    #[arg(long)]
    h0: f64,
    /// Time step (default: Courant-limited from the initial state)
    #[arg(long)]
    dt: Option<f64>,
    /// Manning roughness coefficient
    #[arg(long, default_value_t = 0.03)]
    manning: f64,
    /// Number of time steps
    #[arg(long)]
    steps: usize,
    /// Grid edge behavior: closed or open
    #[arg(long, default_value = "closed")]
    boundary: Boundary,
    /// Output depth raster
    #[arg(long)]
    out_depth: PathBuf,
    /// Output accumulation mask raster
    #[arg(long)]
    out_mask: PathBuf,
    /// A cell is marked when its depth exceeds h0 * (1 + margin)
    #[arg(long, default_value_t = 0.0)]
    mask_margin: f64,
    /// Run summary path (stdout when absent)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Input raster (.asc square, .hex hexagonal; other extensions are sniffed)
    #[arg(long = "in")]
    input: PathBuf,
    /// Output image
    #[arg(long)]
    out: PathBuf,
    /// Image format svg or ppm (default: from the output extension)
    #[arg(long)]
    format: Option<ImageFormat>,
    /// gray, terrain, blues or comma-separated #rrggbb stops
    #[arg(long, default_value = "terrain")]
    palette: Palette,
    /// Value mapped to the first palette color (default: data minimum)
    #[arg(long, allow_hyphen_values = true, requires = "max")]
    min: Option<f64>,
    /// Value mapped to the last palette color (default: data maximum)
    #[arg(long, allow_hyphen_values = true, requires = "min")]
    max: Option<f64>,
    /// Pixels per square cell in PPM output
    #[arg(long, default_value_t = 8)]
    pixel_size: usize,
    /// Image width in pixels (SVG and hexagonal PPM)
    #[arg(long, default_value_t = 800)]
    width: usize,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    /// Samples at cell centers of the cols x rows partition of the bounds
    Centers,
    /// Samples at the (cols+1) x (rows+1) partition vertices
    Nodes,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Runge parameter a
    #[arg(long, allow_hyphen_values = true)]
    runge: f64,
    /// Partition columns
    #[arg(long)]
    cols: usize,
    /// Partition rows
    #[arg(long)]
    rows: usize,
    /// Domain xmin,ymin,xmax,ymax
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Bounds,
    /// Where samples sit in the partition
    #[arg(long, value_enum, default_value_t = Layout::Centers)]
    layout: Layout,
    /// Output ESRI ASCII raster
    #[arg(long)]
    out: PathBuf,
}

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect::<Result<_, _>>()?;
    let [xmin, ymin, xmax, ymax] = parts[..] else {
        return Err(format!("expected xmin,ymin,xmax,ymax, got {} values", parts.len()));
    };
    Bounds::new(xmin, ymin, xmax, ymax).map_err(|e| e.to_string())
}

enum Failure {
    /// Flag values violate a contract (exit 2).
    Usage(String),
    /// Input data or a computation failed (exit 1).
    Data(String),
}

impl From<hexport::Error> for Failure {
    fn from(e: hexport::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: &Path, bytes: impl AsRef<[u8]>) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_rect(path: &Path) -> Result<RectRaster, Failure> {
    parse_esri_ascii(&read_text(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_hex(path: &Path) -> Result<HexRasterFile, Failure> {
    read_hex_raster(&read_text(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn cmd_port(a: &PortArgs) -> Outcome {
    let sizing = match (a.cells_across, a.radius) {
        (Some(0), _) => return Err(usage("--cells-across must be at least 1")),
        (Some(n), _) => HexSizing::CellsAcross(n),
        (_, Some(r)) if !(r > 0.0 && r.is_finite()) => return Err(usage("--radius must be positive and finite")),
        (_, Some(r)) => HexSizing::Radius(r),
        (None, None) => unreachable!("clap requires one sizing flag"),
    };
    let raster = read_rect(&a.input)?;
    let mut cfg = PortingConfig::new(a.method, sizing);
    cfg.mask_nodata = !a.fill_holes;
    let hex = port(&raster, &cfg)?;
    info!("ported {}x{} raster to {}x{} hexagons", raster.ncols, raster.nrows, hex.ncols, hex.nrows);
    write_out(&a.out, write_hex_raster(&hex))
}

fn cmd_degrade(a: &DegradeArgs) -> Outcome {
    let (m, n) = match (a.alpha, a.m, a.n) {
        (Some(alpha), _, _) => alpha_params(alpha).ok_or_else(|| usage(format!("--alpha must be in 1..=5, got {alpha}")))?,
        (None, Some(m), Some(n)) => (m, n),
        _ => unreachable!("clap requires --alpha or both --m and --n"),
    };
    if m < 1 || n < 1 {
        return Err(usage(format!("--m and --n must be at least 1, got m={m} n={n}")));
    }
    let basis = read_rect(&a.input)?;
    let degraded = degrade_raster(&basis, &DegradeParams { m, n, seed: a.seed })?;
    let kept = degraded.values.iter().filter(|v| !degraded.is_nodata(**v)).count();
    let total = basis.values.iter().filter(|v| !basis.is_nodata(**v)).count();
    let fraction = if total > 0 { kept as f64 / total as f64 } else { 0.0 };
    write_out(&a.out, write_esri_ascii(&degraded))?;
    println!("m={m}\nn={n}\nseed={}\nretained={kept}\nretained_fraction={fraction}", a.seed);
    Ok(())
}

fn cmd_errors(a: &ErrorsArgs) -> Outcome {
    if a.quad < 1 {
        return Err(usage("--quad must be at least 1"));
    }
    if a.runge.is_some_and(|v| !v.is_finite()) {
        return Err(usage("--runge must be finite"));
    }
    let field = a.runge.map(AnalyticField::runge);
    let raster = read_rect(&a.raster)?;
    let l1 = match &a.hex {
        Some(path) => Some(l1_errors(&raster, &read_hex(path)?, field.as_ref(), a.quad)?),
        None => None,
    };
    let extension = match (a.method, &field) {
        (Some(method), Some(field)) => Some(extension_l1_errors(&raster, method, field, a.quad, a.domain.as_ref())?),
        _ => None,
    };
    let report = ErrorReport {
        raster: a.raster.display().to_string(),
        hex: a.hex.as_ref().map(|p| p.display().to_string()),
        field: field.as_ref().map(|f| f.name.clone()),
        runge_a: a.runge,
        quad: a.quad,
        seed: a.seed,
        method: a.method.map(|m| m.name().to_string()),
        l1,
        extension,
    };
    if let Some(path) = &a.json {
        write_out(path, report.to_json() + "\n")?;
    }
    match &a.report {
        Some(path) => write_out(path, report.to_text()),
        None => {
            print!("{}", report.to_text());
            Ok(())
        }
    }
}

fn cmd_flow(a: &FlowArgs) -> Outcome {
    if !(a.h0 >= 0.0 && a.h0.is_finite()) {
        return Err(usage("--h0 must be a finite non-negative depth"));
    }
    if !(a.manning > 0.0 && a.manning.is_finite()) {
        return Err(usage("--manning must be positive"));
    }
    if a.dt.is_some_and(|dt| !(dt > 0.0 && dt.is_finite())) {
        return Err(usage("--dt must be positive"));
    }
    if !(a.mask_margin >= 0.0 && a.mask_margin.is_finite()) {
        return Err(usage("--mask-margin must be non-negative"));
    }
    let terrain = read_hex(&a.hex)?;
    let params = FlowParams { manning: a.manning, dt: a.dt, boundary: a.boundary };
    let mut state = FlowState::new(&terrain, a.h0, params)?;
    let out = hydroflow::run(&mut state, a.steps, a.mask_margin, terrain.nodata)?;
    write_out(&a.out_depth, write_hex_raster(&out.depth))?;
    write_out(&a.out_mask, write_hex_raster(&out.mask))?;
    let text = format!("h0={}\n{}", a.h0, out.summary.to_text());
    match &a.report {
        Some(path) => write_out(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

enum AnyRaster {
    Rect(RectRaster),
    Hex(HexRasterFile),
}

fn read_any(path: &Path) -> Result<AnyRaster, Failure> {
    let text = read_text(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let is_hex = match ext.as_deref() {
        Some("asc") => false,
        Some("hex") => true,
        _ => text.lines().take(8).any(|l| l.trim_start().to_ascii_lowercase().starts_with("xcenter0")),
    };
    let named = |e: hexport::Error| Failure::Data(format!("{}: {e}", path.display()));
    Ok(if is_hex {
        AnyRaster::Hex(read_hex_raster(&text).map_err(named)?)
    } else {
        AnyRaster::Rect(parse_esri_ascii(&text).map_err(named)?)
    })
}

fn cmd_render(a: &RenderArgs) -> Outcome {
    let format = match a.format {
        Some(f) => f,
        None => {
            let ext = a.out.extension().and_then(|e| e.to_str()).unwrap_or("");
            ext.parse::<ImageFormat>()
                .map_err(|_| usage(format!("cannot infer image format from {:?}; pass --format", a.out.display())))?
        }
    };
    let range = match (a.min, a.max) {
        (Some(lo), Some(hi)) if !(lo < hi) => return Err(usage(format!("--min {lo} must be below --max {hi}"))),
        (Some(lo), Some(hi)) => Some((lo, hi)),
        _ => None,
    };
    if a.pixel_size < 1 || a.width < 1 {
        return Err(usage("--pixel-size and --width must be at least 1"));
    }
    let opts = RenderOptions {
        palette: a.palette.clone(),
        format,
        range,
        pixels_per_cell: a.pixel_size,
        width_px: a.width,
        ..RenderOptions::default()
    };
    let rendered = match read_any(&a.input)? {
        AnyRaster::Rect(r) => render_rect(&r, &opts),
        AnyRaster::Hex(h) => render_hex(&h, &opts),
    };
    if let Some(w) = &rendered.warning {
        eprintln!("warning: {w}");
    }
    write_out(&a.out, &rendered.bytes)
}

fn cmd_synth(a: &SynthArgs) -> Outcome {
    if a.cols < 1 || a.rows < 1 {
        return Err(usage("--cols and --rows must be at least 1"));
    }
    if !a.runge.is_finite() {
        return Err(usage("--runge must be finite"));
    }
    let dx = a.bounds.width() / a.cols as f64;
    let dy = a.bounds.height() / a.rows as f64;
    if (dx - dy).abs() > 1e-9 * dx.max(dy) {
        return Err(usage(format!("--bounds and --cols/--rows give non-square cells ({dx} x {dy})")));
    }
    let field = AnalyticField::runge(a.runge);
    let raster = match a.layout {
        Layout::Centers => field_raster(&a.bounds, a.cols, a.rows, &field)?,
        Layout::Nodes => field_raster_on_nodes(&a.bounds, a.cols, a.rows, &field)?,
    };
    write_out(&a.out, write_esri_ascii(&raster))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot start {} worker threads: {e}", cli.threads);
            return ExitCode::from(1);
        }
    }
    let outcome = match &cli.command {
        Command::Port(a) => cmd_port(a),
        Command::Degrade(a) => cmd_degrade(a),
        Command::Errors(a) => cmd_errors(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Render(a) => cmd_render(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
