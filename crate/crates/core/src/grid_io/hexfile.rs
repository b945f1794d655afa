//! Hexagonal raster text format.
//!
//! ```text
//! ncols         3
//! nrows         2
//! xcenter0      0.5
//! ycenter0      10
//! radius        1
//! NODATA_value  -9999
//! 1 2 3
//! 4 5 6
//! ```
//!
//! `xcenter0`/`ycenter0` locate the center of the upper-left cell (1,1).
//! Rows follow top to bottom; the half-cell shift of even rows is implied by
//! the row index and never stored.

use super::{format_number, header_number, parse_body, split_header, write_rows, HexRasterFile, DEFAULT_NODATA};
use crate::error::{Error, Result};

pub fn read_hex_raster(text: &str) -> Result<HexRasterFile> {
    let (header, body) = split_header(text);

    let mut ncols: Option<usize> = None;
    let mut nrows: Option<usize> = None;
    let mut x0: Option<f64> = None;
    let mut y0: Option<f64> = None;
    let mut radius: Option<f64> = None;
    let mut nodata: Option<f64> = None;

    for (key, raw, line) in &header {
        let duplicate = match key.as_str() {
            "ncols" => ncols.replace(header_number(key, raw, *line)?).is_some(),
            "nrows" => nrows.replace(header_number(key, raw, *line)?).is_some(),
            "xcenter0" => x0.replace(header_number(key, raw, *line)?).is_some(),
            "ycenter0" => y0.replace(header_number(key, raw, *line)?).is_some(),
            "radius" => radius.replace(header_number(key, raw, *line)?).is_some(),
            "nodata_value" => nodata.replace(header_number(key, raw, *line)?).is_some(),
            other => {
                return Err(Error::MalformedHeader(format!("line {line}: unknown key {other}")));
            }
        };
        if duplicate {
            return Err(Error::MalformedHeader(format!("line {line}: duplicate key {key}")));
        }
    }

    let missing = |k: &str| Error::MalformedHeader(format!("missing key {k}"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let x0 = x0.ok_or_else(|| missing("xcenter0"))?;
    let y0 = y0.ok_or_else(|| missing("ycenter0"))?;
    let radius = radius.ok_or_else(|| missing("radius"))?;
    let nodata = nodata.unwrap_or(DEFAULT_NODATA);
    if ncols == 0 || nrows == 0 {
        return Err(Error::MalformedHeader("ncols and nrows must be positive".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::MalformedHeader(format!("radius {radius} must be positive")));
    }

    let values = parse_body(&body, ncols * nrows)?;
    let hex = HexRasterFile { ncols, nrows, x0, y0, radius, nodata, values };
    hex.validate()?;
    Ok(hex)
}

pub fn write_hex_raster(hex: &HexRasterFile) -> String {
    let mut out = String::new();
    out.push_str(&format!("ncols         {}\n", hex.ncols));
    out.push_str(&format!("nrows         {}\n", hex.nrows));
    out.push_str(&format!("xcenter0      {}\n", format_number(hex.x0)));
    out.push_str(&format!("ycenter0      {}\n", format_number(hex.y0)));
    out.push_str(&format!("radius        {}\n", format_number(hex.radius)));
    out.push_str(&format!("NODATA_value  {}\n", format_number(hex.nodata)));
    write_rows(&mut out, &hex.values, hex.ncols);
    out
}
