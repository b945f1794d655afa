use super::{format_number, header_number, parse_body, split_header, write_rows, RectRaster, DEFAULT_NODATA};
use crate::error::{Error, Result};

/// Parses an ESRI ASCII grid.
///
/// Header keys are case-insensitive and may appear in any order. A
/// `xllcenter`/`yllcenter` origin is shifted by half a cell to the corner
/// convention used internally.
pub fn parse_esri_ascii(text: &str) -> Result<RectRaster> {
    let (header, body) = split_header(text);

    let mut ncols: Option<usize> = None;
    let mut nrows: Option<usize> = None;
    let mut x: Option<(f64, bool)> = None;
    let mut y: Option<(f64, bool)> = None;
    let mut cellsize: Option<f64> = None;
    let mut nodata: Option<f64> = None;

    for (key, raw, line) in &header {
        let dup = || Error::MalformedHeader(format!("line {line}: duplicate key {key}"));
        match key.as_str() {
            "ncols" => {
                if ncols.replace(header_number(key, raw, *line)?).is_some() {
                    return Err(dup());
                }
            }
            "nrows" => {
                if nrows.replace(header_number(key, raw, *line)?).is_some() {
                    return Err(dup());
                }
            }
            "xllcorner" | "xllcenter" => {
                let v = header_number(key, raw, *line)?;
                if x.replace((v, key == "xllcenter")).is_some() {
                    return Err(dup());
                }
            }
            "yllcorner" | "yllcenter" => {
                let v = header_number(key, raw, *line)?;
                if y.replace((v, key == "yllcenter")).is_some() {
                    return Err(dup());
                }
            }
            "cellsize" => {
                if cellsize.replace(header_number(key, raw, *line)?).is_some() {
                    return Err(dup());
                }
            }
            "nodata_value" => {
                if nodata.replace(header_number(key, raw, *line)?).is_some() {
                    return Err(dup());
                }
            }
            other => {
                return Err(Error::MalformedHeader(format!("line {line}: unknown key {other}")));
            }
        }
    }

    let missing = |k: &str| Error::MalformedHeader(format!("missing key {k}"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let (x, x_center) = x.ok_or_else(|| missing("xllcorner"))?;
    let (y, y_center) = y.ok_or_else(|| missing("yllcorner"))?;
    let cellsize = cellsize.ok_or_else(|| missing("cellsize"))?;
    let nodata = nodata.unwrap_or(DEFAULT_NODATA);

    if ncols == 0 || nrows == 0 {
        return Err(Error::MalformedHeader("ncols and nrows must be positive".into()));
    }
    let xll = if x_center { x - 0.5 * cellsize } else { x };
    let yll = if y_center { y - 0.5 * cellsize } else { y };

    let values = parse_body(&body, ncols * nrows)?;
    RectRaster::new(ncols, nrows, xll, yll, cellsize, nodata, values)
}

/// Serializes a raster as an ESRI ASCII grid using the corner convention.
pub fn write_esri_ascii(raster: &RectRaster) -> String {
    let mut out = String::new();
    out.push_str(&format!("ncols         {}\n", raster.ncols));
    out.push_str(&format!("nrows         {}\n", raster.nrows));
    out.push_str(&format!("xllcorner     {}\n", format_number(raster.xll)));
    out.push_str(&format!("yllcorner     {}\n", format_number(raster.yll)));
    out.push_str(&format!("cellsize      {}\n", format_number(raster.cellsize)));
    out.push_str(&format!("NODATA_value  {}\n", format_number(raster.nodata)));
    write_rows(&mut out, &raster.values, raster.ncols);
    out
}
