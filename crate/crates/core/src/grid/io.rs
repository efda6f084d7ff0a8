use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use super::ImageGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Csv,
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" | "txt" => Some(ImageFormat::Csv),
            "pgm" => Some(ImageFormat::Pgm),
            "png" => Some(ImageFormat::Png),
            _ => None,
        }
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ImageFormat::Csv),
            "pgm" => Ok(ImageFormat::Pgm),
            "png" | "png-gray" => Ok(ImageFormat::Png),
            other => Err(Error::param(format!("unknown image format '{other}'"))),
        }
    }
}

/// Reads an image. Integer grey levels are kept on their native scale.
pub fn load_image(path: &Path, format: ImageFormat) -> Result<ImageGrid> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    match format {
        ImageFormat::Csv => {
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse(format!("CSV is not UTF-8: {e}")))?;
            parse_csv(text)
        }
        ImageFormat::Pgm => parse_pgm(&bytes),
        ImageFormat::Png => decode_png(&bytes),
    }
}

pub(crate) fn parse_csv(text: &str) -> Result<ImageGrid> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = data.len();
        for (c, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| {
                Error::Parse(format!("bad number '{cell}' at row {rows}, column {c} (line {})", line_no + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("non-finite value {v} at row {rows}, column {c}")));
            }
            data.push(v);
        }
        let n = data.len() - start;
        match cols {
            None => cols = Some(n),
            Some(expected) if expected != n => {
                return Err(Error::Parse(format!("ragged CSV: row {rows} has {n} columns, expected {expected}")))
            }
            _ => {}
        }
        rows += 1;
    }
    let Some(cols) = cols else {
        return Err(Error::Parse("no rows".into()));
    };
    ImageGrid::from_rows(rows, cols, data)
}

fn parse_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut pos = 0;
    let mut header = Vec::with_capacity(4);
    while header.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        header.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let binary = match header[0].as_str() {
        "P5" => true,
        "P2" => false,
        m => return Err(Error::Parse(format!("unsupported PGM magic '{m}'"))),
    };
    let num =
        |s: &str, what: &str| -> Result<usize> { s.parse().map_err(|_| Error::Parse(format!("bad PGM {what} '{s}'"))) };
    let cols = num(&header[1], "width")?;
    let rows = num(&header[2], "height")?;
    let maxval = num(&header[3], "maxval")?;
    if rows == 0 {
        return Err(Error::Parse("no rows".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("PGM maxval {maxval} out of range")));
    }
    let n = rows * cols;
    let data: Vec<f64> = if binary {
        // exactly one whitespace byte separates the header from the raster
        let raster = &bytes[(pos + 1).min(bytes.len())..];
        let width = if maxval < 256 { 1 } else { 2 };
        if raster.len() < n * width {
            return Err(Error::Parse(format!("PGM raster has {} bytes, expected {}", raster.len(), n * width)));
        }
        if width == 1 {
            raster[..n].iter().map(|&b| b as f64).collect()
        } else {
            raster[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
        }
    } else {
        let text = String::from_utf8_lossy(&bytes[pos..]);
        let vals: Vec<f64> = text
            .split_ascii_whitespace()
            .take(n)
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad PGM sample '{t}'"))))
            .collect::<Result<_>>()?;
        if vals.len() != n {
            return Err(Error::Parse(format!("PGM has {} samples, expected {n}", vals.len())));
        }
        vals
    };
    ImageGrid::from_rows(rows, cols, data)
}

fn decode_png(bytes: &[u8]) -> Result<ImageGrid> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Parse(format!("PNG decode failed: {e}")))?;
    let (cols, rows) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        other if other.color().bits_per_pixel() / u16::from(other.color().channel_count()) > 8 => {
            other.to_luma16().into_raw().into_iter().map(f64::from).collect()
        }
        other => other.to_luma8().into_raw().into_iter().map(f64::from).collect(),
    };
    if rows == 0 {
        return Err(Error::Parse("no rows".into()));
    }
    ImageGrid::from_rows(rows, cols, data)
}

/// Row-major CSV with 17 significant digits per value.
pub fn to_csv_string(grid: &ImageGrid) -> String {
    let mut out = String::with_capacity(grid.rows() * grid.cols() * 24);
    for row in grid.values().rows() {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(grid: &ImageGrid, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(grid)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
