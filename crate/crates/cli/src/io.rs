//! Binary PGM, single-column CSV and versioned JSON.

use std::fs;
use std::path::Path;

use fastadj::Image;
use serde::Serialize;

use crate::CliError;

pub const SCHEMA: u32 = 1;

/// Reads a P5 image (8- or 16-bit) scaled to `[0, 1]` by its maxval.
pub fn read_pgm(path: &Path) -> Result<Image, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_pgm(&bytes).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Image, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(format!("expected binary PGM (P5), found {:?}", fields[0]));
    }
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format!("bad {what} {s:?}"));
    let cols = num(&fields[1], "width")?;
    let rows = num(&fields[2], "height")?;
    let maxval = num(&fields[3], "maxval")?;
    if rows == 0 || cols == 0 || maxval == 0 || maxval > 65535 {
        return Err(format!("unsupported header {cols}x{rows} maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let depth = if maxval < 256 { 1 } else { 2 };
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() < rows * cols * depth {
        return Err(format!("raster has {} bytes, need {}", raster.len(), rows * cols * depth));
    }
    let scale = maxval as f64;
    let data = (0..rows * cols)
        .map(|i| {
            let v = if depth == 1 {
                raster[i] as f64
            } else {
                u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as f64
            };
            v / scale
        })
        .collect();
    Image::new(rows, cols, data).map_err(|e| e.to_string())
}

/// Encodes `img` as P5, mapping its own `[min, max]` onto `[0, maxval]`.
/// Returns the bytes together with that range.
pub fn encode_pgm(img: &Image, sixteen_bit: bool) -> (Vec<u8>, f64, f64) {
    let (min, max) = img.min_max();
    let maxval: u32 = if sixteen_bit { 65535 } else { 255 };
    let mut out = format!("P5\n{} {}\n{}\n", img.cols(), img.rows(), maxval).into_bytes();
    let span = max - min;
    for &v in img.as_slice() {
        let q = if span > 0.0 {
            ((v - min) / span * maxval as f64).round() as u32
        } else {
            0
        };
        if sixteen_bit {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    (out, min, max)
}

pub fn read_csv_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv_column(&text).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

pub fn parse_csv_column(text: &str) -> Result<Vec<f64>, String> {
    let values = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| format!("line {}: not a number: {:?}", i + 1, l.trim()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("no values".into());
    }
    Ok(values)
}

pub fn format_csv_column(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for v in values {
        s.push_str(&format!("{v:e}\n"));
    }
    s
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types always serialize");
    text.push('\n');
    write(path, text)
}
