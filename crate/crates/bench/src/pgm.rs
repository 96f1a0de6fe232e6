//! Portable graymap (PGM) reading and writing.
//!
//! Both the ASCII (`P2`) and binary (`P5`) forms are decoded, with 8- or
//! 16-bit samples. Pixel values are scaled to `[0, 1]` by the header's
//! maxval; the returned matrix has one row per image row.

use std::fmt::Write as _;

use reptensor::Matrix;

/// Decoding failure; the caller attaches the file name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmError(pub String);

impl std::fmt::Display for PgmError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PgmError {}

fn err<T>(msg: impl Into<String>) -> Result<T, PgmError> {
    Err(PgmError(msg.into()))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.bytes.get(self.pos) {
                None => err(format!("unexpected end of data while reading {what}")),
                Some(&b) => err(format!("expected {what}, found byte 0x{b:02x}")),
            };
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError(format!("{what} out of range")))
    }
}

/// Decodes a `P2` or `P5` graymap into a matrix scaled to `[0, 1]`.
pub fn decode(bytes: &[u8]) -> Result<Matrix, PgmError> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(b"P1" | b"P3" | b"P4" | b"P6" | b"P7") => return err("not a graymap (only P2 and P5 are supported)"),
        _ => return err("missing PGM magic number"),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return err(format!("empty image {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return err(format!("maxval {maxval} outside 1..=65535"));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| PgmError("image dimensions overflow".into()))?;
    let scale = f64::from(maxval);
    let mut out = Matrix::zeros(height, width);

    let mut store = |idx: usize, v: u32| -> Result<(), PgmError> {
        if v > maxval {
            return err(format!("sample {v} exceeds maxval {maxval}"));
        }
        out[(idx / width, idx % width)] = f64::from(v) / scale;
        Ok(())
    };

    if binary {
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return err("missing whitespace after maxval"),
        }
        let raster = &bytes[cur.pos..];
        let wide = maxval > 255;
        let need = if wide { count * 2 } else { count };
        if raster.len() < need {
            return err(format!("truncated raster: {} of {need} bytes", raster.len()));
        }
        for idx in 0..count {
            let v = if wide {
                u32::from(u16::from_be_bytes([raster[2 * idx], raster[2 * idx + 1]]))
            } else {
                u32::from(raster[idx])
            };
            store(idx, v)?;
        }
    } else {
        for idx in 0..count {
            let v = cur.number("sample")?;
            store(idx, v)?;
        }
    }
    Ok(out)
}

/// Encodes `[0, 1]` values as a binary graymap with the given maxval,
/// rounding to the nearest level and clamping out-of-range values.
pub fn encode_binary(img: &Matrix, maxval: u16) -> Vec<u8> {
    let maxval = maxval.max(1);
    let mut out = format!("P5\n{} {}\n{}\n", img.ncols(), img.nrows(), maxval).into_bytes();
    let level = |v: f64| (v.clamp(0.0, 1.0) * f64::from(maxval)).round() as u16;
    for r in 0..img.nrows() {
        for c in 0..img.ncols() {
            let q = level(img[(r, c)]);
            if maxval > 255 {
                out.extend_from_slice(&q.to_be_bytes());
            } else {
                out.push(q as u8);
            }
        }
    }
    out
}

/// Encodes `[0, 1]` values as an ASCII graymap.
pub fn encode_ascii(img: &Matrix, maxval: u16) -> String {
    let maxval = maxval.max(1);
    let mut out = format!("P2\n{} {}\n{}\n", img.ncols(), img.nrows(), maxval);
    for r in 0..img.nrows() {
        let row: Vec<String> = (0..img.ncols())
            .map(|c| ((img[(r, c)].clamp(0.0, 1.0) * f64::from(maxval)).round() as u16).to_string())
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}
