//! Netpbm grayscale (PGM) and color (PPM) images.
//!
//! Reads the ASCII (`P2`, `P3`) and binary (`P5`, `P6`) variants with any
//! maxval up to 65535; binary samples wider than a byte are big-endian.
//! Writes binary images with maxval 255.

use std::path::Path;

use coordfit::tasks::ImageSignal;

use crate::error::{CliError, CliResult};

struct Header {
    channels: usize,
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
}

/// Byte cursor over the header and ASCII payload.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments running to the end of the line.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> CliResult<u64> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.bytes.get(self.pos) {
                None => CliError::parse(start, format!("unexpected end of file, expected {what}")),
                Some(&b) => CliError::parse(start, format!("expected {what}, found byte 0x{b:02x}")),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse::<u64>()
            .map_err(|_| CliError::parse(start, format!("{what} is too large")))
    }
}

fn parse_header(cur: &mut Cursor) -> CliResult<Header> {
    let magic = cur.bytes.get(..2).ok_or_else(|| CliError::parse(0, "file too short for a magic number"))?;
    let (channels, binary) = match magic {
        b"P2" => (1, false),
        b"P3" => (3, false),
        b"P5" => (1, true),
        b"P6" => (3, true),
        [b'P', d] if d.is_ascii_digit() => {
            return Err(CliError::Unsupported(format!("netpbm variant P{}", *d as char)));
        }
        _ => return Err(CliError::parse(0, "missing netpbm magic number")),
    };
    cur.pos = 2;
    let mut dim = |what: &str| -> CliResult<usize> {
        cur.skip_separators();
        let at = cur.pos;
        let v = cur.number(what)?;
        if v == 0 || v > u32::MAX as u64 {
            return Err(CliError::parse(at, format!("{what} {v} out of range")));
        }
        Ok(v as usize)
    };
    let width = dim("width")?;
    let height = dim("height")?;
    cur.skip_separators();
    let at = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(CliError::parse(at, format!("maxval {maxval} outside 1..=65535")));
    }
    Ok(Header {
        channels,
        binary,
        width,
        height,
        maxval: maxval as u32,
    })
}

/// Decodes a PGM or PPM file held in memory, normalizing by maxval.
pub fn decode_pnm(bytes: &[u8]) -> CliResult<ImageSignal> {
    let mut cur = Cursor { bytes, pos: 0 };
    let h = parse_header(&mut cur)?;
    let count = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(h.channels))
        .ok_or_else(|| CliError::parse(cur.pos, "image dimensions overflow"))?;
    let scale = 1.0 / h.maxval as f64;
    let mut pixels = Vec::with_capacity(count.min(bytes.len()));
    if h.binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            Some(_) => return Err(CliError::parse(cur.pos, "expected whitespace after maxval")),
            None => return Err(CliError::parse(cur.pos, "missing raster data")),
        }
        let width = if h.maxval > 255 { 2 } else { 1 };
        let need = count * width;
        let raster = &bytes[cur.pos..];
        if raster.len() < need {
            return Err(CliError::parse(
                bytes.len(),
                format!("truncated raster: expected {need} bytes, found {}", raster.len()),
            ));
        }
        for (k, chunk) in raster[..need].chunks_exact(width).enumerate() {
            let v = if width == 2 {
                u16::from_be_bytes([chunk[0], chunk[1]]) as u32
            } else {
                chunk[0] as u32
            };
            if v > h.maxval {
                return Err(CliError::parse(cur.pos + k * width, format!("sample {v} exceeds maxval {}", h.maxval)));
            }
            pixels.push(v as f64 * scale);
        }
    } else {
        for _ in 0..count {
            cur.skip_separators();
            let at = cur.pos;
            let v = cur.number("sample")?;
            if v > h.maxval as u64 {
                return Err(CliError::parse(at, format!("sample {v} exceeds maxval {}", h.maxval)));
            }
            pixels.push(v as f64 * scale);
        }
    }
    Ok(ImageSignal::new(h.width, h.height, h.channels, pixels)?)
}

/// Quantizes `[0, 1]` to 8 bits, rounding half up.
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Encodes as binary PGM (one channel) or PPM (three channels), maxval 255.
pub fn encode_pnm(img: &ImageSignal) -> CliResult<Vec<u8>> {
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => return Err(CliError::Unsupported(format!("{c}-channel image"))),
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&v| quantize(v)));
    Ok(out)
}

pub fn read_image(path: impl AsRef<Path>) -> CliResult<ImageSignal> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| CliError::io(path.as_ref(), e))?;
    decode_pnm(&bytes)
}

pub fn write_image(img: &ImageSignal, path: impl AsRef<Path>) -> CliResult<()> {
    std::fs::write(path.as_ref(), encode_pnm(img)?).map_err(|e| CliError::io(path.as_ref(), e))
}
