//! Binary PGM (P5) reading and writing.
//!
//! Maxval up to 255 maps to 8-bit images with one byte per sample; maxval
//! 256..=65535 maps to 16-bit images with two big-endian bytes per sample.
//! Writing always uses maxval 255 or 65535.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let maxval = if image.bit_depth() == 8 { 255 } else { 65535 };
    let mut out = format!("P5\n{} {}\n{}\n", image.width(), image.height(), maxval).into_bytes();
    if image.bit_depth() == 8 {
        out.extend(image.data().iter().map(|&v| v as u8));
    } else {
        for &v in image.data() {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(start, format!("{what} out of range")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some([b'P', b'1'..=b'7']) => {
            return Err(Error::format(
                0,
                format!(
                    "unsupported netpbm format {}; only binary PGM (P5) is supported",
                    String::from_utf8_lossy(&bytes[..2])
                ),
            ))
        }
        _ => return Err(Error::format(0, "not a PGM file")),
    }
    let mut header = Header { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    header.skip_space_and_comments();
    let maxval_at = header.pos;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(maxval_at, format!("empty image {width}x{height}")));
    }
    let bit_depth = match maxval {
        1..=255 => 8,
        256..=65535 => 16,
        _ => return Err(Error::format(maxval_at, format!("unsupported maxval {maxval}"))),
    };
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => return Err(Error::format(header.pos, "expected whitespace after maxval")),
    }

    let start = header.pos;
    let bytes_per_sample = if bit_depth == 8 { 1 } else { 2 };
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::format(start, "image dimensions overflow"))?;
    let needed = count * bytes_per_sample;
    let raster = &bytes[start..];
    if raster.len() < needed {
        return Err(Error::format(
            bytes.len(),
            format!("truncated raster: expected {needed} bytes, found {}", raster.len()),
        ));
    }
    let data: Vec<u16> = if bit_depth == 8 {
        raster[..needed].iter().map(|&b| u16::from(b)).collect()
    } else {
        raster[..needed]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(i) = data.iter().position(|&v| usize::from(v) > maxval) {
        return Err(Error::format(
            start + i * bytes_per_sample,
            format!("sample {} exceeds maxval {maxval}", data[i]),
        ));
    }
    GrayImage::from_vec(width, height, bit_depth, data)
}
