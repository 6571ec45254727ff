//! Binary PGM (P5, maxval 255) read/write and 8-bit PNG read.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::{to_gray, GrayImage};
use crate::error::{Error, Result};

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let mut fields = [0usize; 3];
    if bytes.get(..2) != Some(b"P5") {
        return Err(Error::Format("not a binary PGM (P5) file".into()));
    }
    pos += 2;
    for field in fields.iter_mut() {
        // Whitespace and comments between header tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("bad PGM header".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("bad PGM header terminator".into()));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Format(format!(
            "PGM maxval {maxval}; only 255 is supported"
        )));
    }
    let data = bytes
        .get(pos..pos + w * h)
        .ok_or_else(|| Error::Format("truncated PGM data".into()))?;
    GrayImage::from_raw(w, h, data.to_vec())
}

pub fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let fmt = |e: png::DecodingError| Error::Format(format!("PNG: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(fmt)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(fmt)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format(format!(
            "PNG bit depth {:?}; only 8-bit is supported",
            info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.line_size * h];
    let rows = buf.chunks_exact(info.line_size);
    match info.color_type {
        png::ColorType::Grayscale => {
            GrayImage::from_raw(w, h, rows.flat_map(|r| &r[..w]).copied().collect())
        }
        png::ColorType::GrayscaleAlpha => GrayImage::from_raw(
            w,
            h,
            rows.flat_map(|r| r[..2 * w].iter().step_by(2))
                .copied()
                .collect(),
        ),
        png::ColorType::Rgb => to_gray(
            &rows.flat_map(|r| &r[..3 * w]).copied().collect::<Vec<_>>(),
            w,
            h,
        ),
        png::ColorType::Rgba => {
            let rgb: Vec<u8> = rows
                .flat_map(|r| r[..4 * w].chunks_exact(4).flat_map(|p| &p[..3]))
                .copied()
                .collect();
            to_gray(&rgb, w, h)
        }
        other => Err(Error::Format(format!("PNG color type {other:?}"))),
    }
}

/// Reads a PGM or PNG file, chosen by magic bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(&bytes)
    } else {
        decode_pgm(&bytes)
    }
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}
