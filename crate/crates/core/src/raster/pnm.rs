//! Binary PNM (P5/P6) codecs plus the optional PNG adapter.
//!
//! 8-bit samples map linearly to `[0, 1]` via `v / 255`; writing rounds
//! `v * 255`. The 16-bit P5 variant (maxval 65535, big-endian) backs the
//! anchor-field interchange format.

use std::fs;
use std::path::Path;

use super::{GrayImage, RgbImage};
use crate::error::{Error, Result};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    offset: usize,
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(fmt_err("missing PNM magic"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|c| *c != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(fmt_err("truncated PNM header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(fmt_err("expected a number in PNM header"));
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| fmt_err("PNM header number out of range"))?;
    }
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(fmt_err("missing whitespace after PNM maxval"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(fmt_err("PNM image has zero size"));
    }
    Ok(Header { magic, width, height, maxval, offset: pos + 1 })
}

fn payload<'a>(bytes: &'a [u8], h: &Header, samples: usize, bps: usize) -> Result<&'a [u8]> {
    let need = samples * bps;
    bytes
        .get(h.offset..h.offset + need)
        .ok_or_else(|| fmt_err(format!("PNM payload shorter than {need} bytes")))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P5" || h.maxval != 255 {
        return Err(fmt_err("expected 8-bit binary PGM (P5, maxval 255)"));
    }
    let data = payload(bytes, &h, h.width * h.height, 1)?;
    GrayImage::new(h.width, h.height, data.iter().map(|&v| v as f64 / 255.0).collect())
}

pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P6" || h.maxval != 255 {
        return Err(fmt_err("expected 8-bit binary PPM (P6, maxval 255)"));
    }
    let data = payload(bytes, &h, 3 * h.width * h.height, 1)?;
    RgbImage::new(h.width, h.height, data.iter().map(|&v| v as f64 / 255.0).collect())
}

#[inline]
fn quantize8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize8(v)));
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize8(v)));
    out
}

/// 16-bit big-endian P5 with maxval 65535.
pub fn encode_pgm16(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for &v in values {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn decode_pgm16(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P5" || h.maxval != 65535 {
        return Err(fmt_err("expected 16-bit binary PGM (P5, maxval 65535)"));
    }
    let data = payload(bytes, &h, h.width * h.height, 2)?;
    let values = data
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0)
        .collect();
    Ok((h.width, h.height, values))
}

fn is_png(bytes: &[u8]) -> bool {
    bytes.starts_with(b"\x89PNG\r\n\x1a\n")
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| fmt_err(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| fmt_err("PNG too large"))?];
    let info = reader.next_frame(&mut buf).map_err(|e| fmt_err(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let channels = info.color_type.samples();
    let mut data = Vec::with_capacity(3 * w * h);
    for px in buf.chunks_exact(channels) {
        let (rgb, alpha) = match channels {
            1 => ([px[0]; 3], 255),
            2 => ([px[0]; 3], px[1]),
            3 => ([px[0], px[1], px[2]], 255),
            _ => ([px[0], px[1], px[2]], px[3]),
        };
        // composite over white
        let a = alpha as f64 / 255.0;
        data.extend(rgb.iter().map(|&c| (c as f64 / 255.0) * a + (1.0 - a)));
    }
    RgbImage::new(w, h, data)
}

#[cfg(not(feature = "png"))]
fn decode_png(_bytes: &[u8]) -> Result<RgbImage> {
    Err(fmt_err("PNG support not compiled in"))
}

/// Reads P5, P6 or PNG. Grayscale inputs are replicated to three channels.
pub fn read_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let bytes = fs::read(path)?;
    if is_png(&bytes) {
        return decode_png(&bytes);
    }
    match bytes.get(..2) {
        Some(b"P5") => Ok(decode_pgm(&bytes)?.to_rgb()),
        Some(b"P6") => decode_ppm(&bytes),
        _ => Err(fmt_err("unrecognized image format (expected P5, P6 or PNG)")),
    }
}

/// Reads P5, P6 or PNG; color inputs are converted to luma.
pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(&bytes),
        _ if is_png(&bytes) => Ok(decode_png(&bytes)?.luma()),
        Some(b"P6") => Ok(decode_ppm(&bytes)?.luma()),
        _ => Err(fmt_err("unrecognized image format (expected P5, P6 or PNG)")),
    }
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    Ok(fs::write(path, encode_pgm(img))?)
}

pub fn write_ppm(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    Ok(fs::write(path, encode_ppm(img))?)
}
