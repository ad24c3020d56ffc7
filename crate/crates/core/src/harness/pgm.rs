//! Greyscale image I/O. Binary PGM (P5, 16-bit big-endian, maxval 65535) is
//! the native output format; P5/P2 at any maxval and PNG are accepted on input.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Result, TvError};
use crate::grid::Image;

const MAXVAL: f64 = 65535.0;

/// Encodes `u` clamped to `[0, 1]` as 16-bit P5.
pub fn encode_pgm16(u: &Image) -> Vec<u8> {
    let n = u.size();
    let mut out = format!("P5\n{n} {n}\n65535\n").into_bytes();
    out.reserve(2 * n * n);
    for &v in u.data() {
        let q = (v.clamp(0.0, 1.0) * MAXVAL).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn write_pgm16(path: &Path, u: &Image) -> Result<()> {
    let bytes = encode_pgm16(u);
    let mut file = fs::File::create(path)
        .map_err(|e| TvError::io(format!("creating {}", path.display()), e))?;
    file.write_all(&bytes)
        .map_err(|e| TvError::io(format!("writing {}", path.display()), e))
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, String> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err("not a P5/P2 greymap".into()),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("bad header number")?;
    }
    // single whitespace byte before the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after maxval".into());
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    Ok(Header { binary, width, height, maxval, data_start: pos + 1 })
}

/// Decodes a PGM into `[0, 1]` grey levels. The image must be square.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Image> {
    let fail = |reason: String| TvError::Format { path: path.to_path_buf(), reason };
    let h = parse_header(bytes).map_err(fail)?;
    let count = h.width * h.height;
    let scale = 1.0 / h.maxval as f64;
    let raw = &bytes[h.data_start.min(bytes.len())..];
    let values: Vec<f64> = if h.binary {
        let wide = h.maxval > 255;
        let need = if wide { 2 * count } else { count };
        if raw.len() < need {
            return Err(fail(format!("expected {need} raster bytes, found {}", raw.len())));
        }
        if wide {
            raw[..need]
                .chunks_exact(2)
                .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64 * scale)
                .collect()
        } else {
            raw[..need].iter().map(|&b| b as f64 * scale).collect()
        }
    } else {
        let text = std::str::from_utf8(raw).map_err(|_| fail("non-ASCII P2 raster".into()))?;
        let vals: std::result::Result<Vec<f64>, _> = text
            .split_ascii_whitespace()
            .take(count)
            .map(|t| t.parse::<usize>().map(|v| v as f64 * scale))
            .collect();
        let vals = vals.map_err(|_| fail("bad P2 sample".into()))?;
        if vals.len() != count {
            return Err(fail(format!("expected {count} samples, found {}", vals.len())));
        }
        vals
    };
    if h.width != h.height {
        return Err(fail(format!("image is {}x{}, only square images are supported", h.width, h.height)));
    }
    Image::new(h.width, values).map_err(|e| fail(e.to_string()))
}

/// Loads a PGM or PNG as grey levels normalized to `[0, 1]`.
pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| TvError::io(format!("reading {}", path.display()), e))?;
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        return decode_pgm(&bytes, path);
    }
    let fail = |reason: String| TvError::Format { path: path.to_path_buf(), reason };
    let img = image::load_from_memory(&bytes).map_err(|e| fail(e.to_string()))?;
    let grey = img.to_luma16();
    let (w, h) = grey.dimensions();
    if w != h {
        return Err(fail(format!("image is {w}x{h}, only square images are supported")));
    }
    let values = grey.into_raw().into_iter().map(|v| v as f64 / MAXVAL).collect();
    Image::new(w as usize, values).map_err(|e| fail(e.to_string()))
}
