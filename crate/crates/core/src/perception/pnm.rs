//! Binary PGM (P5) depth sidecars and PPM (P6) annotation output.

use super::types::DepthMap;
use super::CodecError;

/// Serializes a depth map as `P5`, maxval 65535, big-endian samples.
pub fn write_pgm16(depth: &DepthMap) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", depth.width, depth.height);
    let mut out = Vec::with_capacity(header.len() + depth.values.len() * 2);
    out.extend_from_slice(header.as_bytes());
    for v in &depth.values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

/// Serializes an RGB image as `P6`, maxval 255.
pub fn write_ppm(width: u32, height: u32, rgb: &[u8]) -> Vec<u8> {
    debug_assert_eq!(rgb.len(), width as usize * height as usize * 3);
    let header = format!("P6\n{} {}\n255\n", width, height);
    let mut out = Vec::with_capacity(header.len() + rgb.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(rgb);
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, field: &str) -> Result<u32, CodecError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(CodecError::field(format!("pgm.{field}"), "missing or non-numeric"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| CodecError::field(format!("pgm.{field}"), "out of range"))
    }
}

/// Parses a binary PGM. 16-bit files must use maxval 65535; 8-bit files
/// (maxval 255) are widened by ×257 so that 255 maps to 65535.
pub fn read_pgm(bytes: &[u8]) -> Result<DepthMap, CodecError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(CodecError::field("pgm.magic", "expected P5"));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(CodecError::field("pgm.width/height", "must be positive"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b' ' | b'\t' | b'\n' | b'\r') => cur.pos += 1,
        _ => return Err(CodecError::field("pgm.header", "missing separator before raster")),
    }
    let n = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| CodecError::field("pgm.width/height", "too large"))?;
    let raster = &bytes[cur.pos..];
    let values = match maxval {
        65535 => {
            if raster.len() != n * 2 {
                return Err(CodecError::field(
                    "pgm.raster",
                    format!("expected {} bytes, found {}", n * 2, raster.len()),
                ));
            }
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        }
        255 => {
            if raster.len() != n {
                return Err(CodecError::field(
                    "pgm.raster",
                    format!("expected {} bytes, found {}", n, raster.len()),
                ));
            }
            raster.iter().map(|&b| u16::from(b) * 257).collect()
        }
        other => {
            return Err(CodecError::field(
                "pgm.maxval",
                format!("{other} unsupported (expected 65535 or 255)"),
            ))
        }
    };
    DepthMap::new(width, height, values)
}
