//! Netpbm gray maps (P2 ASCII, P5 binary), 8 and 16 bit.
//!
//! File row 0 is the top of the picture, which is grid row `ny - 1`.

use std::path::Path;

use crate::error::{Result, SfsError};
use crate::grid::{Grid, Mask, ScalarField};

/// Decoded samples, rows top-first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl GrayImage {
    /// Samples divided by `maxval`, laid out on `grid` (which must match the
    /// image size).
    pub fn to_field(&self, grid: &Grid) -> Result<ScalarField> {
        if grid.nx() != self.width || grid.ny() != self.height {
            return Err(SfsError::InvalidGrid(format!(
                "image is {}x{}, grid is {}x{}",
                self.width,
                self.height,
                grid.nx(),
                grid.ny()
            )));
        }
        let m = self.maxval as f64;
        let mut out = ScalarField::zeros(grid);
        for row in 0..self.height {
            let j = self.height - 1 - row;
            for i in 0..self.width {
                out.set(i, j, self.samples[row * self.width + i] as f64 / m);
            }
        }
        Ok(out)
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(SfsError::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| SfsError::MalformedHeader(format!("{what} out of range")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(SfsError::MalformedHeader("missing P2/P5 magic".into())),
    };
    let mut hdr = Header { bytes, pos: 2 };
    let width = hdr.number("width")? as usize;
    let height = hdr.number("height")? as usize;
    let maxval = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(SfsError::MalformedHeader(format!(
            "empty image {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(SfsError::UnsupportedDepth(
            maxval.min(u32::MAX as u64) as u32
        ));
    }
    let maxval = maxval as u16;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| SfsError::MalformedHeader("image too large".into()))?;

    let samples = if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(hdr.pos) {
            Some(c) if c.is_ascii_whitespace() => hdr.pos += 1,
            _ => {
                return Err(SfsError::MalformedHeader(
                    "no separator after maxval".into(),
                ))
            }
        }
        let raster = &bytes[hdr.pos..];
        let wide = maxval > 255;
        let need = if wide { 2 * n } else { n };
        if raster.len() < need {
            return Err(SfsError::MalformedHeader(format!(
                "raster has {} bytes, expected {need}",
                raster.len()
            )));
        }
        if wide {
            raster[..need]
                .chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]))
                .collect()
        } else {
            raster[..need].iter().map(|&b| b as u16).collect()
        }
    } else {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let s = hdr.number("sample")?;
            v.push(s.min(u16::MAX as u64) as u16);
        }
        v
    };
    if let Some(&s) = samples.iter().find(|&&s| s > maxval) {
        return Err(SfsError::MalformedHeader(format!(
            "sample {s} exceeds maxval {maxval}"
        )));
    }
    Ok(GrayImage {
        width,
        height,
        maxval,
        samples,
    })
}

/// 8-bit binary encoding, header `P5\n<w> <h>\n255\n`.
pub fn encode_pgm8(field: &ScalarField) -> Vec<u8> {
    let g = field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    out.reserve(nx * ny);
    for row in 0..ny {
        let j = ny - 1 - row;
        for i in 0..nx {
            out.push((field.get(i, j).clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

/// Reads a gray map onto [`Grid::for_image`].
pub fn read_image_pgm(path: impl AsRef<Path>) -> Result<ScalarField> {
    let img = decode_pgm(&std::fs::read(path)?)?;
    img.to_field(&Grid::for_image(img.width, img.height)?)
}

pub fn write_image_pgm(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_pgm8(field))?;
    Ok(())
}

/// Nonzero pixels are inside.
pub fn read_mask_pgm(path: impl AsRef<Path>, grid: &Grid) -> Result<Mask> {
    let img = decode_pgm(&std::fs::read(path)?)?;
    let field = img.to_field(grid)?;
    let flags: Vec<bool> = field.values().iter().map(|&v| v > 0.0).collect();
    Mask::from_inside_flags(grid, &flags)
}

/// Inside nodes white, everything else black.
pub fn write_mask_pgm(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let g = *mask.grid();
    let mut f = ScalarField::zeros(&g);
    for k in mask.inside_indices() {
        f.values_mut()[k] = 1.0;
    }
    write_image_pgm(&f, path)
}
