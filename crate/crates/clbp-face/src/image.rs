//! Grayscale images and the binary PGM ("P5") codec.
//!
//! Only 8-bit binary PGM is supported: that is the format the ORL database
//! ships in, and keeping the decoder self-contained avoids pulling in a full
//! image stack. Header tokens are whitespace-separated, `#` comments may
//! appear between tokens, and exactly one whitespace byte separates the
//! `maxval` token from the pixel payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit grayscale image, pixels stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Builds an image from raw row-major pixels.
    ///
    /// Fails when either dimension is zero or `pixels.len()` does not equal
    /// `width * height`.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "pixel buffer has {} bytes, expected {}x{} = {}",
                pixels.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel, row by row.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "dimensions must be at least 1x1");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Intensity at column `x`, row `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    /// Mean intensity over every pixel of the image.
    pub fn mean(&self) -> f64 {
        let sum: u64 = self.pixels.iter().map(|&p| u64::from(p)).sum();
        sum as f64 / self.pixels.len() as f64
    }
}

fn is_pgm_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

/// Cursor over the header bytes; skips whitespace runs and `#` comments.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if is_pgm_whitespace(b) {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    /// Reads the next decimal token, reporting failures against `field`.
    fn number(&mut self, field: &'static str) -> Result<u64> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !is_pgm_whitespace(self.bytes[self.pos])
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        let token = &self.bytes[start..self.pos];
        if token.is_empty() {
            return Err(Error::PgmParse {
                field,
                message: "header ended before the token".into(),
            });
        }
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| Error::PgmParse {
                field,
                message: format!("not a decimal number: {:?}", String::from_utf8_lossy(token)),
            })
    }
}

/// Decodes a binary ("P5") PGM file from raw bytes.
///
/// Accepts `#` comments between header tokens. Requires `maxval <= 255` and
/// exactly one whitespace byte between `maxval` and the payload.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::PgmParse {
            field: "magic",
            message: format!("unsupported magic number {found:?}, expected \"P5\""),
        });
    }
    let mut cursor = HeaderCursor { bytes, pos: 2 };

    let width = cursor.number("width")? as usize;
    let height = cursor.number("height")? as usize;
    if width == 0 {
        return Err(Error::PgmParse {
            field: "width",
            message: "must be at least 1".into(),
        });
    }
    if height == 0 {
        return Err(Error::PgmParse {
            field: "height",
            message: "must be at least 1".into(),
        });
    }
    let maxval = cursor.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::PgmParse {
            field: "maxval",
            message: format!("must be in 1..=255, got {maxval}"),
        });
    }

    // Exactly one whitespace byte separates the header from the payload.
    if cursor.pos >= bytes.len() || !is_pgm_whitespace(bytes[cursor.pos]) {
        return Err(Error::PgmParse {
            field: "maxval",
            message: "expected a single whitespace byte after maxval".into(),
        });
    }
    let payload = &bytes[cursor.pos + 1..];
    let expected = width * height;
    if payload.len() < expected {
        return Err(Error::PgmParse {
            field: "payload",
            message: format!(
                "truncated pixel payload: expected {expected} bytes, found {}",
                payload.len()
            ),
        });
    }
    GrayImage::new(width, height, payload[..expected].to_vec())
}

/// Encodes an image as a binary ("P5") PGM with `maxval` 255.
///
/// `load_pgm(&write_pgm(&img))` reproduces `img` exactly.
pub fn write_pgm(image: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width(), image.height());
    let mut out = header.into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

/// Reads and decodes a PGM file from disk.
pub fn load_pgm_file(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_pgm(&bytes).map_err(|e| match e {
        Error::PgmParse { field, message } => Error::PgmParse {
            field,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Writes an image to disk as binary PGM.
pub fn write_pgm_file(image: &GrayImage, path: &Path) -> Result<()> {
    fs::write(path, write_pgm(image)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
