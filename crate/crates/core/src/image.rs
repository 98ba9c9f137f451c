//! Real-valued grayscale images and PGM (P2/P5) I/O.

use crate::error::{Error, Result};

/// Row-major grayscale sample grid. Samples are nominally in `[0, 255]` but
/// are kept as `f64` so intermediate optimizer states can leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    samples: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, samples: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if samples.len() != height * width {
            return Err(Error::InvalidInput(format!(
                "expected {} samples for {height}x{width}, got {}",
                height * width,
                samples.len()
            )));
        }
        Ok(Self { height, width, samples })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                samples.push(f(r, c));
            }
        }
        Self::new(height, width, samples)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Number of samples, `N = height * width`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.samples[row * self.width + col] = value;
    }

    /// Elementwise `a*self + b*other`. Panics on a dimension mismatch.
    pub fn axpby(&self, a: f64, other: &Image, b: f64) -> Image {
        assert_eq!(self.dims(), other.dims(), "dimension mismatch");
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Image { height: self.height, width: self.width, samples }
    }

    pub fn add(&self, other: &Image) -> Image {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Image) -> Image {
        self.axpby(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> Image {
        Image {
            height: self.height,
            width: self.width,
            samples: self.samples.iter().map(|v| a * v).collect(),
        }
    }

    /// Mean squared error against `other` over all samples.
    pub fn mse(&self, other: &Image) -> f64 {
        assert_eq!(self.dims(), other.dims(), "dimension mismatch");
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sum / self.len() as f64
    }

    /// Samples clamped to `[0, 255]` and rounded half away from zero.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.samples.iter().map(|&v| quantize_sample(v)).collect()
    }
}

fn quantize_sample(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.clamp(0.0, 255.0).round() as u8
}

/// Parses a binary (P5) or ASCII (P2) PGM with maxval at most 255.
pub fn read_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor.take(2).ok_or_else(|| Error::Parse("missing magic number".into()))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(Error::Parse(format!(
                "not a PGM file (magic {:?})",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Parse(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 {
        return Err(Error::Parse("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval} > 255")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::Parse("image too large".into()))?;

    let samples = if binary {
        // exactly one whitespace byte separates maxval from the raster
        match cursor.peek() {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err(Error::Parse("missing whitespace after maxval".into())),
        }
        let raster = cursor
            .take(count)
            .ok_or_else(|| Error::Parse(format!("truncated raster: expected {count} bytes")))?;
        raster.iter().map(|&b| f64::from(b)).collect()
    } else {
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            let v = cursor.number("sample")?;
            if v > maxval {
                return Err(Error::Parse(format!("sample {v} exceeds maxval {maxval}")));
            }
            samples.push(v as f64);
        }
        samples
    };
    Image::new(height, width, samples)
}

/// Encodes as binary PGM (P5, maxval 255).
pub fn write_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_bytes());
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let slice = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(slice)
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(c) = self.peek() {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("{what} out of range")))
    }
}
