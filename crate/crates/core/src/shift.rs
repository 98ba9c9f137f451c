//! Shift operators and their inverses.
//!
//! `Cyclic` shifts wrap around both axes and preserve dimensions. `ReplicatePad`
//! shifts move the upper-left corner of the image down/right by appending
//! duplicated rows on top and duplicated columns on the left, so the shifted
//! image is `(H + dy) x (W + dx)`; the inverse crops the bottom-right `H x W`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShiftMode {
    Cyclic,
    ReplicatePad,
}

impl ShiftMode {
    pub fn to_u8(self) -> u8 {
        match self {
            ShiftMode::Cyclic => 0,
            ShiftMode::ReplicatePad => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(ShiftMode::Cyclic),
            1 => Some(ShiftMode::ReplicatePad),
            _ => None,
        }
    }
}

/// A 2-D displacement: `dy` rows downward, `dx` columns rightward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub dy: i32,
    pub dx: i32,
    pub mode: ShiftMode,
}

impl ShiftSpec {
    pub const IDENTITY: ShiftSpec = ShiftSpec { dy: 0, dx: 0, mode: ShiftMode::ReplicatePad };

    pub fn cyclic(dy: i32, dx: i32) -> Self {
        Self { dy, dx, mode: ShiftMode::Cyclic }
    }

    pub fn replicate_pad(dy: i32, dx: i32) -> Self {
        Self { dy, dx, mode: ShiftMode::ReplicatePad }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == ShiftMode::ReplicatePad && (self.dy < 0 || self.dx < 0) {
            return Err(Error::InvalidShift(format!(
                "replicate-pad offsets must be non-negative, got ({}, {})",
                self.dy, self.dx
            )));
        }
        Ok(())
    }

    /// Dimensions of the shifted image for an original of `dims`.
    pub fn shifted_dims(&self, dims: (usize, usize)) -> (usize, usize) {
        match self.mode {
            ShiftMode::Cyclic => dims,
            ShiftMode::ReplicatePad => (dims.0 + self.dy.max(0) as usize, dims.1 + self.dx.max(0) as usize),
        }
    }
}

pub fn apply_shift(img: &Image, s: &ShiftSpec) -> Result<Image> {
    s.validate()?;
    let (h, w) = img.dims();
    match s.mode {
        ShiftMode::Cyclic => {
            let oy = s.dy.rem_euclid(h as i32) as usize;
            let ox = s.dx.rem_euclid(w as i32) as usize;
            Image::from_fn(h, w, |r, c| img.get((r + oy) % h, (c + ox) % w))
        }
        ShiftMode::ReplicatePad => {
            let (dy, dx) = (s.dy as usize, s.dx as usize);
            Image::from_fn(h + dy, w + dx, |r, c| img.get(r.saturating_sub(dy), c.saturating_sub(dx)))
        }
    }
}

pub fn apply_inverse_shift(img: &Image, s: &ShiftSpec, original_dims: (usize, usize)) -> Result<Image> {
    s.validate()?;
    let expected = s.shifted_dims(original_dims);
    if img.dims() != expected {
        return Err(Error::InvalidShift(format!(
            "shifted image is {:?}, expected {:?} for original {:?}",
            img.dims(),
            expected,
            original_dims
        )));
    }
    let (h, w) = original_dims;
    match s.mode {
        ShiftMode::Cyclic => {
            let oy = s.dy.rem_euclid(h as i32) as usize;
            let ox = s.dx.rem_euclid(w as i32) as usize;
            Image::from_fn(h, w, |r, c| img.get((r + h - oy) % h, (c + w - ox) % w))
        }
        ShiftMode::ReplicatePad => {
            let (dy, dx) = (s.dy as usize, s.dx as usize);
            Image::from_fn(h, w, |r, c| img.get(r + dy, c + dx))
        }
    }
}

/// Preset replicate-pad offsets: the 2x2 grid for `K = 4`, the 3x3 grid for `K = 9`.
pub fn standard_shift_grid(k: usize) -> Result<Vec<ShiftSpec>> {
    match k {
        4 => Ok([(0, 0), (3, 0), (0, 3), (3, 3)]
            .into_iter()
            .map(|(dy, dx)| ShiftSpec::replicate_pad(dy, dx))
            .collect()),
        9 => Ok((0..3)
            .flat_map(|a| (0..3).map(move |b| ShiftSpec::replicate_pad(3 * a, 3 * b)))
            .collect()),
        _ => Err(Error::InvalidConfig(format!("no preset shift grid for K = {k} (use 4 or 9)"))),
    }
}
