//! Packet sets and the shared averaging reconstruction.
//!
//! Packet `i` holds `C(S_i x)`. A subset of packets reconstructs `x` as the
//! mean of the back-shifted decoded packets, `(1/m) sum_j S_j^T F(b_j)`.

use std::collections::HashSet;

use crate::codec::{Codec, CodecParams, Packet};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::shift::{apply_inverse_shift, apply_shift, ShiftSpec};

/// How a packet set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ModeTag {
    Duplicate,
    Baseline,
    /// ADMM-optimized for reconstructions from `m` packets.
    OptimizedFor(u8),
}

impl ModeTag {
    pub fn to_u8(self) -> u8 {
        match self {
            ModeTag::Duplicate => 0,
            ModeTag::Baseline => 1,
            ModeTag::OptimizedFor(m) => 0x80 | m,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(ModeTag::Duplicate),
            1 => Some(ModeTag::Baseline),
            v if v & 0x80 != 0 && v & 0x7f >= 1 => Some(ModeTag::OptimizedFor(v & 0x7f)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketSet {
    pub original_dims: (usize, usize),
    pub shifts: Vec<ShiftSpec>,
    pub codec: CodecParams,
    pub packets: Vec<Packet>,
    pub mode_tag: ModeTag,
}

impl PacketSet {
    pub fn k(&self) -> usize {
        self.packets.len()
    }

    pub fn pixel_count(&self) -> usize {
        self.original_dims.0 * self.original_dims.1
    }

    pub fn total_bits(&self) -> u64 {
        self.packets.iter().map(Packet::bit_cost).sum()
    }

    /// Checks a 1-based subset and returns it 0-based.
    pub fn validate_subset(&self, subset: &[usize]) -> Result<Vec<usize>> {
        if subset.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        let mut seen = HashSet::new();
        subset
            .iter()
            .map(|&i| {
                if i == 0 || i > self.k() {
                    Err(Error::InvalidSubset(format!("packet index {i} outside 1..={}", self.k())))
                } else if !seen.insert(i) {
                    Err(Error::InvalidSubset(format!("packet index {i} repeated")))
                } else {
                    Ok(i - 1)
                }
            })
            .collect()
    }

    /// Decodes every packet and maps it back onto the original support.
    pub fn decode_all(&self, codec: &Codec) -> Result<Vec<Image>> {
        self.packets
            .iter()
            .zip(&self.shifts)
            .map(|(pkt, s)| back_shift(&codec.decompress(pkt)?, s, self.original_dims))
            .collect()
    }
}

fn back_shift(decoded: &Image, s: &ShiftSpec, dims: (usize, usize)) -> Result<Image> {
    apply_inverse_shift(decoded, s, dims)
        .map_err(|e| Error::Decode(format!("decoded packet does not match its shift: {e}")))
}

/// Mean of equally sized images, accumulated as a running mean in the order
/// given so that identical inputs average to themselves exactly.
pub fn average(images: &[&Image]) -> Image {
    assert!(!images.is_empty(), "average of no images");
    let (h, w) = images[0].dims();
    let mut acc = images[0].samples().to_vec();
    for (j, img) in images.iter().enumerate().skip(1) {
        assert_eq!(img.dims(), (h, w), "dimension mismatch");
        let n = (j + 1) as f64;
        for (a, v) in acc.iter_mut().zip(img.samples()) {
            *a += (v - *a) / n;
        }
    }
    Image::new(h, w, acc).expect("dims already validated")
}

/// Averages the back-shifted packets listed in `subset_sorted` (0-based, ascending).
pub fn average_subset(back_shifted: &[Image], subset_sorted: &[usize]) -> Image {
    let picked: Vec<&Image> = subset_sorted.iter().map(|&i| &back_shifted[i]).collect();
    average(&picked)
}

/// `K` byte-identical copies of `C(x)`.
pub fn encode_duplicate(x: &Image, k: usize, codec: &Codec) -> Result<PacketSet> {
    if k == 0 || k > 255 {
        return Err(Error::InvalidConfig(format!("K must be in 1..=255, got {k}")));
    }
    let pkt = codec.compress(x)?;
    Ok(PacketSet {
        original_dims: x.dims(),
        shifts: vec![ShiftSpec::IDENTITY; k],
        codec: codec.params(),
        packets: vec![pkt; k],
        mode_tag: ModeTag::Duplicate,
    })
}

pub fn validate_shifts(shifts: &[ShiftSpec]) -> Result<()> {
    if shifts.is_empty() || shifts.len() > 255 {
        return Err(Error::InvalidConfig(format!("need 1..=255 shifts, got {}", shifts.len())));
    }
    let mut seen = HashSet::new();
    for s in shifts {
        s.validate()?;
        if !seen.insert(*s) {
            return Err(Error::InvalidConfig(format!("shift {s:?} listed twice")));
        }
    }
    Ok(())
}

/// Unoptimized design: packet `i` is `C(S_i x)`.
pub fn encode_baseline(x: &Image, shifts: &[ShiftSpec], codec: &Codec) -> Result<PacketSet> {
    validate_shifts(shifts)?;
    let packets = shifts
        .iter()
        .map(|s| codec.compress(&apply_shift(x, s)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(PacketSet {
        original_dims: x.dims(),
        shifts: shifts.to_vec(),
        codec: codec.params(),
        packets,
        mode_tag: ModeTag::Baseline,
    })
}

/// Reconstruction from the 1-based `subset_indices`, using the codec recorded in the set.
pub fn reconstruct(ps: &PacketSet, subset_indices: &[usize]) -> Result<Image> {
    reconstruct_with(ps, subset_indices, &Codec::from_params(&ps.codec)?)
}

pub fn reconstruct_with(ps: &PacketSet, subset_indices: &[usize], codec: &Codec) -> Result<Image> {
    let mut idx = ps.validate_subset(subset_indices)?;
    idx.sort_unstable();
    let back: Vec<Image> = idx
        .iter()
        .map(|&i| back_shift(&codec.decompress(&ps.packets[i])?, &ps.shifts[i], ps.original_dims))
        .collect::<Result<_>>()?;
    let refs: Vec<&Image> = back.iter().collect();
    Ok(average(&refs))
}
