//! Standard (non-holographic) compression `C` and decompression `F`.
//!
//! Two backends sit behind [`Codec`]: the built-in block-DCT codec, which is
//! self-contained and deterministic, and an adapter that shells out to an
//! external encoder/decoder pair (e.g. a JPEG2000 tool).

pub mod bits;
pub mod block;
pub mod dct;
pub mod external;
pub mod huffman;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

pub use external::{external_codec_roundtrip, ExternalTool, ENV_DECODE, ENV_ENCODE};

pub const DEFAULT_BLOCK_SIZE: usize = 8;

/// Multiplicative step used to bracket the rate target in [`compress_to_ratio`].
pub const RATE_STEP: f64 = 1.05;
const MAX_BISECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodecId {
    InternalBlockDct,
    External,
}

impl CodecId {
    pub fn to_u8(self) -> u8 {
        match self {
            CodecId::InternalBlockDct => 0,
            CodecId::External => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(CodecId::InternalBlockDct),
            1 => Some(CodecId::External),
            _ => None,
        }
    }
}

/// Rate parameter `theta` is the quantizer step for the internal codec and the
/// compression ratio handed to the external tool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecParams {
    pub codec_id: CodecId,
    pub theta: f64,
    pub block_size: usize,
}

impl CodecParams {
    pub fn internal(theta: f64) -> Self {
        Self { codec_id: CodecId::InternalBlockDct, theta, block_size: DEFAULT_BLOCK_SIZE }
    }

    pub fn external(ratio: f64) -> Self {
        Self { codec_id: CodecId::External, theta: ratio, block_size: DEFAULT_BLOCK_SIZE }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidConfig(format!("theta must be positive, got {}", self.theta)));
        }
        if self.codec_id == CodecId::InternalBlockDct && self.block_size < 2 {
            return Err(Error::InvalidConfig(format!("block size must be >= 2, got {}", self.block_size)));
        }
        Ok(())
    }
}

/// One compressed representation. `bit_cost` is always `8 * bytes.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Packet {
    bytes: Vec<u8>,
}

impl Packet {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self { bytes }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn bit_cost(&self) -> u64 {
        8 * self.bytes.len() as u64
    }
}

/// A configured compressor/decompressor pair.
#[derive(Debug, Clone)]
pub enum Codec {
    Internal { theta: f64, block_size: usize },
    External { tool: ExternalTool, ratio: f64 },
}

impl Codec {
    /// Builds the backend for `params`. External codecs take their command
    /// templates from `HOLO_EXT_ENCODE` / `HOLO_EXT_DECODE`.
    pub fn from_params(params: &CodecParams) -> Result<Self> {
        params.validate()?;
        match params.codec_id {
            CodecId::InternalBlockDct => {
                Ok(Codec::Internal { theta: params.theta, block_size: params.block_size })
            }
            CodecId::External => Ok(Codec::External { tool: ExternalTool::from_env()?, ratio: params.theta }),
        }
    }

    pub fn with_tool(params: &CodecParams, tool: ExternalTool) -> Result<Self> {
        params.validate()?;
        match params.codec_id {
            CodecId::InternalBlockDct => Self::from_params(params),
            CodecId::External => Ok(Codec::External { tool, ratio: params.theta }),
        }
    }

    pub fn params(&self) -> CodecParams {
        match self {
            Codec::Internal { theta, block_size } => {
                CodecParams { codec_id: CodecId::InternalBlockDct, theta: *theta, block_size: *block_size }
            }
            Codec::External { ratio, .. } => CodecParams::external(*ratio),
        }
    }

    /// Same backend with a different rate parameter.
    pub fn with_theta(&self, theta: f64) -> Self {
        match self {
            Codec::Internal { block_size, .. } => Codec::Internal { theta, block_size: *block_size },
            Codec::External { tool, .. } => Codec::External { tool: tool.clone(), ratio: theta },
        }
    }

    pub fn compress(&self, img: &Image) -> Result<Packet> {
        match self {
            Codec::Internal { theta, block_size } => block::encode(img, *theta, *block_size),
            Codec::External { tool, ratio } => tool.encode(img, *ratio),
        }
    }

    pub fn decompress(&self, pkt: &Packet) -> Result<Image> {
        match self {
            Codec::Internal { .. } => block::decode(pkt.bytes()),
            Codec::External { tool, .. } => tool.decode(pkt),
        }
    }
}

/// Compresses with the backend selected by `p`.
pub fn compress(img: &Image, p: &CodecParams) -> Result<Packet> {
    Codec::from_params(p)?.compress(img)
}

/// Decompresses a self-describing internal-codec packet.
pub fn decompress(pkt: &Packet) -> Result<Image> {
    block::decode(pkt.bytes())
}

/// Finds the finest quantizer whose packet fits in `8 * N / ratio` bits.
///
/// For the external codec the ratio is passed straight to the tool and the
/// returned theta is the ratio itself.
pub fn compress_to_ratio(img: &Image, ratio: f64, codec: &Codec) -> Result<(Packet, f64)> {
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(Error::InvalidConfig(format!("compression ratio must exceed 1, got {ratio}")));
    }
    if let Codec::External { tool, .. } = codec {
        return Ok((tool.encode(img, ratio)?, ratio));
    }
    let budget = 8.0 * img.len() as f64 / ratio;
    let cost = |theta: f64| -> Result<(Packet, bool)> {
        let pkt = codec.with_theta(theta).compress(img)?;
        let fits = pkt.bit_cost() as f64 <= budget;
        Ok((pkt, fits))
    };

    // Bracket: `hi` fits the budget, `lo` does not.
    let mut hi = 1.0;
    let (mut best, mut fits) = cost(hi)?;
    let mut steps = 0;
    while !fits {
        hi *= 2.0;
        steps += 1;
        if steps > 64 {
            return Err(Error::Rate(format!(
                "{} bits needed even at theta {hi}, budget {budget:.0}",
                best.bit_cost()
            )));
        }
        (best, fits) = cost(hi)?;
    }
    let mut lo = hi / 2.0;
    loop {
        let (pkt, f) = cost(lo)?;
        if !f {
            break;
        }
        best = pkt;
        hi = lo;
        lo /= 2.0;
        if lo < 1e-6 {
            // near-lossless already fits
            return Ok((best, hi));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi / lo <= RATE_STEP {
            break;
        }
        let mid = (lo * hi).sqrt();
        let (pkt, f) = cost(mid)?;
        if f {
            hi = mid;
            best = pkt;
        } else {
            lo = mid;
        }
    }
    Ok((best, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn textured(h: usize, w: usize, seed: u64) -> Image {
        let mut state = seed;
        Image::from_fn(h, w, |r, c| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let noise = ((state >> 40) % 64) as f64;
            (r as f64 * 3.0 + (c as f64 * 0.4).sin() * 60.0 + noise).clamp(0.0, 255.0)
        })
        .unwrap()
    }

    #[test]
    fn constant_image_round_trip_is_exact() {
        let img = Image::filled(8, 8, 128.0).unwrap();
        let pkt = compress(&img, &CodecParams::internal(10.0)).unwrap();
        assert_eq!(decompress(&pkt).unwrap(), img);
    }

    #[test]
    fn compression_is_deterministic() {
        let img = textured(40, 33, 7);
        let p = CodecParams::internal(6.0);
        assert_eq!(compress(&img, &p).unwrap(), compress(&img, &p).unwrap());
    }

    #[test]
    fn near_lossless_limit() {
        let img = textured(32, 32, 99);
        let back = decompress(&compress(&img, &CodecParams::internal(1e-6)).unwrap()).unwrap();
        let mse = img.mse(&back);
        let psnr = 10.0 * (255.0f64 * 255.0 / mse).log10();
        assert!(psnr >= 50.0, "psnr {psnr}");
    }

    #[test]
    fn bit_cost_counts_bytes() {
        let pkt = compress(&textured(16, 16, 1), &CodecParams::internal(4.0)).unwrap();
        assert_eq!(pkt.bit_cost(), 8 * pkt.bytes().len() as u64);
    }

    #[test]
    fn corrupt_packets_fail_to_decode() {
        let pkt = compress(&textured(24, 24, 3), &CodecParams::internal(3.0)).unwrap();
        let bytes = pkt.bytes();
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            let r = decompress(&Packet::new(bytes[..cut].to_vec()));
            assert!(matches!(r, Err(Error::Decode(_))), "cut at {cut}");
        }
        let mut bad_magic = bytes.to_vec();
        bad_magic[0] = b'X';
        assert!(matches!(decompress(&Packet::new(bad_magic)), Err(Error::Decode(_))));
        let mut extra = bytes.to_vec();
        extra.push(0);
        assert!(matches!(decompress(&Packet::new(extra)), Err(Error::Decode(_))));
    }

    #[test]
    fn rejects_bad_params() {
        let img = Image::filled(4, 4, 1.0).unwrap();
        assert!(compress(&img, &CodecParams::internal(0.0)).is_err());
        let p = CodecParams { block_size: 1, ..CodecParams::internal(1.0) };
        assert!(compress(&img, &p).is_err());
    }

    #[test]
    fn rate_targeting_respects_budget() {
        let img = textured(64, 64, 5);
        let codec = Codec::from_params(&CodecParams::internal(1.0)).unwrap();
        for ratio in [4.0, 10.0, 25.0] {
            let (pkt, theta) = compress_to_ratio(&img, ratio, &codec).unwrap();
            let budget = 8.0 * 64.0 * 64.0 / ratio;
            assert!(pkt.bit_cost() as f64 <= budget);
            let finer = codec.with_theta(theta / RATE_STEP).compress(&img).unwrap();
            assert!(finer.bit_cost() as f64 > budget, "ratio {ratio}");
            assert_eq!(block::parse_header(pkt.bytes()).unwrap().0.theta, theta);
        }
    }

    #[test]
    fn constant_image_meets_tiny_ratio() {
        let img = Image::filled(32, 32, 77.0).unwrap();
        let codec = Codec::from_params(&CodecParams::internal(1.0)).unwrap();
        let (pkt, _) = compress_to_ratio(&img, 1.0001, &codec).unwrap();
        assert!(decompress(&pkt).unwrap().mse(&img) < 1e-9);
    }

    #[test]
    fn unreachable_budget_is_rate_error() {
        let img = Image::filled(2, 2, 10.0).unwrap();
        let codec = Codec::from_params(&CodecParams::internal(1.0)).unwrap();
        assert!(matches!(compress_to_ratio(&img, 50.0, &codec), Err(Error::Rate(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn second_round_trip_is_a_fixed_point(seed in any::<u64>(), theta in 0.5f64..40.0, bh in 1usize..4, bw in 1usize..4) {
            let img = textured(8 * bh, 8 * bw, seed);
            let p = CodecParams::internal(theta);
            let first = compress(&img, &p).unwrap();
            let y = decompress(&first).unwrap();
            let second = compress(&y, &p).unwrap();
            prop_assert_eq!(&second, &first);
            prop_assert_eq!(decompress(&second).unwrap(), y);
        }
    }
}
