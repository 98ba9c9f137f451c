//! Shift-based holographic compression of grayscale images.
//!
//! A source image is stored as `K` distinct compressed packets, each the
//! standard compression of a shifted copy of the image. Any subset of `m`
//! packets reconstructs the image by back-shifting and averaging the decoded
//! packets, with quality that depends mainly on `m`. The [`optimizer`] module
//! tunes the packets with ADMM for the best average `m`-packet reconstruction.

pub mod codec;
pub mod container;
pub mod error;
pub mod evaluation;
pub mod holographic;
pub mod image;
pub mod optimizer;
pub mod pipeline;
pub mod shift;

pub use codec::{compress, compress_to_ratio, decompress, Codec, CodecId, CodecParams, Packet};
pub use container::{load_packet_set, save_packet_set};
pub use error::{Error, Result};
pub use evaluation::{enumerate_subsets, evaluate, psnr, psnr_order_curves, subset_mse, EvaluationReport};
pub use holographic::{encode_baseline, encode_duplicate, reconstruct, ModeTag, PacketSet};
pub use image::{read_pgm, write_pgm, Image};
pub use optimizer::{default_params, optimize, z_update, CostTrace, OptimizerParams, Profile};
pub use pipeline::{encode_image, EncodeConfig, EncodeOutput, Method, Overrides};
pub use shift::{apply_inverse_shift, apply_shift, standard_shift_grid, ShiftMode, ShiftSpec};
