//! End-to-end encoding for the four storage methods.

use serde::{Deserialize, Serialize};

use crate::codec::{compress_to_ratio, Codec};
use crate::error::{Error, Result};
use crate::holographic::{encode_baseline, encode_duplicate, PacketSet};
use crate::image::Image;
use crate::optimizer::{default_params, optimize, CostTrace, OptimizerParams, Profile};
use crate::shift::{apply_shift, standard_shift_grid, ShiftSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Duplicate,
    Baseline,
    Opt2,
    OptK,
}

/// Optional replacements for the published optimizer settings.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EncodeConfig {
    pub method: Method,
    pub k: usize,
    /// Target compression ratio per packet (raw size is 8 bits per pixel).
    pub ratio: f64,
    /// Defaults to the preset grid for `k`.
    pub shifts: Option<Vec<ShiftSpec>>,
    pub overrides: Overrides,
}

impl EncodeConfig {
    pub fn new(method: Method, k: usize, ratio: f64) -> Self {
        Self { method, k, ratio, shifts: None, overrides: Overrides::default() }
    }
}

#[derive(Debug, Clone)]
pub struct EncodeOutput {
    pub packets: PacketSet,
    /// Rate parameter chosen to meet the ratio on the first shifted image.
    pub theta: f64,
    pub params: Option<OptimizerParams>,
    pub trace: Option<CostTrace>,
}

/// Encodes `x` as `cfg.k` packets. The rate parameter is fitted once to the
/// first (shifted) image and reused for every packet and iteration.
pub fn encode_image(x: &Image, cfg: &EncodeConfig, codec: &Codec) -> Result<EncodeOutput> {
    if cfg.method == Method::Duplicate {
        let (_, theta) = compress_to_ratio(x, cfg.ratio, codec)?;
        let codec = codec.with_theta(theta);
        return Ok(EncodeOutput { packets: encode_duplicate(x, cfg.k, &codec)?, theta, params: None, trace: None });
    }

    let shifts = match &cfg.shifts {
        Some(s) => s.clone(),
        None => standard_shift_grid(cfg.k)?,
    };
    if shifts.len() != cfg.k {
        return Err(Error::InvalidConfig(format!("{} shifts given for K = {}", shifts.len(), cfg.k)));
    }
    let (_, theta) = compress_to_ratio(&apply_shift(x, &shifts[0])?, cfg.ratio, codec)?;
    let codec = codec.with_theta(theta);

    let profile = match cfg.method {
        Method::Baseline => {
            return Ok(EncodeOutput { packets: encode_baseline(x, &shifts, &codec)?, theta, params: None, trace: None })
        }
        Method::Opt2 => Profile::Opt2,
        Method::OptK => Profile::OptK,
        Method::Duplicate => unreachable!(),
    };
    let mut p = default_params(profile, cfg.k, x.len(), cfg.ratio, theta);
    let o = cfg.overrides;
    p.mu = o.mu.unwrap_or(p.mu);
    p.lambda = o.lambda.unwrap_or(p.lambda);
    p.beta = o.beta.unwrap_or(p.beta);
    p.iterations = o.iterations.unwrap_or(p.iterations);
    let (packets, trace) = optimize(x, &shifts, &codec, &p)?;
    Ok(EncodeOutput { packets, theta, params: Some(p), trace: Some(trace) })
}
