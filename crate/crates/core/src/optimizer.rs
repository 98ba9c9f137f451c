//! ADMM optimization of packet sets for `m`-packet reconstructions.
//!
//! The relaxed rate-distortion cost
//!
//! ```text
//! sum_i R(y_i) + mu * mean_{|I|=m} D(x; y_I) + lambda * mean_i D(x; y_i)
//! ```
//!
//! is split with auxiliaries `z_i = y_i` and scaled duals `u_i`. Each sweep
//! visits the packets in order; for packet `i` the codec step compresses
//! `z_i - u_i` at the frozen rate parameter, and the quadratic step has the
//! closed form
//!
//! ```text
//! z_i = (N b y~_i + (l/K) S_i x + c S_i w_i) / (N b + l/K + c C(K-1, m-1)),
//! c   = mu / (m^2 C(K, m)),
//! w_i = C(K-1, m-1) m x - C(K-2, m-2) sum_{j != i} S_j^T z_j,
//! ```
//!
//! where each `z_j` is its most recent value (Gauss-Seidel). With
//! replicate-pad shifts `S_j^T` crops to the original support, and the whole
//! quadratic step is evaluated there and then re-padded with `S_i`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::codec::Codec;
use crate::error::{Error, Result};
use crate::evaluation::{binomial, Combinations};
use crate::holographic::{average_subset, validate_shifts, ModeTag, PacketSet};
use crate::image::Image;
use crate::shift::{apply_inverse_shift, apply_shift, ShiftSpec};

pub const DEFAULT_ITERATIONS: usize = 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// Optimize pairs of packets (`m = 2`).
    Opt2,
    /// Optimize the reconstruction from all packets (`m = K`).
    OptK,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub m: usize,
    pub k: usize,
    pub mu: f64,
    pub lambda: f64,
    pub beta: f64,
    pub iterations: usize,
    /// Codec rate parameter, held fixed for every iteration.
    pub theta: f64,
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k > 255 {
            return Err(Error::InvalidConfig(format!("K must be in 2..=255, got {}", self.k)));
        }
        if self.m < 2 || self.m > self.k {
            return Err(Error::InvalidConfig(format!("m must be in 2..={}, got {}", self.k, self.m)));
        }
        if !(self.mu >= 0.0 && self.lambda >= 0.0) || !self.mu.is_finite() || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("mu and lambda must be finite and non-negative".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta must be positive, got {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("at least one iteration is required".into()));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidConfig(format!("theta must be positive, got {}", self.theta)));
        }
        Ok(())
    }

    /// `mu / (m^2 C(K, m))`, the weight of the `m`-packet residual term.
    fn combination_weight(&self) -> f64 {
        self.mu / ((self.m * self.m) as f64 * binomial(self.k, self.m) as f64)
    }
}

fn is_ratio(ratio: f64, target: f64) -> bool {
    (ratio - target).abs() < 1e-9 * target
}

/// Published parameter settings for `N` pixels.
///
/// Ratio 1:50 with `K = 4` or `K = 9` and ratio 1:25 with `K = 4` have their
/// own settings; any other combination uses the 1:50 formulas.
pub fn default_params(profile: Profile, k: usize, n: usize, ratio: f64, theta: f64) -> OptimizerParams {
    let kf = k as f64;
    let nf = n as f64;
    let ratio25 = k == 4 && is_ratio(ratio, 25.0);
    let nine50 = k == 9 && is_ratio(ratio, 50.0);
    match profile {
        Profile::Opt2 => OptimizerParams {
            m: 2,
            k,
            mu: 25.0 * kf * binomial(k, 2) as f64,
            lambda: if nine50 { kf * kf } else { 5.0 * kf * kf },
            beta: if ratio25 { 65.0 / nf } else { 90.0 / nf },
            iterations: DEFAULT_ITERATIONS,
            theta,
        },
        Profile::OptK => OptimizerParams {
            m: k,
            k,
            mu: 125.0 * kf,
            lambda: 2.5 * kf * kf,
            beta: if ratio25 { 120.0 / nf } else { 50.0 / nf },
            iterations: DEFAULT_ITERATIONS,
            theta,
        },
    }
}

/// `w_i` from the back-shifted auxiliaries, using the per-pair counts of the
/// combinations that contain `i`: `C(K-1, m-1)` copies of `m x` minus
/// `C(K-2, m-2)` copies of each other packet. `back_z[i]` is ignored.
pub fn aggregated_w(i: usize, x: &Image, back_z: &[Image], k: usize, m: usize) -> Image {
    let (own, shared) = if m == k {
        (1.0, 1.0)
    } else {
        (binomial(k - 1, m - 1) as f64, binomial(k - 2, m - 2) as f64)
    };
    let mut w = x.scale(own * m as f64);
    let mut others = Image::filled(x.height(), x.width(), 0.0).expect("non-empty");
    for (j, z) in back_z.iter().enumerate() {
        if j != i {
            for (o, v) in others.samples_mut().iter_mut().zip(z.samples()) {
                *o += v;
            }
        }
    }
    for (a, o) in w.samples_mut().iter_mut().zip(others.samples()) {
        *a -= shared * o;
    }
    w
}

/// Iterates of the ADMM loop. All images live in their packet's shifted domain.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub z_hat: Vec<Image>,
    pub u: Vec<Image>,
    pub y_hat: Vec<Image>,
    pub t: usize,
}

impl AdmmState {
    /// `z_i = S_i x`, `u_i = 0`.
    pub fn init(x: &Image, shifts: &[ShiftSpec]) -> Result<Self> {
        let z_hat: Vec<Image> = shifts.iter().map(|s| apply_shift(x, s)).collect::<Result<_>>()?;
        let u: Vec<Image> = z_hat.iter().map(|z| Image::filled(z.height(), z.width(), 0.0)).collect::<Result<_>>()?;
        Ok(Self { y_hat: u.clone(), z_hat, u, t: 0 })
    }
}

/// Closed-form minimizer of the quadratic step for packet `i`.
///
/// `state.z_hat[j]` must hold the latest auxiliary of every other packet.
pub fn z_update(
    i: usize,
    x: &Image,
    y_tilde_i: &Image,
    state: &AdmmState,
    p: &OptimizerParams,
    shifts: &[ShiftSpec],
) -> Result<Image> {
    let dims = x.dims();
    let back_z: Vec<Image> = state
        .z_hat
        .iter()
        .zip(shifts)
        .enumerate()
        .map(|(j, (z, s))| if j == i { Ok(x.clone()) } else { apply_inverse_shift(z, s, dims) })
        .collect::<Result<_>>()?;
    let w = aggregated_w(i, x, &back_z, p.k, p.m);
    let y_back = apply_inverse_shift(y_tilde_i, &shifts[i], dims)?;
    apply_shift(&combine(&y_back, x, &w, p, x.len()), &shifts[i])
}

fn combine(y_back: &Image, x: &Image, w: &Image, p: &OptimizerParams, n: usize) -> Image {
    let nb = n as f64 * p.beta;
    let lk = p.lambda / p.k as f64;
    let c = p.combination_weight();
    let den = nb + lk + c * binomial(p.k - 1, p.m - 1) as f64;
    let samples = y_back
        .samples()
        .iter()
        .zip(x.samples())
        .zip(w.samples())
        .map(|((y, xv), wv)| (nb * y + lk * xv + c * wv) / den)
        .collect();
    Image::new(x.height(), x.width(), samples).expect("same dims as x")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostRecord {
    pub iteration: usize,
    pub total_bits: u64,
    pub avg_m_mse: f64,
    pub avg_1_mse: f64,
    /// `total_bits + mu * avg_m_mse + lambda * avg_1_mse`.
    pub lagrangian: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CostTrace {
    pub records: Vec<CostRecord>,
}

impl CostTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,total_bits,avg_m_mse,avg_1_mse,lagrangian\n");
        for r in &self.records {
            writeln!(out, "{},{},{},{},{}", r.iteration, r.total_bits, r.avg_m_mse, r.avg_1_mse, r.lagrangian).unwrap();
        }
        out
    }

    pub fn first(&self) -> Option<&CostRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&CostRecord> {
        self.records.last()
    }
}

fn cost_record(iteration: usize, x: &Image, back_y: &[Image], total_bits: u64, p: &OptimizerParams) -> CostRecord {
    let mean_over = |m: usize| {
        let (sum, count) = Combinations::new(p.k, m).fold((0.0, 0usize), |(s, c), subset| {
            let zero_based: Vec<usize> = subset.iter().map(|i| i - 1).collect();
            (s + x.mse(&average_subset(back_y, &zero_based)), c + 1)
        });
        sum / count as f64
    };
    let avg_m_mse = mean_over(p.m);
    let avg_1_mse = mean_over(1);
    CostRecord {
        iteration,
        total_bits,
        avg_m_mse,
        avg_1_mse,
        lagrangian: total_bits as f64 + p.mu * avg_m_mse + p.lambda * avg_1_mse,
    }
}

/// Runs the packet-sequential ADMM sweep for `p.iterations` iterations and
/// returns the last iteration's packets with the per-iteration cost trace.
pub fn optimize(x: &Image, shifts: &[ShiftSpec], codec: &Codec, p: &OptimizerParams) -> Result<(PacketSet, CostTrace)> {
    p.validate()?;
    if p.m > 127 {
        return Err(Error::InvalidConfig(format!("m = {} cannot be recorded in the mode tag", p.m)));
    }
    validate_shifts(shifts)?;
    if shifts.len() != p.k {
        return Err(Error::InvalidConfig(format!("{} shifts given for K = {}", shifts.len(), p.k)));
    }
    let codec = codec.with_theta(p.theta);
    let dims = x.dims();
    let mut state = AdmmState::init(x, shifts)?;
    let mut packets = Vec::with_capacity(p.k);
    let mut trace = CostTrace::default();

    for t in 1..=p.iterations {
        state.t = t;
        packets.clear();
        for i in 0..p.k {
            let tag = |e: Error| Error::Optimizer { iteration: t, packet: i + 1, source: Box::new(e) };
            let z_tilde = state.z_hat[i].sub(&state.u[i]);
            let pkt = codec.compress(&z_tilde).map_err(tag)?;
            let y_hat = codec.decompress(&pkt).map_err(tag)?;
            if y_hat.dims() != z_tilde.dims() {
                return Err(tag(Error::Decode(format!(
                    "codec returned {:?} for a {:?} input",
                    y_hat.dims(),
                    z_tilde.dims()
                ))));
            }
            let y_tilde = y_hat.add(&state.u[i]);
            let z_new = z_update(i, x, &y_tilde, &state, p, shifts)?;
            state.u[i] = state.u[i].add(&y_hat.sub(&z_new));
            state.z_hat[i] = z_new;
            state.y_hat[i] = y_hat;
            packets.push(pkt);
        }
        let back_y: Vec<Image> = state
            .y_hat
            .iter()
            .zip(shifts)
            .map(|(y, s)| apply_inverse_shift(y, s, dims))
            .collect::<Result<_>>()?;
        let bits = packets.iter().map(|p| p.bit_cost()).sum();
        trace.records.push(cost_record(t, x, &back_y, bits, p));
    }

    let ps = PacketSet {
        original_dims: dims,
        shifts: shifts.to_vec(),
        codec: codec.params(),
        packets,
        mode_tag: ModeTag::OptimizedFor(p.m as u8),
    };
    Ok((ps, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::CodecParams;
    use crate::holographic::encode_baseline;
    use crate::shift::standard_shift_grid;

    fn scene(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, |r, c| {
            let (r, c) = (r as f64, c as f64);
            (120.0 + 60.0 * (r * 0.23).sin() + 50.0 * (c * 0.41).cos() + if r > c { 30.0 } else { 0.0 })
                .clamp(0.0, 255.0)
        })
        .unwrap()
    }

    #[test]
    fn published_settings() {
        let n = 256 * 256;
        let p = default_params(Profile::Opt2, 4, n, 50.0, 1.0);
        assert_eq!((p.m, p.mu, p.lambda), (2, 600.0, 80.0));
        assert_eq!(p.beta, 90.0 / n as f64);
        assert_eq!(p.iterations, 35);
        let p = default_params(Profile::OptK, 4, n, 50.0, 1.0);
        assert_eq!((p.m, p.mu, p.lambda), (4, 500.0, 40.0));
        assert_eq!(p.beta, 50.0 / n as f64);
        let p = default_params(Profile::Opt2, 9, n, 50.0, 1.0);
        assert_eq!((p.mu, p.lambda), (25.0 * 9.0 * 36.0, 81.0));
        assert_eq!(default_params(Profile::Opt2, 4, n, 25.0, 1.0).beta, 65.0 / n as f64);
        assert_eq!(default_params(Profile::OptK, 4, n, 25.0, 1.0).beta, 120.0 / n as f64);
        // unlisted cell falls back to the 1:50 formulas
        let p = default_params(Profile::OptK, 9, n, 25.0, 1.0);
        assert_eq!((p.mu, p.lambda, p.beta), (1125.0, 202.5, 50.0 / n as f64));
    }

    #[test]
    fn zero_weights_return_y_tilde() {
        let x = scene(10, 12);
        let shifts = vec![ShiftSpec::cyclic(0, 0), ShiftSpec::cyclic(1, 2), ShiftSpec::cyclic(3, 1)];
        let state = AdmmState::init(&x, &shifts).unwrap();
        let p = OptimizerParams { m: 2, k: 3, mu: 0.0, lambda: 0.0, beta: 0.01, iterations: 1, theta: 1.0 };
        let y = Image::from_fn(10, 12, |r, c| (r * c) as f64).unwrap();
        let z = z_update(1, &x, &y, &state, &p, &shifts).unwrap();
        for (a, b) in z.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn large_lambda_pulls_toward_shifted_source() {
        let x = scene(8, 8);
        let shifts = vec![ShiftSpec::cyclic(0, 0), ShiftSpec::cyclic(2, 5)];
        let state = AdmmState::init(&x, &shifts).unwrap();
        let p = OptimizerParams { m: 2, k: 2, mu: 0.0, lambda: 1e12, beta: 1e-3, iterations: 1, theta: 1.0 };
        let y = Image::filled(8, 8, 0.0).unwrap();
        let z = z_update(1, &x, &y, &state, &p, &shifts).unwrap();
        let target = apply_shift(&x, &shifts[1]).unwrap();
        assert!(z.mse(&target) < 1e-10);
    }

    #[test]
    fn one_collapsed_iteration_equals_baseline() {
        let x = scene(24, 24);
        let shifts = standard_shift_grid(4).unwrap();
        let codec = Codec::from_params(&CodecParams::internal(12.0)).unwrap();
        let p = OptimizerParams { m: 4, k: 4, mu: 0.0, lambda: 0.0, beta: 1.0 / 576.0, iterations: 1, theta: 12.0 };
        let (ps, trace) = optimize(&x, &shifts, &codec, &p).unwrap();
        let base = encode_baseline(&x, &shifts, &codec).unwrap();
        assert_eq!(ps.packets, base.packets);
        assert_eq!(ps.mode_tag, ModeTag::OptimizedFor(4));
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn collapsed_iterations_reach_a_quantizer_fixed_point() {
        let x = scene(32, 32);
        let shifts = vec![ShiftSpec::cyclic(0, 0), ShiftSpec::cyclic(3, 3), ShiftSpec::cyclic(0, 5)];
        let codec = Codec::from_params(&CodecParams::internal(9.0)).unwrap();
        let mut last = None;
        for iterations in [3, 4] {
            let p = OptimizerParams { m: 3, k: 3, mu: 0.0, lambda: 0.0, beta: 0.001, iterations, theta: 9.0 };
            let (ps, _) = optimize(&x, &shifts, &codec, &p).unwrap();
            if let Some(prev) = last.replace(ps.packets.clone()) {
                assert_eq!(prev, ps.packets);
            }
        }
    }

    #[test]
    fn trace_has_one_record_per_iteration() {
        let x = scene(16, 16);
        let shifts = standard_shift_grid(4).unwrap();
        let codec = Codec::from_params(&CodecParams::internal(10.0)).unwrap();
        let p = default_params(Profile::Opt2, 4, x.len(), 50.0, 10.0);
        let p = OptimizerParams { iterations: 5, ..p };
        let (_, trace) = optimize(&x, &shifts, &codec, &p).unwrap();
        assert_eq!(trace.records.len(), 5);
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("iteration,total_bits,avg_m_mse,avg_1_mse,lagrangian\n1,"));
    }

    #[test]
    fn rejects_bad_params() {
        let x = scene(8, 8);
        let shifts = standard_shift_grid(4).unwrap();
        let codec = Codec::from_params(&CodecParams::internal(10.0)).unwrap();
        let good = default_params(Profile::OptK, 4, 64, 50.0, 10.0);
        for bad in [
            OptimizerParams { m: 1, ..good },
            OptimizerParams { m: 5, ..good },
            OptimizerParams { beta: 0.0, ..good },
            OptimizerParams { iterations: 0, ..good },
            OptimizerParams { k: 3, m: 3, ..good },
        ] {
            assert!(matches!(optimize(&x, &shifts, &codec, &bad), Err(Error::InvalidConfig(_))), "{bad:?}");
        }
    }
}
