//! Quality and diversity statistics over packet subsets.
//!
//! For each subset size `m` the report carries the mean and population
//! variance of the per-subset MSE, the matching PSNR mean/std in dB, and the
//! two holographic property verdicts: sigma-similar usefulness
//! (`var_mse <= sigma^2`) and progressive refinement on average (mean MSE
//! strictly decreasing in `m`).

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::codec::{Codec, CodecParams};
use crate::error::{Error, Result};
use crate::holographic::{average_subset, ModeTag, PacketSet};
use crate::image::Image;

pub const PEAK: f64 = 255.0;

/// Largest `K` for which all `K!` packet orders are enumerated.
pub const MAX_CURVE_K: usize = 9;

/// PSNR in dB for 8-bit data; zero MSE maps to `+inf`.
pub fn psnr(mse: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn mse_for_psnr(db: f64) -> f64 {
    PEAK * PEAK * 10f64.powf(-db / 10.0)
}

/// All `m`-combinations of `1..=k` as strictly increasing tuples, in
/// lexicographic order.
pub fn enumerate_subsets(k: usize, m: usize) -> Result<Vec<Vec<usize>>> {
    if m == 0 || m > k {
        return Err(Error::InvalidConfig(format!("subset size {m} outside 1..={k}")));
    }
    Ok(Combinations::new(k, m).collect())
}

/// Lexicographic iterator over `m`-combinations of `1..=k`.
pub struct Combinations {
    k: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(k: usize, m: usize) -> Self {
        let current = (m <= k).then(|| (1..=m).collect());
        Self { k, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        let m = next.len();
        // rightmost position that can still be incremented
        let mut i = m;
        while i > 0 && next[i - 1] == self.k - m + i {
            i -= 1;
        }
        if i > 0 {
            next[i - 1] += 1;
            for j in i..m {
                next[j] = next[j - 1] + 1;
            }
            self.current = Some(next);
        }
        Some(out)
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// MSE over the original support of the reconstruction from a 1-based subset.
pub fn subset_mse(x: &Image, ps: &PacketSet, indices: &[usize]) -> Result<f64> {
    let rec = crate::holographic::reconstruct(ps, indices)?;
    check_dims(x, ps)?;
    Ok(x.mse(&rec))
}

fn check_dims(x: &Image, ps: &PacketSet) -> Result<()> {
    if x.dims() != ps.original_dims {
        return Err(Error::InvalidInput(format!(
            "reference image is {:?} but the packet set encodes {:?}",
            x.dims(),
            ps.original_dims
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetRecord {
    pub indices: Vec<usize>,
    pub mse: f64,
    pub psnr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetStats {
    pub m: usize,
    pub mean_mse: f64,
    pub var_mse: f64,
    pub mean_psnr: f64,
    pub std_psnr: f64,
    pub per_subset: Vec<SubsetRecord>,
}

/// Running mean; exact when all values are equal.
fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    for (j, v) in values.enumerate() {
        acc += (v - acc) / (j + 1) as f64;
    }
    acc
}

impl SubsetStats {
    fn from_records(m: usize, per_subset: Vec<SubsetRecord>) -> Self {
        let mean_mse = mean(per_subset.iter().map(|r| r.mse));
        let var_mse = mean(per_subset.iter().map(|r| (r.mse - mean_mse).powi(2)));
        let (mean_psnr, std_psnr) = if per_subset.iter().all(|r| r.psnr.is_finite()) {
            let mu = mean(per_subset.iter().map(|r| r.psnr));
            let var = mean(per_subset.iter().map(|r| (r.psnr - mu).powi(2)));
            (mu, var.sqrt())
        } else if per_subset.iter().all(|r| r.psnr.is_infinite()) {
            (f64::INFINITY, 0.0)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Self { m, mean_mse, var_mse, mean_psnr, std_psnr, per_subset }
    }
}

/// Echo of how the evaluated set was produced.
#[derive(Debug, Clone, Serialize)]
pub struct ReportConfig {
    pub k: usize,
    pub height: usize,
    pub width: usize,
    pub codec: CodecParams,
    pub mode_tag: ModeTag,
    /// Per-packet payload rate in bits per original pixel.
    pub packet_bpp: Vec<f64>,
    /// `8 / mean(packet_bpp)`.
    pub achieved_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub config: ReportConfig,
    pub sigma: f64,
    pub per_m: Vec<SubsetStats>,
    /// Mean MSE for `m = 1..=K`.
    pub mean_mse_sequence: Vec<f64>,
    pub progressive_refinement: bool,
    /// `var_mse <= sigma^2`, per `m = 1..=K`.
    pub sigma_similarity: Vec<bool>,
}

impl EvaluationReport {
    pub fn stats(&self, m: usize) -> &SubsetStats {
        &self.per_m[m - 1]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per `(m, subset)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,subset,mse,psnr\n");
        for s in &self.per_m {
            for r in &s.per_subset {
                let idx: Vec<String> = r.indices.iter().map(usize::to_string).collect();
                writeln!(out, "{},{},{},{}", s.m, idx.join(" "), r.mse, r.psnr).unwrap();
            }
        }
        out
    }
}

/// True iff the sequence is strictly decreasing.
pub fn is_progressive(mean_mse: &[f64]) -> bool {
    mean_mse.windows(2).all(|w| w[1] < w[0])
}

pub fn evaluate(x: &Image, ps: &PacketSet, sigma: f64) -> Result<EvaluationReport> {
    evaluate_with(x, ps, sigma, &Codec::from_params(&ps.codec)?)
}

pub fn evaluate_with(x: &Image, ps: &PacketSet, sigma: f64, codec: &Codec) -> Result<EvaluationReport> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::InvalidConfig(format!("sigma must be non-negative, got {sigma}")));
    }
    check_dims(x, ps)?;
    let back = ps.decode_all(codec)?;
    let k = ps.k();
    let per_m: Vec<SubsetStats> = (1..=k)
        .map(|m| {
            let records = Combinations::new(k, m)
                .map(|subset| {
                    let zero_based: Vec<usize> = subset.iter().map(|i| i - 1).collect();
                    let mse = x.mse(&average_subset(&back, &zero_based));
                    SubsetRecord { indices: subset, mse, psnr: psnr(mse) }
                })
                .collect();
            SubsetStats::from_records(m, records)
        })
        .collect();
    let mean_mse_sequence: Vec<f64> = per_m.iter().map(|s| s.mean_mse).collect();
    let n = ps.pixel_count() as f64;
    let packet_bpp: Vec<f64> = ps.packets.iter().map(|p| p.bit_cost() as f64 / n).collect();
    let mean_bpp = packet_bpp.iter().sum::<f64>() / k as f64;
    Ok(EvaluationReport {
        config: ReportConfig {
            k,
            height: ps.original_dims.0,
            width: ps.original_dims.1,
            codec: ps.codec,
            mode_tag: ps.mode_tag,
            packet_bpp,
            achieved_ratio: 8.0 / mean_bpp,
        },
        sigma,
        progressive_refinement: is_progressive(&mean_mse_sequence),
        sigma_similarity: per_m.iter().map(|s| s.var_mse <= sigma * sigma).collect(),
        mean_mse_sequence,
        per_m,
    })
}

/// PSNR of prefix reconstructions for every order of appending packets.
#[derive(Debug, Clone)]
pub struct OrderCurves {
    pub k: usize,
    /// `curves[o][m - 1]` is the PSNR after appending `m` packets in order `o`.
    pub curves: Vec<Vec<f64>>,
    pub orders: Vec<Vec<usize>>,
}

impl OrderCurves {
    /// CSV with columns `order_id,m,psnr`; `order_id` counts from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order_id,m,psnr\n");
        for (o, curve) in self.curves.iter().enumerate() {
            for (m, p) in curve.iter().enumerate() {
                writeln!(out, "{},{},{}", o + 1, m + 1, p).unwrap();
            }
        }
        out
    }

    pub fn row_count(&self) -> usize {
        self.curves.iter().map(Vec::len).sum()
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

pub fn psnr_order_curves(x: &Image, ps: &PacketSet) -> Result<OrderCurves> {
    psnr_order_curves_with(x, ps, &Codec::from_params(&ps.codec)?)
}

pub fn psnr_order_curves_with(x: &Image, ps: &PacketSet, codec: &Codec) -> Result<OrderCurves> {
    let k = ps.k();
    if k > MAX_CURVE_K {
        return Err(Error::InvalidConfig(format!("{k}! packet orders is too many (limit K = {MAX_CURVE_K})")));
    }
    check_dims(x, ps)?;
    let back = ps.decode_all(codec)?;
    // subsets are cached by bitmask: equal sets give equal PSNR across orders
    let mut cache: HashMap<u32, f64> = HashMap::new();
    let mut order: Vec<usize> = (1..=k).collect();
    let mut curves = Vec::new();
    let mut orders = Vec::new();
    loop {
        let mut mask = 0u32;
        let mut curve = Vec::with_capacity(k);
        for &i in &order {
            mask |= 1 << (i - 1);
            let p = *cache.entry(mask).or_insert_with(|| {
                let subset: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).collect();
                psnr(x.mse(&average_subset(&back, &subset)))
            });
            curve.push(p);
        }
        curves.push(curve);
        orders.push(order.clone());
        if !next_permutation(&mut order) {
            break;
        }
    }
    Ok(OrderCurves { k, curves, orders })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_lexicographic() {
        assert_eq!(
            enumerate_subsets(4, 2).unwrap(),
            vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]
        );
        assert_eq!(enumerate_subsets(4, 4).unwrap(), vec![vec![1, 2, 3, 4]]);
        assert_eq!(enumerate_subsets(9, 1).unwrap().len(), 9);
        assert!(matches!(enumerate_subsets(3, 0), Err(Error::InvalidConfig(_))));
        assert!(matches!(enumerate_subsets(3, 4), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn subset_counts_match_binomials() {
        for k in 1..=9 {
            for m in 1..=k {
                assert_eq!(enumerate_subsets(k, m).unwrap().len() as u64, binomial(k, m));
            }
        }
    }

    #[test]
    fn permutations_in_order() {
        let mut p = vec![1, 2, 3];
        let mut all = vec![p.clone()];
        while next_permutation(&mut p) {
            all.push(p.clone());
        }
        assert_eq!(all.len(), 6);
        assert_eq!(all[1], vec![1, 3, 2]);
        assert_eq!(all[5], vec![3, 2, 1]);
    }

    #[test]
    fn psnr_conversions() {
        assert!(psnr(0.0).is_infinite());
        assert!((psnr(mse_for_psnr(29.73)) - 29.73).abs() < 1e-12);
        assert!((mse_for_psnr(29.73) - 69.2).abs() < 0.05);
    }

    #[test]
    fn progressive_requires_strict_decrease() {
        assert!(is_progressive(&[4.0, 3.0, 1.0]));
        assert!(!is_progressive(&[4.0, 4.0, 1.0]));
        assert!(!is_progressive(&[1.0, 2.0]));
    }
}
