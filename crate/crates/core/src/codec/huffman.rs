//! Canonical prefix codes built from symbol frequencies.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::bits::{BitReader, BitWriter};
use crate::error::{Error, Result};

pub const MAX_CODE_LEN: u8 = 24;

/// Code lengths per symbol, kept sorted by symbol so the serialized table is
/// deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTable {
    lengths: BTreeMap<u16, u8>,
}

impl CodeTable {
    pub fn from_frequencies(freqs: &BTreeMap<u16, u64>) -> Self {
        let mut lengths = BTreeMap::new();
        let used: Vec<(u16, u64)> = freqs.iter().filter(|(_, &f)| f > 0).map(|(&s, &f)| (s, f)).collect();
        match used.len() {
            0 => {}
            1 => {
                lengths.insert(used[0].0, 1);
            }
            _ => {
                let mut weights: Vec<u64> = used.iter().map(|&(_, f)| f).collect();
                loop {
                    let lens = huffman_lengths(&weights);
                    if lens.iter().all(|&l| l <= MAX_CODE_LEN) {
                        for (&(sym, _), &len) in used.iter().zip(&lens) {
                            lengths.insert(sym, len);
                        }
                        break;
                    }
                    // flatten the distribution until the tree is shallow enough
                    for w in &mut weights {
                        *w = (*w).div_ceil(2);
                    }
                }
            }
        }
        Self { lengths }
    }

    pub fn from_lengths(entries: impl IntoIterator<Item = (u16, u8)>) -> Result<Self> {
        let mut lengths = BTreeMap::new();
        for (sym, len) in entries {
            if len == 0 || len > MAX_CODE_LEN {
                return Err(Error::Decode(format!("invalid code length {len} for symbol {sym}")));
            }
            if lengths.insert(sym, len).is_some() {
                return Err(Error::Decode(format!("duplicate symbol {sym} in code table")));
            }
        }
        // Kraft inequality must hold for a prefix-free code
        let kraft: u64 = lengths.values().map(|&l| 1u64 << (MAX_CODE_LEN - l)).sum();
        if kraft > 1u64 << MAX_CODE_LEN {
            return Err(Error::Decode("code table violates the Kraft inequality".into()));
        }
        Ok(Self { lengths })
    }

    pub fn entries(&self) -> impl Iterator<Item = (u16, u8)> + '_ {
        self.lengths.iter().map(|(&s, &l)| (s, l))
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Canonical code assignment: shorter codes first, ties broken by symbol.
    fn canonical(&self) -> Vec<(u16, u8, u32)> {
        let mut order: Vec<(u8, u16)> = self.lengths.iter().map(|(&s, &l)| (l, s)).collect();
        order.sort_unstable();
        let mut out = Vec::with_capacity(order.len());
        let mut code = 0u32;
        let mut prev_len = 0u8;
        for (i, &(len, sym)) in order.iter().enumerate() {
            if i > 0 {
                code = (code + 1) << (len - prev_len);
            } else {
                code <<= len;
            }
            prev_len = len;
            out.push((sym, len, code));
        }
        out
    }

    pub fn encoder(&self) -> Encoder {
        let codes = self.canonical().into_iter().map(|(s, l, c)| (s, (c, l))).collect();
        Encoder { codes }
    }

    pub fn decoder(&self) -> Decoder {
        let canon = self.canonical();
        let mut first = [0u32; MAX_CODE_LEN as usize + 1];
        let mut count = [0u32; MAX_CODE_LEN as usize + 1];
        let mut offset = [0usize; MAX_CODE_LEN as usize + 1];
        for (i, &(_, len, code)) in canon.iter().enumerate() {
            let l = len as usize;
            if count[l] == 0 {
                first[l] = code;
                offset[l] = i;
            }
            count[l] += 1;
        }
        Decoder { first, count, offset, symbols: canon.iter().map(|&(s, _, _)| s).collect() }
    }
}

/// Code lengths of an optimal prefix code for `weights` (at least two).
fn huffman_lengths(weights: &[u64]) -> Vec<u8> {
    // nodes: leaves 0..n, internal nodes appended; parent links give depths
    let n = weights.len();
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
        weights.iter().enumerate().map(|(i, &w)| Reverse((w, i))).collect();
    let mut next = n;
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((wa + wb, next)));
        next += 1;
    }
    let mut depth = vec![0u32; 2 * n - 1];
    for node in (0..next - 1).rev() {
        depth[node] = depth[parent[node]] + 1;
    }
    depth[..n].iter().map(|&d| d.min(255) as u8).collect()
}

pub struct Encoder {
    codes: BTreeMap<u16, (u32, u8)>,
}

impl Encoder {
    pub fn write(&self, w: &mut BitWriter, symbol: u16) {
        let (code, len) = self.codes[&symbol];
        w.write(u64::from(code), u32::from(len));
    }

    pub fn code_len(&self, symbol: u16) -> u8 {
        self.codes[&symbol].1
    }
}

pub struct Decoder {
    first: [u32; MAX_CODE_LEN as usize + 1],
    count: [u32; MAX_CODE_LEN as usize + 1],
    offset: [usize; MAX_CODE_LEN as usize + 1],
    symbols: Vec<u16>,
}

impl Decoder {
    pub fn read(&self, r: &mut BitReader<'_>) -> Result<u16> {
        let mut code = 0u32;
        for len in 1..=MAX_CODE_LEN as usize {
            code = (code << 1) | r.read_bit()?;
            if self.count[len] > 0 && code >= self.first[len] && code - self.first[len] < self.count[len] {
                return Ok(self.symbols[self.offset[len] + (code - self.first[len]) as usize]);
            }
        }
        Err(Error::Decode("invalid prefix code".into()))
    }
}
