//! Built-in block-transform codec.
//!
//! Pipeline: edge-replicated tiling, level shift by -128, orthonormal DCT-II per
//! tile, uniform quantization `round(c / theta)`, zigzag scan, DPCM of the DC
//! term, zero-run coding of the AC terms and one canonical prefix code shared
//! by all symbols. Levels are sent as a size category symbol followed by raw
//! amplitude bits.
//!
//! Packet layout (big-endian): `"HPK1"`, `u8 codec_id`, `u16 height`,
//! `u16 width`, `u16 block_size`, `f64 theta`, `u16 entry_count`, then
//! `entry_count` entries of `u16 symbol, u8 code_length` sorted by symbol,
//! then the MSB-first payload padded with zero bits to a byte boundary.

use std::collections::BTreeMap;

use super::bits::{BitReader, BitWriter};
use super::dct::{zigzag, Dct2};
use super::huffman::CodeTable;
use super::{CodecId, Packet};
use crate::error::{Error, Result};
use crate::image::Image;

pub const PACKET_MAGIC: &[u8; 4] = b"HPK1";
pub const HEADER_LEN: usize = 4 + 1 + 2 + 2 + 2 + 8 + 2;

const LEVEL_SHIFT: f64 = 128.0;
/// Largest supported size category; levels need `|q| < 2^MAX_CATEGORY`.
const MAX_CATEGORY: u32 = 48;
const SYM_EOB: u16 = 49;
const SYM_ZRL: u16 = 50;
const SYM_AC_BASE: u16 = 64;
const MAX_RUN: usize = 15;

fn ac_symbol(run: usize, cat: u32) -> u16 {
    SYM_AC_BASE + (run as u16) * 64 + cat as u16
}

fn category(v: i64) -> u32 {
    64 - v.unsigned_abs().leading_zeros()
}

fn amplitude_bits(v: i64, cat: u32) -> u64 {
    if v >= 0 {
        v as u64
    } else {
        (v + ((1i64 << cat) - 1)) as u64
    }
}

fn amplitude_value(bits: u64, cat: u32) -> i64 {
    if cat == 0 {
        0
    } else if bits >> (cat - 1) == 1 {
        bits as i64
    } else {
        bits as i64 - ((1i64 << cat) - 1)
    }
}

#[derive(Debug, Clone, Copy)]
enum Token {
    Dc(i64),
    Ac { run: usize, level: i64 },
    Zrl,
    Eob,
}

impl Token {
    fn symbol(self) -> u16 {
        match self {
            Token::Dc(d) => category(d) as u16,
            Token::Ac { run, level } => ac_symbol(run, category(level)),
            Token::Zrl => SYM_ZRL,
            Token::Eob => SYM_EOB,
        }
    }
}

/// Quantized coefficients for all tiles in raster order, each in zigzag order.
fn quantize_tiles(img: &Image, block: usize, theta: f64) -> Result<Vec<Vec<i64>>> {
    let (h, w) = img.dims();
    let (by, bx) = (h.div_ceil(block), w.div_ceil(block));
    let dct = Dct2::new(block);
    let scan = zigzag(block);
    let limit = (1i64 << (MAX_CATEGORY - 1)) as f64;
    let mut tiles = Vec::with_capacity(by * bx);
    let mut tile = vec![0.0; block * block];
    for ty in 0..by {
        for tx in 0..bx {
            for r in 0..block {
                let sr = (ty * block + r).min(h - 1);
                for c in 0..block {
                    let sc = (tx * block + c).min(w - 1);
                    tile[r * block + c] = img.get(sr, sc) - LEVEL_SHIFT;
                }
            }
            dct.forward(&mut tile);
            let mut q = Vec::with_capacity(block * block);
            for &idx in &scan {
                let v = (tile[idx] / theta).round();
                if !v.is_finite() || v.abs() >= limit {
                    return Err(Error::InvalidInput(format!(
                        "quantized coefficient {v} out of range; theta {theta} is too small"
                    )));
                }
                q.push(v as i64);
            }
            tiles.push(q);
        }
    }
    Ok(tiles)
}

fn tokenize(tiles: &[Vec<i64>]) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut prev_dc = 0i64;
    for q in tiles {
        tokens.push(Token::Dc(q[0] - prev_dc));
        prev_dc = q[0];
        let mut run = 0usize;
        for &level in &q[1..] {
            if level == 0 {
                run += 1;
                continue;
            }
            while run > MAX_RUN {
                tokens.push(Token::Zrl);
                run -= MAX_RUN + 1;
            }
            tokens.push(Token::Ac { run, level });
            run = 0;
        }
        if run > 0 {
            tokens.push(Token::Eob);
        }
    }
    tokens
}

pub fn encode(img: &Image, theta: f64, block: usize) -> Result<Packet> {
    if img.is_empty() {
        return Err(Error::InvalidInput("empty image".into()));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidConfig(format!("theta must be positive and finite, got {theta}")));
    }
    if !(2..=u16::MAX as usize).contains(&block) {
        return Err(Error::InvalidConfig(format!("block size {block} out of range")));
    }
    let (h, w) = img.dims();
    if h > u16::MAX as usize || w > u16::MAX as usize {
        return Err(Error::InvalidInput(format!("image {h}x{w} exceeds 65535 pixels per side")));
    }

    let tiles = quantize_tiles(img, block, theta)?;
    let tokens = tokenize(&tiles);
    let mut freqs = BTreeMap::new();
    for t in &tokens {
        *freqs.entry(t.symbol()).or_insert(0u64) += 1;
    }
    let table = CodeTable::from_frequencies(&freqs);
    let enc = table.encoder();

    let mut bytes = Vec::with_capacity(HEADER_LEN + 3 * table.len());
    bytes.extend_from_slice(PACKET_MAGIC);
    bytes.push(CodecId::InternalBlockDct.to_u8());
    bytes.extend_from_slice(&(h as u16).to_be_bytes());
    bytes.extend_from_slice(&(w as u16).to_be_bytes());
    bytes.extend_from_slice(&(block as u16).to_be_bytes());
    bytes.extend_from_slice(&theta.to_be_bytes());
    bytes.extend_from_slice(&(table.len() as u16).to_be_bytes());
    for (sym, len) in table.entries() {
        bytes.extend_from_slice(&sym.to_be_bytes());
        bytes.push(len);
    }

    let mut bw = BitWriter::new();
    for t in &tokens {
        enc.write(&mut bw, t.symbol());
        match *t {
            Token::Dc(d) => {
                let cat = category(d);
                bw.write(amplitude_bits(d, cat), cat);
            }
            Token::Ac { level, .. } => {
                let cat = category(level);
                bw.write(amplitude_bits(level, cat), cat);
            }
            Token::Zrl | Token::Eob => {}
        }
    }
    bytes.extend(bw.finish());
    Ok(Packet::new(bytes))
}

/// Parsed packet header.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketHeader {
    pub height: usize,
    pub width: usize,
    pub block_size: usize,
    pub theta: f64,
}

fn be_u16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

pub fn parse_header(bytes: &[u8]) -> Result<(PacketHeader, CodeTable, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Decode(format!("packet too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != PACKET_MAGIC {
        return Err(Error::Decode("bad packet magic".into()));
    }
    if CodecId::from_u8(bytes[4]) != Some(CodecId::InternalBlockDct) {
        return Err(Error::Decode(format!("unexpected codec id {}", bytes[4])));
    }
    let height = be_u16(bytes, 5) as usize;
    let width = be_u16(bytes, 7) as usize;
    let block_size = be_u16(bytes, 9) as usize;
    let theta = f64::from_be_bytes(bytes[11..19].try_into().unwrap());
    let count = be_u16(bytes, 19) as usize;
    if height == 0 || width == 0 || block_size < 2 || !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Decode("invalid packet header fields".into()));
    }
    let table_end = HEADER_LEN + 3 * count;
    if bytes.len() < table_end {
        return Err(Error::Decode("truncated code table".into()));
    }
    let entries = bytes[HEADER_LEN..table_end]
        .chunks_exact(3)
        .map(|e| (u16::from_be_bytes([e[0], e[1]]), e[2]));
    let table = CodeTable::from_lengths(entries)?;
    Ok((PacketHeader { height, width, block_size, theta }, table, table_end))
}

fn read_level(r: &mut BitReader<'_>, cat: u32) -> Result<i64> {
    if cat > MAX_CATEGORY {
        return Err(Error::Decode(format!("size category {cat} out of range")));
    }
    Ok(amplitude_value(r.read(cat)?, cat))
}

pub fn decode(bytes: &[u8]) -> Result<Image> {
    let (hdr, table, payload_at) = parse_header(bytes)?;
    let block = hdr.block_size;
    let (h, w) = (hdr.height, hdr.width);
    let (by, bx) = (h.div_ceil(block), w.div_ceil(block));
    let ncoef = block * block;
    let dec = table.decoder();
    let payload = &bytes[payload_at..];
    let mut r = BitReader::new(payload);
    let dct = Dct2::new(block);
    let scan = zigzag(block);

    let mut out = Image::filled(h, w, 0.0)?;
    let mut prev_dc = 0i64;
    let mut q = vec![0i64; ncoef];
    let mut tile = vec![0.0; ncoef];
    for ty in 0..by {
        for tx in 0..bx {
            q.iter_mut().for_each(|v| *v = 0);
            let sym = dec.read(&mut r)?;
            if sym as u32 > MAX_CATEGORY {
                return Err(Error::Decode(format!("expected DC symbol, got {sym}")));
            }
            prev_dc += read_level(&mut r, sym as u32)?;
            q[0] = prev_dc;
            let mut k = 1;
            while k < ncoef {
                match dec.read(&mut r)? {
                    SYM_EOB => break,
                    SYM_ZRL => k += MAX_RUN + 1,
                    s if s >= SYM_AC_BASE => {
                        let run = ((s - SYM_AC_BASE) / 64) as usize;
                        let cat = ((s - SYM_AC_BASE) % 64) as u32;
                        if run > MAX_RUN || cat == 0 {
                            return Err(Error::Decode(format!("invalid AC symbol {s}")));
                        }
                        k += run;
                        if k >= ncoef {
                            return Err(Error::Decode("run past end of block".into()));
                        }
                        q[k] = read_level(&mut r, cat)?;
                        k += 1;
                    }
                    s => return Err(Error::Decode(format!("unexpected symbol {s}"))),
                }
            }
            if k > ncoef {
                return Err(Error::Decode("run past end of block".into()));
            }
            tile.iter_mut().for_each(|v| *v = 0.0);
            for (i, &idx) in scan.iter().enumerate() {
                tile[idx] = q[i] as f64 * hdr.theta;
            }
            dct.inverse(&mut tile);
            for rr in 0..block {
                let row = ty * block + rr;
                if row >= h {
                    break;
                }
                for cc in 0..block {
                    let col = tx * block + cc;
                    if col >= w {
                        break;
                    }
                    out.set(row, col, tile[rr * block + cc] + LEVEL_SHIFT);
                }
            }
        }
    }
    if r.bytes_consumed() != payload.len() {
        return Err(Error::Decode(format!(
            "{} trailing payload bytes",
            payload.len() as isize - r.bytes_consumed() as isize
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_coding_round_trips() {
        for v in [-1025i64, -7, -1, 1, 2, 3, 255, 1 << 40] {
            let cat = category(v);
            assert_eq!(amplitude_value(amplitude_bits(v, cat), cat), v);
        }
        assert_eq!(category(0), 0);
        assert_eq!(category(-4), 3);
    }

    #[test]
    fn long_zero_runs_use_zrl() {
        let mut q = vec![0i64; 64];
        q[0] = 5;
        q[40] = -2;
        let tokens = tokenize(&[q]);
        assert!(matches!(tokens[0], Token::Dc(5)));
        assert!(matches!(tokens[1], Token::Zrl));
        assert!(matches!(tokens[2], Token::Zrl));
        assert!(matches!(tokens[3], Token::Ac { run: 7, level: -2 }));
        assert!(matches!(tokens[4], Token::Eob));
    }

    #[test]
    fn non_multiple_dims_and_odd_block_sizes() {
        let img = Image::from_fn(13, 7, |r, c| (r * 17 + c * 5) as f64 % 256.0).unwrap();
        for block in [2usize, 3, 8, 16] {
            let pkt = encode(&img, 0.01, block).unwrap();
            let back = decode(pkt.bytes()).unwrap();
            assert_eq!(back.dims(), (13, 7));
            assert!(img.mse(&back) < 1e-3, "block {block}");
        }
    }

    #[test]
    fn header_fields_are_big_endian() {
        let img = Image::filled(9, 300, 128.0).unwrap();
        let pkt = encode(&img, 2.5, 8).unwrap();
        let b = pkt.bytes();
        assert_eq!(&b[..4], b"HPK1");
        assert_eq!(b[4], 0);
        assert_eq!(&b[5..7], &[0, 9]);
        assert_eq!(&b[7..9], &[1, 44]);
        assert_eq!(&b[9..11], &[0, 8]);
        assert_eq!(&b[11..19], &2.5f64.to_be_bytes());
        let (hdr, _, _) = parse_header(b).unwrap();
        assert_eq!(hdr, PacketHeader { height: 9, width: 300, block_size: 8, theta: 2.5 });
    }
}
