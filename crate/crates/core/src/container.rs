//! `.holo` container for packet sets.
//!
//! Layout, all integers big-endian:
//!
//! ```text
//! "HOLO"  u8 version (1)
//! u16 height  u16 width  u8 K  u8 mode_tag
//! K x { i16 dy  i16 dx  u8 shift_mode }
//! u8 codec_id  f64 theta  u16 block_size
//! K x { u32 length  [length bytes] }
//! ```

use crate::codec::{block, CodecId, CodecParams, Packet};
use crate::error::{Error, Result};
use crate::holographic::{ModeTag, PacketSet};
use crate::shift::{ShiftMode, ShiftSpec};

pub const CONTAINER_MAGIC: &[u8; 4] = b"HOLO";
pub const CONTAINER_VERSION: u8 = 1;

/// Bytes of container framing around the packets of a `k`-packet set.
pub fn overhead_bytes(k: usize) -> usize {
    4 + 1 + 2 + 2 + 1 + 1 + 5 * k + 1 + 8 + 2 + 4 * k
}

pub fn save_packet_set(ps: &PacketSet) -> Result<Vec<u8>> {
    let k = ps.k();
    if k == 0 || k > u8::MAX as usize || ps.shifts.len() != k {
        return Err(Error::Container(format!("cannot store {k} packets with {} shifts", ps.shifts.len())));
    }
    let (h, w) = ps.original_dims;
    let to_u16 = |v: usize, what: &str| {
        u16::try_from(v).map_err(|_| Error::Container(format!("{what} {v} does not fit in u16")))
    };
    let to_i16 = |v: i32| i16::try_from(v).map_err(|_| Error::Container(format!("shift {v} does not fit in i16")));

    let mut out = Vec::with_capacity(overhead_bytes(k) + ps.packets.iter().map(|p| p.bytes().len()).sum::<usize>());
    out.extend_from_slice(CONTAINER_MAGIC);
    out.push(CONTAINER_VERSION);
    out.extend_from_slice(&to_u16(h, "height")?.to_be_bytes());
    out.extend_from_slice(&to_u16(w, "width")?.to_be_bytes());
    out.push(k as u8);
    out.push(ps.mode_tag.to_u8());
    for s in &ps.shifts {
        out.extend_from_slice(&to_i16(s.dy)?.to_be_bytes());
        out.extend_from_slice(&to_i16(s.dx)?.to_be_bytes());
        out.push(s.mode.to_u8());
    }
    out.push(ps.codec.codec_id.to_u8());
    out.extend_from_slice(&ps.codec.theta.to_be_bytes());
    out.extend_from_slice(&to_u16(ps.codec.block_size, "block size")?.to_be_bytes());
    for p in &ps.packets {
        let len = u32::try_from(p.bytes().len()).map_err(|_| Error::Container("packet larger than 4 GiB".into()))?;
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(p.bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Container(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn i16(&mut self, what: &str) -> Result<i16> {
        Ok(i16::from_be_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_be_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn load_packet_set(bytes: &[u8]) -> Result<PacketSet> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != CONTAINER_MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let version = r.u8("version")?;
    if version != CONTAINER_VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    let h = r.u16("height")? as usize;
    let w = r.u16("width")? as usize;
    let k = r.u8("packet count")? as usize;
    let tag = r.u8("mode tag")?;
    let mode_tag = ModeTag::from_u8(tag).ok_or_else(|| Error::Container(format!("unknown mode tag {tag:#04x}")))?;
    if h == 0 || w == 0 || k == 0 {
        return Err(Error::Container(format!("invalid header: {h}x{w}, K = {k}")));
    }
    let mut shifts = Vec::with_capacity(k);
    for _ in 0..k {
        let dy = r.i16("shift dy")? as i32;
        let dx = r.i16("shift dx")? as i32;
        let m = r.u8("shift mode")?;
        let mode = ShiftMode::from_u8(m).ok_or_else(|| Error::Container(format!("unknown shift mode {m}")))?;
        let s = ShiftSpec { dy, dx, mode };
        s.validate().map_err(|e| Error::Container(e.to_string()))?;
        shifts.push(s);
    }
    let cid = r.u8("codec id")?;
    let codec_id = CodecId::from_u8(cid).ok_or_else(|| Error::Container(format!("unknown codec id {cid}")))?;
    let theta = r.f64("theta")?;
    let block_size = r.u16("block size")? as usize;
    let codec = CodecParams { codec_id, theta, block_size };
    codec.validate().map_err(|e| Error::Container(e.to_string()))?;

    let mut packets = Vec::with_capacity(k);
    for (i, s) in shifts.iter().enumerate() {
        let len = r.u32("packet length")? as usize;
        let data = r.take(len, "packet payload")?;
        if codec_id == CodecId::InternalBlockDct {
            let (hdr, _, _) = block::parse_header(data)
                .map_err(|e| Error::Container(format!("packet {}: {e}", i + 1)))?;
            if (hdr.height, hdr.width) != s.shifted_dims((h, w)) {
                return Err(Error::Container(format!(
                    "packet {} is {}x{}, expected {:?}",
                    i + 1,
                    hdr.height,
                    hdr.width,
                    s.shifted_dims((h, w))
                )));
            }
        }
        packets.push(Packet::new(data.to_vec()));
    }
    if r.pos != bytes.len() {
        return Err(Error::Container(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(PacketSet { original_dims: (h, w), shifts, codec, packets, mode_tag })
}
