//! Binary sketch file format. All integers little-endian.
//!
//! ```text
//! offset  size  field
//!      0     8  magic "RACESKCH"
//!      8     2  version (1)
//!     10     1  kind (0 = SRP, 1 = L2, 2 = L1)
//!     11     1  counter width, log2 of bytes (0..=3)
//!     12     4  dim
//!     16     2  power
//!     18     4  rows
//!     22     8  range
//!     30     8  sigma (f64)
//!     38     8  seed
//!     46     8  items
//!     54     4  rehash family id
//!     58     1  storage (0 = dense, 1 = sparse)
//!     59     3  reserved, zero
//!     62        rows, in order
//!               dense:  `range` counters of the declared width
//!               sparse: u64 entry count, then (u64 slot, counter) pairs by slot
//!    end     4  CRC-32 of every preceding byte
//! ```
//!
//! The counter width is the narrowest of 1, 2, 4, 8 bytes that holds the
//! largest counter, so identical sketches always serialize identically.

use std::io::{Read, Write};

use super::{Counts, RaceSketch, Storage};
use crate::error::{Error, Result};
use crate::lsh::{LshConfig, LshKind, REHASH_FAMILY_ID};

pub const MAGIC: &[u8; 8] = b"RACESKCH";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 62;
pub const TRAILER_LEN: u64 = 4;

fn width_log2(max: u64) -> u8 {
    match max {
        0..=0xff => 0,
        0x100..=0xffff => 1,
        0x1_0000..=0xffff_ffff => 2,
        _ => 3,
    }
}

pub(super) fn serialized_len(s: &RaceSketch) -> u64 {
    let width = 1u64 << width_log2(s.max_counter());
    let rows = s.config.rows as u64;
    let body = match s.storage() {
        Storage::Dense => rows * s.config.range * width,
        Storage::Sparse => rows * 8 + s.nonzero_counters() * (8 + width),
    };
    HEADER_LEN + body + TRAILER_LEN
}

fn put_counter(out: &mut Vec<u8>, c: u64, log2: u8) {
    match log2 {
        0 => out.push(c as u8),
        1 => out.extend_from_slice(&(c as u16).to_le_bytes()),
        2 => out.extend_from_slice(&(c as u32).to_le_bytes()),
        _ => out.extend_from_slice(&c.to_le_bytes()),
    }
}

impl RaceSketch {
    pub fn to_bytes(&self) -> Vec<u8> {
        let log2 = width_log2(self.max_counter());
        let cfg = &self.config;
        let mut out = Vec::with_capacity(serialized_len(self) as usize);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(cfg.kind.code());
        out.push(log2);
        out.extend_from_slice(&(cfg.dim as u32).to_le_bytes());
        out.extend_from_slice(&(cfg.power as u16).to_le_bytes());
        out.extend_from_slice(&(cfg.rows as u32).to_le_bytes());
        out.extend_from_slice(&cfg.range.to_le_bytes());
        out.extend_from_slice(&cfg.sigma.to_le_bytes());
        out.extend_from_slice(&cfg.seed.to_le_bytes());
        out.extend_from_slice(&self.items.to_le_bytes());
        out.extend_from_slice(&self.rehash_family_id.to_le_bytes());
        out.push(match self.storage() {
            Storage::Dense => 0,
            Storage::Sparse => 1,
        });
        out.extend_from_slice(&[0; 3]);
        debug_assert_eq!(out.len() as u64, HEADER_LEN);
        match &self.counts {
            Counts::Dense(grid) => {
                for &c in grid {
                    put_counter(&mut out, c, log2);
                }
            }
            Counts::Sparse(rows) => {
                for row in rows {
                    out.extend_from_slice(&(row.len() as u64).to_le_bytes());
                    for (&slot, &c) in row {
                        out.extend_from_slice(&slot.to_le_bytes());
                        put_counter(&mut out, c, log2);
                    }
                }
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn serialize<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn deserialize<R: Read>(mut source: R) -> Result<RaceSketch> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RaceSketch> {
        if bytes.len() < MAGIC.len() {
            return Err(Error::Truncated);
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < 10 {
            return Err(Error::Truncated);
        }
        let version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        if (bytes.len() as u64) < HEADER_LEN + TRAILER_LEN {
            return Err(Error::Truncated);
        }
        let (payload, trailer) = bytes.split_at(bytes.len() - TRAILER_LEN as usize);
        let stored = u32::from_le_bytes(trailer.try_into().unwrap());
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(Error::ChecksumMismatch { stored, computed });
        }
        parse_payload(payload)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let out = self.buf.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(out)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn counter(&mut self, log2: u8) -> Result<u64> {
        Ok(match log2 {
            0 => self.u8()? as u64,
            1 => self.u16()? as u64,
            2 => self.u32()? as u64,
            _ => self.u64()?,
        })
    }
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Corrupt(msg.into())
}

fn parse_payload(payload: &[u8]) -> Result<RaceSketch> {
    let mut cur = Cursor {
        buf: payload,
        pos: 10,
    };
    let kind = LshKind::from_code(cur.u8()?).ok_or_else(|| corrupt("unknown kind"))?;
    let log2 = cur.u8()?;
    if log2 > 3 {
        return Err(corrupt(format!("counter width code {log2}")));
    }
    let dim = cur.u32()? as usize;
    let power = cur.u16()? as u32;
    let rows = cur.u32()? as usize;
    let range = cur.u64()?;
    let sigma = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    let seed = cur.u64()?;
    let items = cur.u64()?;
    let family = cur.u32()?;
    let storage = match cur.u8()? {
        0 => Storage::Dense,
        1 => Storage::Sparse,
        s => return Err(corrupt(format!("storage code {s}"))),
    };
    if cur.take(3)? != [0, 0, 0] {
        return Err(corrupt("reserved bytes are not zero"));
    }
    if family != REHASH_FAMILY_ID {
        return Err(corrupt(format!("unsupported rehash family {family}")));
    }
    let config = LshConfig {
        kind,
        dim,
        sigma,
        power,
        rows,
        range,
        seed,
    };
    config
        .validate()
        .map_err(|e| corrupt(format!("invalid header: {e}")))?;

    let width = 1usize << log2;
    if storage == Storage::Dense {
        // Reject before allocating a grid the payload cannot hold.
        let need = (rows as u64)
            .checked_mul(range)
            .and_then(|n| n.checked_mul(width as u64))
            .ok_or(Error::Truncated)?;
        if need > cur.remaining() as u64 {
            return Err(Error::Truncated);
        }
    }
    let mut sketch = RaceSketch::with_storage(config, storage)
        .map_err(|e| corrupt(format!("invalid header: {e}")))?;
    match &mut sketch.counts {
        Counts::Dense(grid) => {
            for c in grid.iter_mut() {
                *c = cur.counter(log2)?;
            }
        }
        Counts::Sparse(row_maps) => {
            for row in row_maps.iter_mut() {
                let n = cur.u64()?;
                if n > (cur.remaining() / (8 + width)) as u64 {
                    return Err(Error::Truncated);
                }
                let mut last: Option<u64> = None;
                for _ in 0..n {
                    let slot = cur.u64()?;
                    let c = cur.counter(log2)?;
                    if slot >= range || last.is_some_and(|l| slot <= l) {
                        return Err(corrupt("sparse slots out of order or out of range"));
                    }
                    if c == 0 {
                        return Err(corrupt("zero counter in sparse row"));
                    }
                    last = Some(slot);
                    row.insert(slot, c);
                }
            }
        }
    }
    if cur.remaining() != 0 {
        return Err(corrupt(format!("{} trailing bytes", cur.remaining())));
    }
    sketch.items = items;
    for row in 0..rows {
        if sketch.row_sum(row) != items {
            return Err(corrupt(format!("row {row} does not sum to item count")));
        }
    }
    Ok(sketch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectors::DataVector;

    fn sample(storage: Storage) -> RaceSketch {
        let cfg = LshConfig::pstable(LshKind::L1, 2, 0.5, 2, 5, 300, 9).unwrap();
        let mut s = RaceSketch::with_storage(cfg, storage).unwrap();
        for i in 0..40 {
            let x = DataVector::dense(vec![i as f64 * 0.1, (i % 7) as f64]).unwrap();
            s.add(&x).unwrap();
        }
        s
    }

    #[test]
    fn header_layout() {
        let s = sample(Storage::Dense);
        let b = s.to_bytes();
        assert_eq!(&b[..8], b"RACESKCH");
        assert_eq!(u16::from_le_bytes([b[8], b[9]]), 1);
        assert_eq!(b[10], 2);
        assert_eq!(b[11], 0);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 2);
        assert_eq!(u16::from_le_bytes(b[16..18].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[18..22].try_into().unwrap()), 5);
        assert_eq!(u64::from_le_bytes(b[22..30].try_into().unwrap()), 300);
        assert_eq!(f64::from_le_bytes(b[30..38].try_into().unwrap()), 0.5);
        assert_eq!(u64::from_le_bytes(b[38..46].try_into().unwrap()), 9);
        assert_eq!(u64::from_le_bytes(b[46..54].try_into().unwrap()), 40);
        assert_eq!(
            u32::from_le_bytes(b[54..58].try_into().unwrap()),
            REHASH_FAMILY_ID
        );
        assert_eq!(b[58], 0);
        assert_eq!(&b[59..62], &[0, 0, 0]);
        assert_eq!(b.len() as u64, HEADER_LEN + 5 * 300 + TRAILER_LEN);
    }

    #[test]
    fn round_trip_both_storages() {
        for storage in [Storage::Dense, Storage::Sparse] {
            let s = sample(storage);
            let b = s.to_bytes();
            assert_eq!(b.len() as u64, s.memory_bytes());
            let back = RaceSketch::from_bytes(&b).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.to_bytes(), b);
        }
    }

    #[test]
    fn empty_dense_size() {
        let cfg = LshConfig::pstable(LshKind::L2, 2, 1.0, 1, 2, 4, 0).unwrap();
        let s = RaceSketch::with_storage(cfg, Storage::Dense).unwrap();
        // Two rows of four one-byte counters.
        assert_eq!(s.memory_bytes(), HEADER_LEN + 8 + TRAILER_LEN);
        assert_eq!(s.to_bytes().len() as u64, s.memory_bytes());
    }

    #[test]
    fn sparse_empty_smaller_than_dense() {
        for range in [16, 64, 4096] {
            let cfg = LshConfig::pstable(LshKind::L2, 2, 1.0, 1, 10, range, 0).unwrap();
            let d = RaceSketch::with_storage(cfg, Storage::Dense).unwrap();
            let s = RaceSketch::with_storage(cfg, Storage::Sparse).unwrap();
            assert!(s.memory_bytes() < d.memory_bytes());
        }
    }

    #[test]
    fn memory_is_monotone_under_add() {
        let cfg = LshConfig::pstable(LshKind::L2, 1, 1.0, 1, 3, 1 << 20, 0).unwrap();
        let mut s = RaceSketch::new(cfg).unwrap();
        let mut last = s.memory_bytes();
        for i in 0..300 {
            s.add(&DataVector::dense(vec![(i % 17) as f64]).unwrap())
                .unwrap();
            assert!(s.memory_bytes() >= last);
            last = s.memory_bytes();
        }
    }

    #[test]
    fn counter_width_widens() {
        let cfg = LshConfig::srp(1, 1, 1, 0).unwrap();
        let mut s = RaceSketch::new(cfg).unwrap();
        let x = DataVector::dense(vec![1.0]).unwrap();
        for _ in 0..256 {
            s.add(&x).unwrap();
        }
        let b = s.to_bytes();
        assert_eq!(b[11], 1);
        assert_eq!(RaceSketch::from_bytes(&b).unwrap(), s);
    }

    #[test]
    fn corruption_is_detected() {
        let b = sample(Storage::Sparse).to_bytes();
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(RaceSketch::from_bytes(&bad), Err(Error::BadMagic)));
        let mut bad = b.clone();
        bad[8] = 2;
        assert!(matches!(
            RaceSketch::from_bytes(&bad),
            Err(Error::UnsupportedVersion(2))
        ));
        assert!(matches!(
            RaceSketch::from_bytes(&b[..40]),
            Err(Error::Truncated)
        ));
        assert!(RaceSketch::from_bytes(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[70] ^= 0x10;
        assert!(matches!(
            RaceSketch::from_bytes(&bad),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn valid_crc_but_inconsistent_rows_rejected() {
        let s = sample(Storage::Dense);
        let mut b = s.to_bytes();
        b.truncate(b.len() - 4);
        b[HEADER_LEN as usize] = b[HEADER_LEN as usize].wrapping_add(1);
        let crc = crc32fast::hash(&b);
        b.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(RaceSketch::from_bytes(&b), Err(Error::Corrupt(_))));
    }
}
