//! Binary network format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SAMN"
//! 4       1     format version (1)
//! 5       1     model tag: 0 Amari, 1 Willshaw, 2 GB
//! 6       1     flags: bit 0 set when a stored-set section follows the weights
//! 7       8     n  (u64 LE)
//! 15      8     c  (u64 LE, 0 without cluster layout)
//! 23      8     l  (u64 LE, 0 without cluster layout)
//! 31      8     M  (u64 LE)
//! 39      ..    weights
//! ..      ..    stored set (optional): M records of u32 length + sorted u32 indices
//! ```
//!
//! Weights: Amari stores the strict upper triangle (`i < j`, row-major) as
//! u32 LE counts. Willshaw stores the upper triangle including the diagonal
//! (`j >= i`, row-major) as one contiguous bit stream, LSB first, padded to a
//! whole byte at the end. GB stores one `l x l` bit block per cluster pair
//! `a < a'` (row-major, each block padded to a byte), then the `n`-bit
//! self-activity bitmap padded to a byte.

use alloc::vec::Vec;

use thiserror::Error;

use super::{
    AmariNetwork, AssociativeMemory, GbNetwork, ModelKind, Network, StoredSet, WillshawNetwork,
};
use crate::bits::BitMatrix;
use crate::patterns::{NeuronSpace, Pattern};

pub const MAGIC: [u8; 4] = *b"SAMN";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 39;
const FLAG_STORED: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown model tag {0}")]
    UnknownModel(u8),
    #[error("unknown flag bits {0:#04x}")]
    UnknownFlags(u8),
    #[error("truncated input: need {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("inconsistent dimensions: {0}")]
    Inconsistent(&'static str),
    #[error("{0} trailing bytes after the last section")]
    TrailingBytes(usize),
}

/// Serializes a network. The stored-set section is written when
/// `include_stored` is set and the network retains its messages.
pub fn encode(network: &Network, include_stored: bool) -> Vec<u8> {
    let space = network.space();
    let n = space.n();
    let stored_set = network.stored_set().filter(|_| include_stored);
    let mut out = Vec::with_capacity(HEADER_LEN + weights_len(network.kind(), space));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(network.kind().tag());
    out.push(if stored_set.is_some() { FLAG_STORED } else { 0 });
    let (c, l) = space
        .layout()
        .map_or((0, 0), |lay| (lay.clusters(), lay.per_cluster()));
    for v in [n as u64, c as u64, l as u64, network.stored_count()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match network {
        Network::Amari(a) => {
            for i in 0..n {
                for j in i + 1..n {
                    out.extend_from_slice(&a.weight(i, j).to_le_bytes());
                }
            }
        }
        Network::Willshaw(w) => {
            let mut bits = BitWriter::new(&mut out);
            for i in 0..n {
                for j in i..n {
                    bits.push(w.weight(i, j));
                }
            }
            bits.finish();
        }
        Network::Gb(g) => {
            let layout = g.layout();
            for a in 0..layout.clusters() {
                for b in a + 1..layout.clusters() {
                    let mut bits = BitWriter::new(&mut out);
                    for i in layout.block(a) {
                        for j in layout.block(b) {
                            bits.push(g.weight(i, j));
                        }
                    }
                    bits.finish();
                }
            }
            let mut bits = BitWriter::new(&mut out);
            for i in 0..n {
                bits.push(g.is_used(i));
            }
            bits.finish();
        }
    }
    if let Some(set) = stored_set {
        for p in set.iter() {
            out.extend_from_slice(&(p.len() as u32).to_le_bytes());
            for &i in p.active() {
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
    }
    out
}

/// Size of the weight section in bytes.
pub fn weights_len(kind: ModelKind, space: NeuronSpace) -> usize {
    let n = space.n();
    match kind {
        ModelKind::Amari => n * (n - 1) / 2 * 4,
        ModelKind::Willshaw => (n * (n + 1) / 2).div_ceil(8),
        ModelKind::Gb => {
            let layout = space.layout().expect("clustered space");
            let c = layout.clusters();
            let l = layout.per_cluster();
            c * (c - 1) / 2 * (l * l).div_ceil(8) + n.div_ceil(8)
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<Network, CodecError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let tag = r.u8()?;
    let kind = ModelKind::from_tag(tag).ok_or(CodecError::UnknownModel(tag))?;
    let flags = r.u8()?;
    if flags & !FLAG_STORED != 0 {
        return Err(CodecError::UnknownFlags(flags));
    }
    let n = r.dim()?;
    let c = r.dim()?;
    let l = r.dim()?;
    let m = r.u64()?;

    let space = match (c, l) {
        (0, 0) => {
            if kind == ModelKind::Gb {
                return Err(CodecError::Inconsistent(
                    "GB network without cluster layout",
                ));
            }
            NeuronSpace::flat(n).map_err(|_| CodecError::Inconsistent("fewer than 2 neurons"))?
        }
        (c, l) => {
            if c.checked_mul(l) != Some(n) {
                return Err(CodecError::Inconsistent("n differs from c * l"));
            }
            NeuronSpace::clustered(c, l)
                .map_err(|_| CodecError::Inconsistent("invalid cluster layout"))?
        }
    };
    // Refuse headers whose weight section could not possibly be present.
    let dense_bits = n
        .checked_mul(n)
        .ok_or(CodecError::Inconsistent("n too large"))?;
    if kind == ModelKind::Amari && dense_bits.checked_mul(2).is_none() {
        return Err(CodecError::Inconsistent("n too large"));
    }
    let payload = weights_len(kind, space);
    r.ensure(payload)?;

    let has_stored = flags & FLAG_STORED != 0;
    let mut network = match kind {
        ModelKind::Amari => {
            let data = r.take(payload)?;
            let upper = data
                .chunks_exact(4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()));
            Network::Amari(AmariNetwork::from_upper_triangle(space, m, upper, None))
        }
        ModelKind::Willshaw => {
            let mut bits = BitReader::new(r.take(payload)?);
            let mut weights = BitMatrix::new(n);
            for i in 0..n {
                for j in i..n {
                    if bits.next() {
                        weights.set_sym(i, j);
                    }
                }
            }
            Network::Willshaw(WillshawNetwork::from_weights(space, weights, m, None))
        }
        ModelKind::Gb => {
            let layout = space.layout().expect("checked above");
            let block_len = (l * l).div_ceil(8);
            let mut weights = BitMatrix::new(n);
            for a in 0..layout.clusters() {
                for b in a + 1..layout.clusters() {
                    let mut bits = BitReader::new(r.take(block_len)?);
                    for i in layout.block(a) {
                        for j in layout.block(b) {
                            if bits.next() {
                                weights.set_sym(i, j);
                            }
                        }
                    }
                }
            }
            let mut bits = BitReader::new(r.take(n.div_ceil(8))?);
            for i in 0..n {
                if bits.next() {
                    weights.set(i, i);
                }
            }
            Network::Gb(
                GbNetwork::from_weights(space, weights, m, None)
                    .map_err(|_| CodecError::Inconsistent("GB network without cluster layout"))?,
            )
        }
    };

    if has_stored {
        let mut set = StoredSet::default();
        for _ in 0..m {
            let len = r.u32()? as usize;
            if len > n {
                return Err(CodecError::Inconsistent("stored message longer than n"));
            }
            let raw = r.take(len * 4)?;
            let mut active = Vec::with_capacity(len);
            for b in raw.chunks_exact(4) {
                let i = u32::from_le_bytes(b.try_into().unwrap());
                if i as usize >= n {
                    return Err(CodecError::Inconsistent("stored index out of range"));
                }
                if active.last().is_some_and(|&prev| prev >= i) {
                    return Err(CodecError::Inconsistent(
                        "stored indices not strictly ascending",
                    ));
                }
                active.push(i);
            }
            let p = Pattern::from_sorted_unchecked(space, active);
            if kind == ModelKind::Gb && !p.is_gb_valid() {
                return Err(CodecError::Inconsistent(
                    "stored GB message not one-per-cluster",
                ));
            }
            set.push(p);
        }
        attach_stored_set(&mut network, set);
    }

    let rest = bytes.len() - r.pos;
    if rest != 0 {
        return Err(CodecError::TrailingBytes(rest));
    }
    Ok(network)
}

fn attach_stored_set(network: &mut Network, set: StoredSet) {
    match network {
        Network::Amari(a) => a.set_stored_set(set),
        Network::Willshaw(w) => w.set_stored_set(set),
        Network::Gb(g) => g.set_stored_set(set),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn ensure(&self, needed: usize) -> Result<(), CodecError> {
        let available = self.bytes.len() - self.pos;
        if needed > available {
            return Err(CodecError::Truncated {
                offset: self.pos,
                needed,
                available,
            });
        }
        Ok(())
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8], CodecError> {
        self.ensure(len)?;
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn dim(&mut self) -> Result<usize, CodecError> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&v| v <= u32::MAX as usize)
            .ok_or(CodecError::Inconsistent(
                "dimension exceeds 32-bit neuron indices",
            ))
    }
}

struct BitWriter<'a> {
    out: &'a mut Vec<u8>,
    byte: u8,
    used: u32,
}

impl<'a> BitWriter<'a> {
    fn new(out: &'a mut Vec<u8>) -> Self {
        Self {
            out,
            byte: 0,
            used: 0,
        }
    }

    #[inline]
    fn push(&mut self, bit: bool) {
        self.byte |= u8::from(bit) << self.used;
        self.used += 1;
        if self.used == 8 {
            self.out.push(self.byte);
            self.byte = 0;
            self.used = 0;
        }
    }

    fn finish(self) {
        if self.used > 0 {
            self.out.push(self.byte);
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    #[inline]
    fn next(&mut self) -> bool {
        let bit = self.bytes[self.pos / 8] >> (self.pos % 8) & 1 == 1;
        self.pos += 1;
        bit
    }
}
