//! Classic Bloom filter over `f64` feature vectors.
//!
//! Elements are canonically serialized (little-endian IEEE-754 bytes,
//! concatenated in feature order) and double-hashed: two seeded 64-bit
//! xxh3 values `h1`, `h2` generate the probe sequence
//! `(h1 + j * h2) mod m` for `j = 0..k`.

use crate::error::{Error, Result};

pub const SERIAL_MAGIC: [u8; 4] = *b"LBF1";
pub const SERIAL_VERSION: u16 = 1;

/// Bit budget that keeps a classic filter over `n` keys at false positive
/// rate `target_fpr`: `ceil(1.44 * n * log2(1 / target_fpr))`.
pub fn size_for_target_fpr(n: u64, target_fpr: f64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "key count must be at least 1".into(),
        ));
    }
    if !(target_fpr > 0.0 && target_fpr < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target FPR must lie in (0, 1), got {target_fpr}"
        )));
    }
    let bits = 1.44 * n as f64 * (1.0 / target_fpr).log2();
    Ok(bits.ceil() as u64)
}

/// FPR-minimizing hash count for `m` bits holding `n` keys:
/// `max(1, round((m / n) * ln 2))`.
pub fn optimal_k(m: u64, n: u64) -> u16 {
    assert!(m > 0, "bit array must be non-empty");
    assert!(n > 0, "key count must be at least 1");
    let k = (m as f64 / n as f64 * std::f64::consts::LN_2).round();
    k.max(1.0).min(u16::MAX as f64) as u16
}

/// Little-endian IEEE-754 byte serialization of a feature vector; the
/// canonical hash input for every filter in this crate.
pub fn canonical_bytes(x: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(x.len() * 8);
    for v in x {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// The double-hashing base pair for an element under a seed. `h2` is forced
/// odd so the probe sequence never collapses onto a single index.
pub fn hash_pair(bytes: &[u8], seed: u64) -> (u64, u64) {
    let h1 = xxhash_rust::xxh3::xxh3_64_with_seed(bytes, seed);
    let h2 = xxhash_rust::xxh3::xxh3_64_with_seed(bytes, seed ^ 0x9E37_79B9_7F4A_7C15) | 1;
    (h1, h2)
}

/// `j`-th probe index derived from a base pair.
pub fn probe_index(pair: (u64, u64), j: u16, m: u64) -> u64 {
    pair.0.wrapping_add((j as u64).wrapping_mul(pair.1)) % m
}

/// Derives the seed for a sub-filter so that sibling components of a learned
/// filter probe independent sequences.
pub(crate) fn component_seed(seed: u64, tag: u64) -> u64 {
    xxhash_rust::xxh3::xxh3_64_with_seed(&tag.to_le_bytes(), seed)
}

/// Fixed-length bit vector backed by `u64` words, bit `i` stored at word
/// `i / 64`, bit `i % 64` — which makes the little-endian word bytes equal
/// to the LSB-first packed byte layout used on disk.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BitArray {
    words: Vec<u64>,
    len: u64,
}

impl BitArray {
    pub fn new(len: u64) -> Self {
        let n_words = len.div_ceil(64) as usize;
        Self {
            words: vec![0; n_words],
            len,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn set(&mut self, i: u64) {
        debug_assert!(i < self.len);
        self.words[(i / 64) as usize] |= 1 << (i % 64);
    }

    pub fn get(&self, i: u64) -> bool {
        debug_assert!(i < self.len);
        self.words[(i / 64) as usize] & (1 << (i % 64)) != 0
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// LSB-first packed bytes, zero-padded to a byte boundary.
    pub fn to_padded_bytes(&self) -> Vec<u8> {
        let n_bytes = self.len.div_ceil(8) as usize;
        let mut out = Vec::with_capacity(n_bytes);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(n_bytes);
        out
    }

    pub fn from_padded_bytes(bytes: &[u8], len: u64) -> Result<Self> {
        let n_bytes = len.div_ceil(8) as usize;
        if bytes.len() != n_bytes {
            return Err(Error::Format(format!(
                "bit array of {len} bits needs {n_bytes} bytes, got {}",
                bytes.len()
            )));
        }
        let mut arr = Self::new(len);
        for (i, &b) in bytes.iter().enumerate() {
            arr.words[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        if !len.is_multiple_of(8) {
            let last = bytes[n_bytes - 1];
            if last >> (len % 8) != 0 {
                return Err(Error::Format(
                    "padding bits beyond the array length must be zero".into(),
                ));
            }
        }
        Ok(arr)
    }
}

/// Classic Bloom filter.
///
/// `m = 0` builds a degenerate always-accept filter (no storage, no hashing);
/// it is flagged by [`BloomFilter::is_degenerate`] and arises when a learned
/// filter assigns a zero bit budget to a component.
#[derive(Debug, Clone, PartialEq)]
pub struct BloomFilter {
    bits: BitArray,
    m: u64,
    k: u16,
    seed: u64,
    n_inserted: u64,
}

impl BloomFilter {
    pub fn new(m: u64, k: u16, seed: u64) -> Result<Self> {
        if m > 0 && k == 0 {
            return Err(Error::InvalidArgument(
                "hash count must be at least 1 for a non-empty bit array".into(),
            ));
        }
        Ok(Self {
            bits: BitArray::new(m),
            m,
            k: if m == 0 { 0 } else { k },
            seed,
            n_inserted: 0,
        })
    }

    /// The always-accept filter of zero size.
    pub fn degenerate(seed: u64) -> Self {
        Self::new(0, 0, seed).expect("degenerate construction is infallible")
    }

    /// Builds a filter of `m` bits and `k` hashes holding every key.
    pub fn build(keys: &[Vec<f64>], m: u64, k: u16, seed: u64) -> Result<Self> {
        let mut f = Self::new(m, k, seed)?;
        for key in keys {
            f.insert(key);
        }
        Ok(f)
    }

    pub fn insert(&mut self, x: &[f64]) {
        if self.m > 0 {
            let pair = hash_pair(&canonical_bytes(x), self.seed);
            self.insert_pair(pair);
        }
        self.n_inserted += 1;
    }

    pub(crate) fn insert_pair(&mut self, pair: (u64, u64)) {
        for j in 0..self.k {
            self.bits.set(probe_index(pair, j, self.m));
        }
    }

    pub fn query(&self, x: &[f64]) -> bool {
        if self.m == 0 {
            return true;
        }
        self.query_pair(hash_pair(&canonical_bytes(x), self.seed))
    }

    pub(crate) fn query_pair(&self, pair: (u64, u64)) -> bool {
        (0..self.k).all(|j| self.bits.get(probe_index(pair, j, self.m)))
    }

    pub fn is_degenerate(&self) -> bool {
        self.m == 0
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> u16 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_inserted(&self) -> u64 {
        self.n_inserted
    }

    /// Size charged against a bit budget: the bit array length.
    pub fn size_bits(&self) -> u64 {
        self.m
    }

    /// Fraction of bits set; 1.0 for the degenerate filter.
    pub fn fill_ratio(&self) -> f64 {
        if self.m == 0 {
            1.0
        } else {
            self.bits.count_ones() as f64 / self.m as f64
        }
    }

    /// Binary format: magic `LBF1`, version u16, m u64, k u16, seed u64
    /// (all little-endian), then the bit array packed LSB-first and padded
    /// to a byte boundary.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.m.div_ceil(8) as usize);
        out.extend_from_slice(&SERIAL_MAGIC);
        out.extend_from_slice(&SERIAL_VERSION.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.k.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.bits.to_padded_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 {
            return Err(Error::Format(format!(
                "filter header needs 24 bytes, got {}",
                bytes.len()
            )));
        }
        if bytes[0..4] != SERIAL_MAGIC {
            return Err(Error::Format("bad magic, expected \"LBF1\"".into()));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != SERIAL_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {version}, expected {SERIAL_VERSION}"
            )));
        }
        let m = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
        let k = u16::from_le_bytes(bytes[14..16].try_into().unwrap());
        let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        if m == 0 && k != 0 {
            return Err(Error::Format(
                "degenerate filter must have zero hashes".into(),
            ));
        }
        if m > 0 && k == 0 {
            return Err(Error::Format(
                "non-degenerate filter must have at least one hash".into(),
            ));
        }
        let bits = BitArray::from_padded_bytes(&bytes[24..], m)?;
        // The element count is not persisted; a popcount-based lower bound
        // stands in for it after a load.
        let n_inserted = if k == 0 {
            0
        } else {
            bits.count_ones().div_ceil(k as u64)
        };
        Ok(Self {
            bits,
            m,
            k,
            seed,
            n_inserted,
        })
    }
}
