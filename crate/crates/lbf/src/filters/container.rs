//! One on-disk format for every filter variant.
//!
//! Plain Bloom filters keep their own `LBF1` layout. Learned variants are
//! wrapped in an `LBFF` container: magic, version u16, variant tag u8
//! (1 = classifier + backup, 2 = sandwiched, 3 = group-adaptive), then a
//! little-endian payload of the build outcome — threshold(s), training FPR,
//! the encoded classifier, and each component filter as a length-prefixed
//! `LBF1` block. Loading sniffs the magic, so one reader handles both.

use crate::bloom::{BitArray, BloomFilter};
use crate::classifiers::encoding::{self, Reader};
use crate::classifiers::TrainedClassifier;
use crate::error::{Error, Result};
use crate::filters::{AdaBf, Filter, Lbf, Slbf};

pub const MAGIC: [u8; 4] = *b"LBFF";
pub const VERSION: u16 = 1;

const VARIANT_LBF: u8 = 1;
const VARIANT_SLBF: u8 = 2;
const VARIANT_ADABF: u8 = 3;

/// A built filter of any variant, ready to serialize or query.
#[derive(Debug, Clone)]
pub enum FilterArtifact {
    Bloom(BloomFilter),
    Lbf(Lbf<TrainedClassifier>),
    Slbf(Slbf<TrainedClassifier>),
    AdaBf(AdaBf<TrainedClassifier>),
}

impl Filter for FilterArtifact {
    fn accepts(&self, x: &[f64]) -> bool {
        match self {
            FilterArtifact::Bloom(f) => f.accepts(x),
            FilterArtifact::Lbf(f) => f.accepts(x),
            FilterArtifact::Slbf(f) => f.accepts(x),
            FilterArtifact::AdaBf(f) => f.accepts(x),
        }
    }

    fn size_bits(&self) -> u64 {
        match self {
            FilterArtifact::Bloom(f) => f.size_bits(),
            FilterArtifact::Lbf(f) => f.size_bits(),
            FilterArtifact::Slbf(f) => f.size_bits(),
            FilterArtifact::AdaBf(f) => f.size_bits(),
        }
    }
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_block(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u64(out, bytes.len() as u64);
    out.extend_from_slice(bytes);
}

fn put_optional_filter(out: &mut Vec<u8>, f: Option<&BloomFilter>) {
    match f {
        None => out.push(0),
        Some(f) => {
            out.push(1);
            put_block(out, &f.to_bytes());
        }
    }
}

fn read_block<'a>(r: &mut Reader<'a>) -> Result<&'a [u8]> {
    let len = r.u64()?;
    let len = usize::try_from(len)
        .map_err(|_| Error::Format(format!("unreasonable block length {len}")))?;
    r.take(len)
}

fn read_optional_filter(r: &mut Reader<'_>) -> Result<Option<BloomFilter>> {
    match r.u8()? {
        0 => Ok(None),
        1 => Ok(Some(BloomFilter::from_bytes(read_block(r)?)?)),
        other => Err(Error::Format(format!(
            "component filter flag must be 0 or 1, got {other}"
        ))),
    }
}

impl FilterArtifact {
    pub fn variant(&self) -> &'static str {
        match self {
            FilterArtifact::Bloom(_) => "bloom",
            FilterArtifact::Lbf(_) => "lbf",
            FilterArtifact::Slbf(_) => "slbf",
            FilterArtifact::AdaBf(_) => "adabf",
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            FilterArtifact::Bloom(f) => return f.to_bytes(),
            FilterArtifact::Lbf(f) => {
                header(VARIANT_LBF, &mut out);
                put_f64(&mut out, f.tau());
                put_u64(&mut out, f.false_negatives());
                put_f64(&mut out, f.train_fpr());
                put_block(&mut out, &encoding::encode(f.classifier()));
                put_optional_filter(&mut out, f.backup());
            }
            FilterArtifact::Slbf(f) => {
                header(VARIANT_SLBF, &mut out);
                put_f64(&mut out, f.tau());
                put_f64(&mut out, f.split());
                put_u64(&mut out, f.false_negatives());
                put_f64(&mut out, f.train_fpr());
                put_block(&mut out, &encoding::encode(f.classifier()));
                put_block(&mut out, &f.initial().to_bytes());
                put_optional_filter(&mut out, f.backup());
            }
            FilterArtifact::AdaBf(f) => {
                header(VARIANT_ADABF, &mut out);
                put_f64(&mut out, f.ratio());
                put_f64(&mut out, f.train_fpr());
                out.extend_from_slice(&(f.groups_requested() as u16).to_le_bytes());
                out.push(f.fallback_used() as u8);
                out.extend_from_slice(&(f.groups() as u16).to_le_bytes());
                for t in f.thresholds() {
                    put_f64(&mut out, *t);
                }
                for k in f.hash_counts() {
                    out.extend_from_slice(&k.to_le_bytes());
                }
                put_u64(&mut out, f.seed());
                put_u64(&mut out, f.array_bits());
                out.extend_from_slice(&f.bit_array().to_padded_bytes());
                put_block(&mut out, &encoding::encode(f.classifier()));
            }
        }
        out
    }

    /// Parses either layout: a bare `LBF1` filter or an `LBFF` container.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() >= 4 && bytes[..4] == crate::bloom::SERIAL_MAGIC {
            return Ok(FilterArtifact::Bloom(BloomFilter::from_bytes(bytes)?));
        }
        let mut r = Reader::new(bytes);
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::Format(format!(
                "unrecognized filter magic {magic:02x?}"
            )));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported container version {version}"
            )));
        }
        let variant = r.u8()?;
        let artifact = match variant {
            VARIANT_LBF => {
                let tau = r.f64()?;
                let false_negatives = r.u64()?;
                let train_fpr = r.f64()?;
                let classifier = encoding::decode(read_block(&mut r)?)?;
                let backup = read_optional_filter(&mut r)?;
                if backup.is_none() && false_negatives > 0 {
                    return Err(Error::Format(
                        "false negatives recorded but no backup filter present".into(),
                    ));
                }
                FilterArtifact::Lbf(Lbf::from_parts(
                    classifier,
                    tau,
                    backup,
                    false_negatives,
                    train_fpr,
                ))
            }
            VARIANT_SLBF => {
                let tau = r.f64()?;
                let split = r.f64()?;
                if !(0.0 < split && split < 1.0) {
                    return Err(Error::Format(format!(
                        "split fraction must lie in (0, 1), got {split}"
                    )));
                }
                let false_negatives = r.u64()?;
                let train_fpr = r.f64()?;
                let classifier = encoding::decode(read_block(&mut r)?)?;
                let initial = BloomFilter::from_bytes(read_block(&mut r)?)?;
                let backup = read_optional_filter(&mut r)?;
                if backup.is_none() && false_negatives > 0 {
                    return Err(Error::Format(
                        "false negatives recorded but no backup filter present".into(),
                    ));
                }
                FilterArtifact::Slbf(Slbf::from_parts(
                    classifier,
                    tau,
                    split,
                    initial,
                    backup,
                    false_negatives,
                    train_fpr,
                ))
            }
            VARIANT_ADABF => {
                let ratio = r.f64()?;
                let train_fpr = r.f64()?;
                let groups_requested = r.u16()? as usize;
                let fallback = match r.u8()? {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(Error::Format(format!(
                            "fallback flag must be 0 or 1, got {other}"
                        )))
                    }
                };
                let groups = r.u16()? as usize;
                if groups < 2 {
                    return Err(Error::Format(format!(
                        "need at least 2 score groups, got {groups}"
                    )));
                }
                let mut thresholds = Vec::with_capacity(groups - 1);
                for _ in 0..groups - 1 {
                    thresholds.push(r.f64()?);
                }
                if thresholds
                    .windows(2)
                    .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
                {
                    return Err(Error::Format(
                        "group boundaries must be strictly ascending".into(),
                    ));
                }
                let mut hash_counts = Vec::with_capacity(groups);
                for _ in 0..groups {
                    hash_counts.push(r.u16()?);
                }
                if hash_counts.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::Format(
                        "per-group hash counts must be non-increasing".into(),
                    ));
                }
                if *hash_counts.last().unwrap() != 0 {
                    return Err(Error::Format(
                        "the top score group must skip the array".into(),
                    ));
                }
                let seed = r.u64()?;
                let m = r.u64()?;
                if m == 0 {
                    return Err(Error::Format("shared array cannot be empty".into()));
                }
                let n_bytes = usize::try_from(m.div_ceil(8))
                    .map_err(|_| Error::Format(format!("unreasonable array size {m}")))?;
                let bits = BitArray::from_padded_bytes(r.take(n_bytes)?, m)?;
                let classifier = encoding::decode(read_block(&mut r)?)?;
                FilterArtifact::AdaBf(AdaBf::from_parts(
                    classifier,
                    thresholds,
                    hash_counts,
                    bits,
                    seed,
                    ratio,
                    groups_requested,
                    fallback,
                    train_fpr,
                ))
            }
            other => {
                return Err(Error::Format(format!(
                    "unrecognized filter variant tag {other}"
                )))
            }
        };
        r.finish()?;
        Ok(artifact)
    }
}

fn header(variant: u8, out: &mut Vec<u8>) {
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(variant);
}
