//! Dataset sources: a synthetic two-dimensional generator with tunable
//! difficulty, CSV loading/saving, and k-mer encoding with negative
//! sampling for set-membership benchmarks.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Provenance};
use crate::error::{Error, Result};

/// Synthetic generator configuration. Coordinates are drawn i.i.d. from
/// `N(0, gamma)`; a point is a key when it lies above the parabola
/// `x1 > a * x0^2`. Flatter parabolas (small `a`) give the key class more
/// probability mass and a cleaner boundary geometry; label flips (`r`)
/// inject symmetric class noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Parabola steepness; must be positive.
    pub a: f64,
    /// Fraction of keys whose labels are flipped, matched by an equal count
    /// of flipped non-keys.
    pub r: f64,
    /// Non-key to key ratio: the generator draws `ceil(rho * n1)` non-keys.
    pub rho: f64,
    /// Number of keys before flips.
    pub n1: usize,
    /// Variance of each coordinate.
    pub gamma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            r: 0.0,
            rho: 1.0,
            n1: 10_000,
            gamma: 5.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn n2(&self) -> usize {
        (self.rho * self.n1 as f64).ceil() as usize
    }

    /// Total rejection-sampling draws allowed before giving up; generous for
    /// any boundary that keeps at least ~0.1% of the plane on each side.
    pub fn draw_cap(&self) -> u64 {
        1_000 * (self.n1 as u64 + self.n2() as u64) + 1_000_000
    }
}

/// Draws the dataset by per-class rejection sampling: both classes come from
/// the same `N(0, gamma I)` cloud, split by the parabola rule, so each class
/// keeps that distribution conditioned on its side of the boundary. After
/// the draw, `floor(r * n1)` keys and equally many non-keys swap labels.
/// Row order is shuffled; all of it is deterministic in the seed.
pub fn generate(cfg: &SynthConfig) -> Result<LabeledDataset> {
    if !(cfg.a > 0.0 && cfg.a.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "parabola steepness must be positive and finite, got {}",
            cfg.a
        )));
    }
    if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "coordinate variance must be positive and finite, got {}",
            cfg.gamma
        )));
    }
    if !(cfg.rho > 0.0 && cfg.rho.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "class ratio rho must be positive and finite, got {}",
            cfg.rho
        )));
    }
    if cfg.n1 == 0 {
        return Err(Error::InvalidArgument("need at least one key".into()));
    }
    if !(0.0..=1.0).contains(&cfg.r) {
        return Err(Error::InvalidArgument(format!(
            "flip fraction must lie in [0, 1], got {}",
            cfg.r
        )));
    }
    let n2 = cfg.n2();
    let flips = (cfg.r * cfg.n1 as f64).floor() as usize;
    if flips > n2 {
        return Err(Error::InvalidArgument(format!(
            "cannot flip {flips} non-keys, only {n2} exist"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std = cfg.gamma.sqrt();
    let cap = cfg.draw_cap();
    let mut drawn = 0u64;
    let mut pos: Vec<Vec<f64>> = Vec::with_capacity(cfg.n1);
    let mut neg: Vec<Vec<f64>> = Vec::with_capacity(n2);
    while pos.len() < cfg.n1 || neg.len() < n2 {
        if drawn >= cap {
            return Err(Error::SamplingExhausted {
                produced: (pos.len() + neg.len()) as u64,
                requested: (cfg.n1 + n2) as u64,
                cap,
            });
        }
        drawn += 1;
        let x0 = std * rng.sample::<f64, _>(StandardNormal);
        let x1 = std * rng.sample::<f64, _>(StandardNormal);
        let is_key = x1 > cfg.a * x0 * x0;
        if is_key {
            if pos.len() < cfg.n1 {
                pos.push(vec![x0, x1]);
            }
        } else if neg.len() < n2 {
            neg.push(vec![x0, x1]);
        }
    }

    let mut labels = vec![1u8; cfg.n1];
    labels.extend(std::iter::repeat_n(0u8, n2));
    for i in rand::seq::index::sample(&mut rng, cfg.n1, flips) {
        labels[i] = 0;
    }
    for i in rand::seq::index::sample(&mut rng, n2, flips) {
        labels[cfg.n1 + i] = 1;
    }

    let mut features = pos;
    features.append(&mut neg);
    let order = rand::seq::index::sample(&mut rng, features.len(), features.len());
    let features = order.iter().map(|i| features[i].clone()).collect();
    let labels = order.iter().map(|i| labels[i]).collect();

    LabeledDataset::new(
        features,
        labels,
        Provenance::Synthetic {
            a: cfg.a,
            r: cfg.r,
            rho: cfg.rho,
            n1: cfg.n1,
            gamma: cfg.gamma,
            seed: cfg.seed,
        },
    )
}

/// Writes `f0,...,f{q-1},label` with round-trippable float formatting.
pub fn write_csv<P: AsRef<Path>>(data: &LabeledDataset, path: P) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = (0..data.dim())
        .map(|i| format!("f{i}"))
        .chain(std::iter::once("label".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.len() {
        for v in data.row(i) {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", data.label(i))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a labeled dataset from CSV: a header row, then numeric columns
/// with the 0/1 label last.
pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<LabeledDataset> {
    let display = path.as_ref().display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(&path)
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(features.len() + 2),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(features.len() + 2);
        if record.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "need at least one feature column and a label".into(),
            });
        }
        let mut row = Vec::with_capacity(record.len() - 1);
        for field in record.iter().take(record.len() - 1) {
            row.push(field.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("bad feature value {field:?}"),
            })?);
        }
        let label_field = &record[record.len() - 1];
        let label = match label_field {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("label must be 0 or 1, got {other:?}"),
                })
            }
        };
        features.push(row);
        labels.push(label);
    }
    LabeledDataset::new(features, labels, Provenance::Csv { path: display })
}

/// [`load_csv`] plus the URL-benchmark shape check: exactly 17 features.
pub fn load_url_csv<P: AsRef<Path>>(path: P) -> Result<LabeledDataset> {
    let data = load_csv(path)?;
    if data.dim() != 17 {
        return Err(Error::InvalidArgument(format!(
            "URL datasets carry 17 feature columns, found {}",
            data.dim()
        )));
    }
    Ok(data)
}

const BASES: [char; 4] = ['A', 'T', 'C', 'G'];

fn base_code(c: char) -> Option<u8> {
    match c {
        'A' => Some(0),
        'T' => Some(1),
        'C' => Some(2),
        'G' => Some(3),
        _ => None,
    }
}

/// Maps a DNA string to its numeric feature vector: A=0, T=1, C=2, G=3,
/// one feature per position.
pub fn encode_kmer(kmer: &str) -> Result<Vec<f64>> {
    if kmer.is_empty() {
        return Err(Error::InvalidArgument("empty k-mer".into()));
    }
    kmer.chars()
        .enumerate()
        .map(|(i, c)| {
            base_code(c).map(|v| v as f64).ok_or_else(|| {
                Error::InvalidArgument(format!("invalid base {c:?} at position {i}"))
            })
        })
        .collect()
}

fn kmer_to_index(kmer: &str, k: usize) -> Result<u64> {
    if kmer.len() != k {
        return Err(Error::InvalidArgument(format!(
            "expected a {k}-mer, got {:?} of length {}",
            kmer,
            kmer.len()
        )));
    }
    let mut idx = 0u64;
    for (i, c) in kmer.chars().enumerate() {
        let code = base_code(c)
            .ok_or_else(|| Error::InvalidArgument(format!("invalid base {c:?} at position {i}")))?;
        idx = (idx << 2) | code as u64;
    }
    Ok(idx)
}

fn index_to_kmer(mut idx: u64, k: usize) -> String {
    let mut chars = vec!['A'; k];
    for i in (0..k).rev() {
        chars[i] = BASES[(idx & 3) as usize];
        idx >>= 2;
    }
    chars.into_iter().collect()
}

/// Reads one k-mer per line, requiring a consistent length and the ATCG
/// alphabet. Blank lines are rejected except a trailing newline.
pub fn load_kmer_lines<P: AsRef<Path>>(path: P) -> Result<Vec<String>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut kmers: Vec<String> = Vec::new();
    let mut k = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim().to_string();
        if line.is_empty() {
            continue;
        }
        if k == 0 {
            k = line.len();
        }
        if line.len() != k {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("k-mer length {} differs from {k}", line.len()),
            });
        }
        if let Some((pos, c)) = line
            .chars()
            .enumerate()
            .find(|(_, c)| base_code(*c).is_none())
        {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("invalid base {c:?} at position {pos}"),
            });
        }
        kmers.push(line);
    }
    if kmers.is_empty() {
        return Err(Error::InvalidArgument("no k-mers in file".into()));
    }
    Ok(kmers)
}

/// Draws `n` distinct k-mers uniformly from the complement of `exclude`
/// within the full 4^k space. Small spaces are enumerated; large spaces use
/// rejection sampling with a draw cap.
pub fn sample_negative_kmers(
    k: usize,
    n: usize,
    exclude: &[String],
    seed: u64,
) -> Result<Vec<String>> {
    if k == 0 || k > 31 {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..=31, got {k}"
        )));
    }
    let space = 1u64 << (2 * k);
    let mut excluded: HashSet<u64> = HashSet::with_capacity(exclude.len());
    for kmer in exclude {
        excluded.insert(kmer_to_index(kmer, k)?);
    }
    let available = space - excluded.len() as u64;
    if n as u64 > available {
        return Err(Error::InvalidArgument(format!(
            "requested {n} negatives but only {available} distinct {k}-mers remain"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if space <= 1 << 22 {
        let pool: Vec<u64> = (0..space).filter(|i| !excluded.contains(i)).collect();
        let picks = rand::seq::index::sample(&mut rng, pool.len(), n);
        return Ok(picks.iter().map(|i| index_to_kmer(pool[i], k)).collect());
    }

    let cap = 50 * n as u64 + 1_000_000;
    let mut drawn = 0u64;
    let mut chosen: HashSet<u64> = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if drawn >= cap {
            return Err(Error::SamplingExhausted {
                produced: out.len() as u64,
                requested: n as u64,
                cap,
            });
        }
        drawn += 1;
        let idx = rng.gen_range(0..space);
        if !excluded.contains(&idx) && chosen.insert(idx) {
            out.push(index_to_kmer(idx, k));
        }
    }
    Ok(out)
}

/// Encodes keys (label 1) and sampled negatives (label 0) into a dataset.
pub fn kmer_dataset(keys: &[String], negatives: &[String]) -> Result<LabeledDataset> {
    if keys.is_empty() {
        return Err(Error::InvalidArgument("no key k-mers".into()));
    }
    let k = keys[0].len();
    let mut features = Vec::with_capacity(keys.len() + negatives.len());
    let mut labels = Vec::with_capacity(keys.len() + negatives.len());
    for kmer in keys.iter().chain(negatives) {
        if kmer.len() != k {
            return Err(Error::InvalidArgument(format!(
                "k-mer {kmer:?} has length {}, expected {k}",
                kmer.len()
            )));
        }
        features.push(encode_kmer(kmer)?);
        labels.push(0);
    }
    for l in labels.iter_mut().take(keys.len()) {
        *l = 1;
    }
    LabeledDataset::new(features, labels, Provenance::Kmer { k })
}
