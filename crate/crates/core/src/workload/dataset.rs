//! Key/value datasets and their binary file format.
//!
//! Little-endian, a 16-byte header then one 8-byte record per pair:
//!
//! ```text
//! magic "HMKV" | version u32 = 1 | n_pairs u64 | (key u32, value u32) * n_pairs
//! ```

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pe::{is_sentinel, EMPTY_KEY};
use crate::KV_PAIR_BYTES;

pub const DATASET_MAGIC: &[u8; 4] = b"HMKV";
pub const DATASET_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 16;

/// Usable keys: everything below the two sentinels.
pub const KEY_SPACE: u64 = EMPTY_KEY as u64;

/// A seeded microbenchmark workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_pairs: u64,
    /// Share of the dataset probed, in `(0, 1]`.
    pub probe_fraction: f64,
    /// Share of probes replaced by keys absent from the dataset, in `[0, 1]`.
    pub miss_fraction: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_pairs: 1_000_000,
            probe_fraction: 0.1,
            miss_fraction: 0.0,
            seed: 42,
        }
    }
}

impl DatasetSpec {
    pub fn generate(&self) -> Result<Vec<(u32, u32)>> {
        generate_dataset(self.n_pairs, self.seed)
    }

    /// Probe keys for `pairs`, drawn from a stream independent of the
    /// dataset's own.
    pub fn probes(&self, pairs: &[(u32, u32)]) -> Result<Vec<u32>> {
        select_probe_keys(pairs, self.probe_fraction, self.miss_fraction, probe_seed(self.seed))
    }
}

/// Seed for the probe stream derived from a dataset seed.
pub fn probe_seed(seed: u64) -> u64 {
    seed ^ 0x5EED_0F9B_0BE5
}

/// `n` pairs with distinct uniformly drawn keys and arbitrary values.
pub fn generate_dataset(n: u64, seed: u64) -> Result<Vec<(u32, u32)>> {
    if n > KEY_SPACE {
        return Err(Error::Capacity(format!("{n} pairs exceed the {KEY_SPACE}-key space")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys = index::sample(&mut rng, KEY_SPACE as usize, n as usize);
    Ok(keys.into_iter().map(|k| (k as u32, rng.gen())).collect())
}

fn check_fraction(name: &str, f: f64, allow_zero: bool) -> Result<()> {
    let ok = f <= 1.0 && if allow_zero { f >= 0.0 } else { f > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::Usage(format!("{name} {f} out of range")))
    }
}

/// `floor(fraction * n)` dataset keys, sampled without replacement in random order.
pub fn select_probes(pairs: &[(u32, u32)], fraction: f64, seed: u64) -> Result<Vec<u32>> {
    check_fraction("probe fraction", fraction, false)?;
    let count = (fraction * pairs.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, pairs.len(), count)
        .into_iter()
        .map(|i| pairs[i].0)
        .collect())
}

/// Like [`select_probes`], with `round(miss_fraction * count)` of the probes
/// replaced by keys that are not in the dataset, then shuffled.
pub fn select_probe_keys(
    pairs: &[(u32, u32)],
    fraction: f64,
    miss_fraction: f64,
    seed: u64,
) -> Result<Vec<u32>> {
    check_fraction("miss fraction", miss_fraction, true)?;
    let mut probes = select_probes(pairs, fraction, seed)?;
    let misses = (miss_fraction * probes.len() as f64).round() as usize;
    if misses == 0 {
        return Ok(probes);
    }
    if pairs.len() as u64 + misses as u64 > KEY_SPACE {
        return Err(Error::Capacity("not enough unused keys for misses".into()));
    }
    let present: HashSet<u32> = pairs.iter().map(|p| p.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
    let mut absent = HashSet::new();
    while absent.len() < misses {
        let k = rng.gen_range(0..EMPTY_KEY);
        if !present.contains(&k) {
            absent.insert(k);
        }
    }
    let mut absent: Vec<u32> = absent.into_iter().collect();
    absent.sort_unstable();
    probes.truncate(probes.len() - misses);
    probes.extend(absent);
    rand::seq::SliceRandom::shuffle(probes.as_mut_slice(), &mut rng);
    Ok(probes)
}

pub fn encode_dataset(pairs: &[(u32, u32)]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + pairs.len() * KV_PAIR_BYTES);
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(pairs.len() as u64).to_le_bytes());
    for &(k, v) in pairs {
        out.extend_from_slice(&k.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a dataset file image. Rejects sentinel or repeated keys and any
/// length mismatch with the header.
pub fn decode_dataset(bytes: &[u8]) -> Result<Vec<(u32, u32)>> {
    let bad = |msg: String| Error::Dataset(msg);
    if bytes.len() < HEADER_BYTES {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != DATASET_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DATASET_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[HEADER_BYTES..];
    if !(body.len() as u64).is_multiple_of(KV_PAIR_BYTES as u64) || body.len() as u64 / KV_PAIR_BYTES as u64 != n {
        return Err(bad(format!("header says {n} pairs but body holds {} bytes", body.len())));
    }
    let mut seen = HashSet::with_capacity(n as usize);
    body.chunks_exact(KV_PAIR_BYTES)
        .enumerate()
        .map(|(i, rec)| {
            let k = u32::from_le_bytes(rec[..4].try_into().unwrap());
            let v = u32::from_le_bytes(rec[4..].try_into().unwrap());
            if is_sentinel(k) {
                return Err(bad(format!("record {i} uses reserved key {k:#x}")));
            }
            if !seen.insert(k) {
                return Err(bad(format!("record {i} repeats key {k}")));
            }
            Ok((k, v))
        })
        .collect()
}

pub fn write_dataset(path: &Path, pairs: &[(u32, u32)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&encode_dataset(pairs))?;
    f.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<(u32, u32)>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_dataset(&bytes)
}
