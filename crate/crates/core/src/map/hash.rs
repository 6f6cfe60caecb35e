use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pe::check_key;

/// 2^64 / golden ratio, rounded to odd.
pub const FIBONACCI_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;

/// Multiplicative hashing of keys onto buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashConfig {
    pub bucket_count: u64,
    pub multiplier: u64,
    pub seed: u64,
}

impl HashConfig {
    pub fn new(bucket_count: u64) -> Self {
        Self {
            bucket_count,
            multiplier: FIBONACCI_MULTIPLIER,
            seed: 0,
        }
    }

    /// Bucket count giving roughly half-full pages for `n_pairs` pairs.
    pub fn for_dataset(n_pairs: u64, page_capacity: usize) -> Self {
        let per_bucket = (page_capacity as u64 / 2).max(1);
        Self::new(n_pairs.div_ceil(per_bucket).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.bucket_count == 0 {
            return Err(Error::Config("bucket_count must be at least 1".into()));
        }
        if self.multiplier.is_multiple_of(2) {
            return Err(Error::Config("hash multiplier must be odd".into()));
        }
        Ok(())
    }
}

/// High 32 bits of `key * multiplier ^ seed`, reduced modulo the bucket count.
pub fn hash_key(key: u32, config: &HashConfig) -> Result<u64> {
    check_key(key)?;
    let mixed = (key as u64).wrapping_mul(config.multiplier) ^ config.seed;
    Ok((mixed >> 32) % config.bucket_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pe::EMPTY_KEY;

    #[test]
    fn single_bucket() {
        let cfg = HashConfig::new(1);
        for key in [0, 7, 1 << 31, EMPTY_KEY - 1] {
            assert_eq!(hash_key(key, &cfg).unwrap(), 0);
        }
    }

    /// Expected buckets worked out by hand with 128-bit arithmetic:
    /// bucket = floor(((key * m) mod 2^64 xor s) / 2^32) mod 16.
    #[test]
    fn hand_evaluated_buckets() {
        let cfg = HashConfig {
            bucket_count: 16,
            multiplier: FIBONACCI_MULTIPLIER,
            seed: 0x0123_4567_89AB_CDEF,
        };
        fn reference(key: u32, c: &HashConfig) -> u64 {
            let product = (key as u128 * c.multiplier as u128) % (1u128 << 64);
            let mixed = product as u64 ^ c.seed;
            (mixed / (1u64 << 32)) % c.bucket_count
        }
        // 7 * m mod 2^64 = 0x5384_5412_7B09_6493; xor seed = 0x52A7_1175_F2A2_A97C
        // high word 0x52A71175 mod 16 = 5
        assert_eq!(hash_key(7, &cfg).unwrap(), 5);
        assert_eq!(reference(7, &cfg), 5);
        for (key, bucket) in [(1u32, 14), (1000, 14), (0xDEAD_BEEF, 0)] {
            assert_eq!(reference(key, &cfg), bucket);
            assert_eq!(hash_key(key, &cfg).unwrap(), bucket);
        }
    }

    #[test]
    fn sentinel_keys_rejected() {
        let cfg = HashConfig::new(4);
        assert!(matches!(hash_key(EMPTY_KEY, &cfg), Err(Error::SentinelKey(_))));
        assert!(matches!(hash_key(u32::MAX, &cfg), Err(Error::SentinelKey(_))));
    }

    #[test]
    fn uniform_keys_spread_evenly() {
        use rand::{Rng, SeedableRng};
        let cfg = HashConfig::new(1024);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0u32; 1024];
        for _ in 0..1_000_000 {
            let key = rng.gen_range(0..EMPTY_KEY);
            counts[hash_key(key, &cfg).unwrap() as usize] += 1;
        }
        let mean = 1_000_000.0 / 1024.0;
        let max = *counts.iter().max().unwrap() as f64;
        assert!(max / mean <= 1.3, "max/mean = {}", max / mean);
    }

    #[test]
    fn config_checks() {
        assert!(HashConfig::new(0).validate().is_err());
        let even = HashConfig {
            multiplier: 2,
            ..HashConfig::new(3)
        };
        assert!(even.validate().is_err());
        assert_eq!(HashConfig::for_dataset(1_000_000, 1024).bucket_count, 1954);
        assert_eq!(HashConfig::for_dataset(0, 1024).bucket_count, 1);
    }
}
