//! Dictionary encoding of word lists into 32-bit keys.

use std::collections::{HashMap, HashSet};
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;

use crate::error::{Error, Result};
use crate::pe::{is_sentinel, EMPTY_KEY};

pub const DEFAULT_WORD_COUNT: usize = 350_000;

/// 64-bit FNV-1a folded to 32 bits by xoring the halves.
pub fn word_hash(word: &str) -> u32 {
    let mut h = FnvHasher::default();
    h.write(word.as_bytes());
    let h = h.finish();
    (h ^ (h >> 32)) as u32
}

fn next_key(k: u32) -> u32 {
    let n = k.wrapping_add(1);
    if is_sentinel(n) {
        0
    } else {
        n
    }
}

/// Keys for the distinct words among the first `max_lines` lines, in order of
/// first appearance. Surrounding whitespace is trimmed and blank lines are
/// skipped. A hash that collides with an earlier word's key, or lands on a
/// sentinel, is bumped to the next free key.
pub fn ingest_wordlist(text: &str, max_lines: usize) -> Vec<u32> {
    let mut by_word: HashMap<&str, u32> = HashMap::new();
    let mut used: HashSet<u32> = HashSet::new();
    let mut keys = Vec::new();
    for word in text.lines().take(max_lines).map(str::trim) {
        if word.is_empty() || by_word.contains_key(word) {
            continue;
        }
        let mut k = word_hash(word);
        if is_sentinel(k) {
            k = next_key(EMPTY_KEY);
        }
        while used.contains(&k) {
            k = next_key(k);
        }
        used.insert(k);
        by_word.insert(word, k);
        keys.push(k);
    }
    keys
}

pub fn ingest_wordlist_file(path: &Path, max_lines: usize) -> Result<Vec<u32>> {
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Dataset(format!("{}: not UTF-8 ({e})", path.display())))?;
    Ok(ingest_wordlist(text, max_lines))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // FNV-1a 64 of "" is the offset basis 0xcbf29ce484222325
        assert_eq!(word_hash(""), 0xcbf29ce4 ^ 0x84222325);
        // FNV-1a 64 of "a" is 0xaf63dc4c8601ec8c
        assert_eq!(word_hash("a"), 0xaf63dc4c ^ 0x8601ec8c);
    }

    #[test]
    fn examples() {
        assert!(ingest_wordlist("", 10).is_empty());
        let keys = ingest_wordlist("apple\nbanana\napple\n\n  banana \ncherry", 10);
        assert_eq!(keys.len(), 3);
        assert_eq!(keys[0], word_hash("apple"));
        assert_eq!(ingest_wordlist("a\nb\nc\nd", 2).len(), 2);
        assert_eq!(ingest_wordlist("a\r\nb\r\n", 10), ingest_wordlist("a\nb\n", 10));
    }

    #[test]
    fn collisions_renumbered() {
        assert_eq!(next_key(EMPTY_KEY - 1), 0);
        assert_eq!(next_key(5), 6);
        // many words, all keys distinct
        let text: String = (0..350_000).map(|i| format!("w{i:x}q\n")).collect();
        let keys = ingest_wordlist(&text, DEFAULT_WORD_COUNT);
        assert_eq!(keys.len(), 350_000);
        assert_eq!(keys.iter().collect::<HashSet<_>>().len(), 350_000);
        assert!(keys.iter().all(|&k| !is_sentinel(k)));
    }

    #[test]
    fn file_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(ingest_wordlist_file(&dir.path().join("nope"), 5), Err(Error::Io(_))));
        let p = dir.path().join("bin");
        std::fs::write(&p, [0xff, 0xfe, b'\n']).unwrap();
        assert!(matches!(ingest_wordlist_file(&p, 5), Err(Error::Dataset(_))));
    }
}
