//! On-disk trace cache, one file per curve key.
//!
//! Layout (little-endian):
//!
//! ```text
//! "ISORADIX1" | key: [u8; 16] | b_max: u64 | count: u64 | count × (p: u64, a_p: i64) | checksum: u64
//! ```
//!
//! The checksum is the first eight bytes of SHA-256 over everything before it.
//! Files are replaced by write-then-rename, so readers see either the old or
//! the new complete file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::curve::{hasse_interval, CurveKey};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 9] = b"ISORADIX1";
const HEADER_LEN: usize = 9 + 16 + 8 + 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheEntry {
    pub key: CurveKey,
    pub b_max: u64,
    /// Strictly ascending (p, a_p) for every good p <= b_max.
    pub rows: Vec<(u64, i64)>,
}

impl CacheEntry {
    pub fn empty(key: CurveKey) -> Self {
        CacheEntry {
            key,
            b_max: 0,
            rows: Vec::new(),
        }
    }

    /// Rows with p <= bound.
    pub fn rows_up_to(&self, bound: u64) -> &[(u64, i64)] {
        let end = self.rows.partition_point(|&(p, _)| p <= bound);
        &self.rows[..end]
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::CorruptCache(format!("rows not ascending at p = {}", w[1].0)));
            }
        }
        for &(p, a) in &self.rows {
            if p < 5 || p > self.b_max {
                return Err(Error::CorruptCache(format!("prime {p} outside [5, {}]", self.b_max)));
            }
            let (lo, hi) = hasse_interval(p);
            let n = p as i64 + 1 - a;
            if n < lo as i64 || n > hi as i64 {
                return Err(Error::CorruptCache(format!("a_{p} = {a} violates the Hasse bound")));
            }
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_LEN + 16 * self.rows.len() + 8);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&self.key.0);
        buf.extend_from_slice(&self.b_max.to_le_bytes());
        buf.extend_from_slice(&(self.rows.len() as u64).to_le_bytes());
        for &(p, a) in &self.rows {
            buf.extend_from_slice(&p.to_le_bytes());
            buf.extend_from_slice(&a.to_le_bytes());
        }
        let sum = checksum(&buf);
        buf.extend_from_slice(&sum.to_le_bytes());
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let corrupt = |msg: &str| Error::CorruptCache(msg.to_string());
        if bytes.len() < HEADER_LEN + 8 || &bytes[..9] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        if checksum(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
            return Err(corrupt("checksum mismatch"));
        }
        let u64_at = |i: usize| u64::from_le_bytes(body[i..i + 8].try_into().unwrap());
        let mut key = [0u8; 16];
        key.copy_from_slice(&body[9..25]);
        let b_max = u64_at(25);
        let count = u64_at(33) as usize;
        if body.len() != HEADER_LEN + 16 * count {
            return Err(corrupt("length does not match record count"));
        }
        let rows = (0..count)
            .map(|i| {
                let off = HEADER_LEN + 16 * i;
                (u64_at(off), u64_at(off + 8) as i64)
            })
            .collect();
        let entry = CacheEntry {
            key: CurveKey(key),
            b_max,
            rows,
        };
        entry.validate()?;
        Ok(entry)
    }
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Directory of cache files. `None` keeps everything in memory.
#[derive(Clone, Debug, Default)]
pub struct CacheStore {
    dir: Option<PathBuf>,
}

/// What `CacheStore::load` found on disk.
#[derive(Debug)]
pub enum Loaded {
    Missing,
    Found(CacheEntry),
    /// The file failed validation and was moved aside.
    Quarantined(PathBuf),
}

impl CacheStore {
    pub fn in_memory() -> Self {
        CacheStore { dir: None }
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(CacheStore { dir: Some(dir) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, key: &CurveKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.isx", key.hex())))
    }

    pub fn load(&self, key: &CurveKey) -> Result<Loaded> {
        let Some(path) = self.path_for(key) else {
            return Ok(Loaded::Missing);
        };
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Loaded::Missing),
            Err(e) => return Err(Error::io(&path, e)),
        };
        match CacheEntry::decode(&bytes) {
            Ok(entry) if entry.key == *key => Ok(Loaded::Found(entry)),
            _ => {
                let aside = path.with_extension("isx.corrupt");
                fs::rename(&path, &aside).map_err(|e| Error::io(&path, e))?;
                Ok(Loaded::Quarantined(aside))
            }
        }
    }

    pub fn save(&self, entry: &CacheEntry) -> Result<()> {
        let Some(path) = self.path_for(&entry.key) else {
            return Ok(());
        };
        let tmp = path.with_extension(format!("isx.tmp{}", std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&entry.encode())?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> CacheEntry {
        CacheEntry {
            key: CurveKey([7; 16]),
            b_max: 13,
            rows: vec![(5, 2), (7, 0), (11, 0), (13, -6)],
        }
    }

    #[test]
    fn header_starts_with_magic() {
        let bytes = sample().encode();
        assert_eq!(&bytes[..9], b"ISORADIX1");
        assert_eq!(bytes.len(), HEADER_LEN + 4 * 16 + 8);
    }

    #[test]
    fn rows_up_to_slices() {
        let e = sample();
        assert_eq!(e.rows_up_to(10), &[(5, 2), (7, 0)]);
        assert_eq!(e.rows_up_to(4), &[]);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = sample().encode();
        bytes[HEADER_LEN + 3] ^= 1;
        assert!(matches!(CacheEntry::decode(&bytes), Err(Error::CorruptCache(_))));
        let mut bytes = sample().encode();
        bytes[0] = b'X';
        assert!(CacheEntry::decode(&bytes).is_err());
        assert!(CacheEntry::decode(&bytes[..20]).is_err());
    }

    #[test]
    fn corrupt_file_is_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        let store = CacheStore::open(dir.path()).unwrap();
        let e = sample();
        store.save(&e).unwrap();
        assert!(matches!(store.load(&e.key).unwrap(), Loaded::Found(ref got) if *got == e));
        let path = store.path_for(&e.key).unwrap();
        fs::write(&path, b"ISORADIX1 garbage").unwrap();
        assert!(matches!(store.load(&e.key).unwrap(), Loaded::Quarantined(_)));
        assert!(matches!(store.load(&e.key).unwrap(), Loaded::Missing));
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(seed in any::<u64>(), len in 0usize..50) {
            let primes = crate::arith::primes_in(5, 1000);
            let rows: Vec<(u64, i64)> = primes.iter().take(len)
                .map(|&p| (p, ((seed ^ p) % 5) as i64 - 2)).collect();
            let e = CacheEntry { key: CurveKey(seed.to_le_bytes().repeat(2).try_into().unwrap()), b_max: 1000, rows };
            prop_assert_eq!(CacheEntry::decode(&e.encode()).unwrap(), e);
        }
    }
}
