//! Trace sweeps over prime ranges, backed by the cache.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use crate::arith;
use crate::cache::{CacheEntry, CacheStore, Loaded};
use crate::curve::{hasse_interval, prime_rng, CurveKey, RationalCurve, NAIVE_THRESHOLD};
use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Result of a compute-or-extend request.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub entry: Arc<CacheEntry>,
    /// Number of primes whose trace was computed by this call.
    pub computed: usize,
    /// Set when a corrupt cache file was moved aside and recomputed.
    pub quarantined: Option<PathBuf>,
}

/// Shared state for sweeps: seed, executor, cache.
///
/// Each curve key has its own writer lock, so concurrent sweeps of the same
/// curve serialize while different curves proceed independently.
#[derive(Debug)]
pub struct Engine {
    store: CacheStore,
    seed: u64,
    exec: Exec,
    naive_threshold: u64,
    memo: Mutex<HashMap<CurveKey, Arc<CacheEntry>>>,
    writers: Mutex<HashMap<CurveKey, Arc<Mutex<()>>>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(CacheStore::in_memory(), 0)
    }
}

impl Engine {
    pub fn new(store: CacheStore, seed: u64) -> Self {
        Engine {
            store,
            seed,
            exec: Exec::default(),
            naive_threshold: NAIVE_THRESHOLD,
            memo: Mutex::new(HashMap::new()),
            writers: Mutex::new(HashMap::new()),
        }
    }

    pub fn in_memory(seed: u64) -> Self {
        Engine::new(CacheStore::in_memory(), seed)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_naive_threshold(mut self, threshold: u64) -> Self {
        self.naive_threshold = threshold;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn store(&self) -> &CacheStore {
        &self.store
    }

    fn writer_lock(&self, key: CurveKey) -> Arc<Mutex<()>> {
        self.writers.lock().unwrap().entry(key).or_default().clone()
    }

    /// Ensure traces for every good p <= bound are cached and return the entry.
    pub fn sweep(&self, curve: &RationalCurve, bound: u64) -> Result<Sweep> {
        let key = curve.key();
        let lock = self.writer_lock(key);
        let _guard = lock.lock().unwrap();

        let mut quarantined = None;
        let cached = self.memo.lock().unwrap().get(&key).cloned();
        let current = match cached {
            Some(entry) => entry,
            None => match self.store.load(&key)? {
                Loaded::Found(entry) => Arc::new(entry),
                Loaded::Missing => Arc::new(CacheEntry::empty(key)),
                Loaded::Quarantined(path) => {
                    quarantined = Some(path);
                    Arc::new(CacheEntry::empty(key))
                }
            },
        };
        if current.b_max >= bound {
            self.memo.lock().unwrap().insert(key, current.clone());
            return Ok(Sweep {
                entry: current,
                computed: 0,
                quarantined,
            });
        }

        let primes: Vec<u64> = arith::primes_in(current.b_max.max(4) + 1, bound)
            .into_iter()
            .filter(|&p| curve.is_good_prime(p))
            .collect();
        let fresh = self.traces_for(curve, &primes)?;
        let mut entry = (*current).clone();
        entry.b_max = bound;
        entry.rows.extend(primes.iter().copied().zip(fresh));
        self.store.save(&entry)?;
        let entry = Arc::new(entry);
        self.memo.lock().unwrap().insert(key, entry.clone());
        Ok(Sweep {
            entry,
            computed: primes.len(),
            quarantined,
        })
    }

    /// Traces at the given good primes, uncached.
    pub fn traces_for(&self, curve: &RationalCurve, primes: &[u64]) -> Result<Vec<i64>> {
        let (seed, threshold) = (self.seed, self.naive_threshold);
        par::try_map(self.exec, primes, |&p| {
            let e = curve.reduce(p)?;
            let n = e.group_order_with(threshold, &mut prime_rng(seed, p))?;
            let (lo, hi) = hasse_interval(p);
            if !(lo..=hi).contains(&n) {
                return Err(Error::Invariant(format!(
                    "order {n} outside the Hasse interval at p = {p}"
                )));
            }
            Ok(p as i64 + 1 - n as i64)
        })
    }

    /// Ascending (p, a_p) for good p <= bound.
    pub fn traces(&self, curve: &RationalCurve, bound: u64) -> Result<Vec<(u64, i64)>> {
        let sweep = self.sweep(curve, bound)?;
        Ok(sweep.entry.rows_up_to(bound).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm_i() -> RationalCurve {
        RationalCurve::new("cm_i", 1, 0).unwrap()
    }

    #[test]
    fn small_sweep_matches_hand_counts() {
        let engine = Engine::in_memory(0);
        let rows = engine.traces(&cm_i(), 13).unwrap();
        assert_eq!(rows, vec![(5, 2), (7, 0), (11, 0), (13, -6)]);
    }

    #[test]
    fn sweep_is_idempotent_and_append_only() {
        let dir = tempfile::tempdir().unwrap();
        let engine = Engine::new(CacheStore::open(dir.path()).unwrap(), 0);
        let first = engine.sweep(&cm_i(), 100).unwrap();
        assert!(first.computed > 0);
        let again = engine.sweep(&cm_i(), 50).unwrap();
        assert_eq!(again.computed, 0);

        let path = engine.store().path_for(&cm_i().key()).unwrap();
        let before = std::fs::read(&path).unwrap();
        let wider = engine.sweep(&cm_i(), 200).unwrap();
        assert_eq!(wider.entry.rows_up_to(100), first.entry.rows.as_slice());
        let after = std::fs::read(&path).unwrap();
        let rows_len = 16 * first.entry.rows.len();
        assert_eq!(before[41..41 + rows_len], after[41..41 + rows_len]);

        // cold engine, same directory: nothing to compute
        let cold = Engine::new(CacheStore::open(dir.path()).unwrap(), 0);
        assert_eq!(cold.sweep(&cm_i(), 200).unwrap().computed, 0);
    }

    #[test]
    fn labels_share_one_entry() {
        let engine = Engine::in_memory(0);
        let a = RationalCurve::new("first", 1, 0).unwrap();
        let b = RationalCurve::new("second", 1, 0).unwrap();
        engine.sweep(&a, 300).unwrap();
        assert_eq!(engine.sweep(&b, 300).unwrap().computed, 0);
    }

    #[test]
    fn corrupt_cache_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let engine = Engine::new(CacheStore::open(dir.path()).unwrap(), 0);
        let good = engine.sweep(&cm_i(), 500).unwrap().entry;
        let path = engine.store().path_for(&cm_i().key()).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, bytes).unwrap();

        let fresh = Engine::new(CacheStore::open(dir.path()).unwrap(), 0);
        let sweep = fresh.sweep(&cm_i(), 500).unwrap();
        assert!(sweep.quarantined.is_some());
        assert_eq!(sweep.entry, good);
    }

    #[test]
    fn results_do_not_depend_on_exec_or_seed() {
        let curve = RationalCurve::new("11a1", -13392, -1080432).unwrap();
        let seq = Engine::in_memory(1)
            .with_exec(Exec::Sequential)
            .traces(&curve, 40_000)
            .unwrap();
        let par = Engine::in_memory(2)
            .with_exec(Exec::Parallel)
            .traces(&curve, 40_000)
            .unwrap();
        assert_eq!(seq, par);
    }
}
