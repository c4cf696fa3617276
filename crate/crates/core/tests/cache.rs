use std::sync::Arc;

use isoradix::cache::{CacheEntry, CacheStore, MAGIC};
use isoradix::radical;
use isoradix::{Engine, RationalCurve};

fn curve() -> RationalCurve {
    RationalCurve::new("37a1", -1296, 11664).unwrap()
}

#[test]
fn warm_cache_reproduces_cold_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let ells = radical::default_ells();
    let cold = {
        let engine = Engine::new(CacheStore::open(dir.path()).unwrap(), 0);
        radical::fingerprint(&engine, &curve(), 20_000, &ells, 1).unwrap()
    };
    let engine = Engine::new(CacheStore::open(dir.path()).unwrap(), 99);
    assert_eq!(engine.sweep(&curve(), 20_000).unwrap().computed, 0);
    let warm = radical::fingerprint(&engine, &curve(), 20_000, &ells, 1).unwrap();
    assert_eq!(cold.matrix_bytes(), warm.matrix_bytes());
    assert_eq!(cold, warm);
}

#[test]
fn file_layout_starts_with_magic() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Engine::new(CacheStore::open(dir.path()).unwrap(), 0);
    engine.sweep(&curve(), 1000).unwrap();
    let path = engine.store().path_for(&curve().key()).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..MAGIC.len()], MAGIC);
    let entry = CacheEntry::decode(&bytes).unwrap();
    assert_eq!(entry.b_max, 1000);
    assert_eq!(entry.key, curve().key());
}

#[test]
fn truncated_file_is_quarantined_and_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let reference = Engine::in_memory(0).traces(&curve(), 3000).unwrap();
    let path = {
        let engine = Engine::new(CacheStore::open(dir.path()).unwrap(), 0);
        engine.sweep(&curve(), 3000).unwrap();
        engine.store().path_for(&curve().key()).unwrap()
    };
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();

    let engine = Engine::new(CacheStore::open(dir.path()).unwrap(), 0);
    let s = engine.sweep(&curve(), 3000).unwrap();
    assert!(s.quarantined.is_some());
    assert!(s.quarantined.unwrap().exists());
    assert_eq!(s.entry.rows, reference);
    assert!(CacheEntry::decode(&std::fs::read(&path).unwrap()).is_ok());
}

#[test]
fn concurrent_sweeps_of_one_curve_agree() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(Engine::new(CacheStore::open(dir.path()).unwrap(), 0));
    let handles: Vec<_> = [4000u64, 8000, 2000, 8000]
        .into_iter()
        .map(|b| {
            let engine = engine.clone();
            std::thread::spawn(move || engine.traces(&curve(), b).unwrap())
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let full = Engine::in_memory(0).traces(&curve(), 8000).unwrap();
    for r in results {
        assert_eq!(r.as_slice(), &full[..r.len()]);
    }
    let on_disk =
        CacheEntry::decode(&std::fs::read(engine.store().path_for(&curve().key()).unwrap()).unwrap()).unwrap();
    assert_eq!(on_disk.rows, full);
}

#[test]
fn unwritable_cache_dir_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("not_a_dir");
    std::fs::write(&file, b"x").unwrap();
    let err = CacheStore::open(&file).unwrap_err();
    assert!(!err.is_internal());
}
